//! AdamW with decoupled weight decay over complex parameters.
//!
//! Moments are tracked per real component, so a complex parameter carries two
//! independent (m, v) pairs. Decay multiplies the weight directly instead of
//! entering the gradient, and a parameter that received no gradient this step
//! still decays. Any non-finite gradient aborts the step before any weight
//! has been touched.

use std::collections::BTreeMap;

use crate::cxcore::{CTensor, CxError, GradBuf, Real, Result};
use crate::cxnn::checkpoint::TensorRecord;

/// Anything that exposes its trainable leaves by stable name.
pub trait ParamModel<T: Real> {
    fn visit_params(&self, f: &mut dyn FnMut(String, &CTensor<T>, bool));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(String, &mut CTensor<T>, bool));
}

impl<T: Real> ParamModel<T> for crate::cxnn::model::AutoEncoder<T> {
    fn visit_params(&self, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        // Inherent method of the same name wins resolution here.
        AutoEncoder::visit_params(self, f);
    }
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        AutoEncoder::visit_params_mut(self, f);
    }
}

use crate::cxnn::model::AutoEncoder;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

#[derive(Clone)]
struct Moments<T> {
    m_re: Vec<T>,
    m_im: Vec<T>,
    v_re: Vec<T>,
    v_im: Vec<T>,
}

impl<T: Real> Moments<T> {
    fn zeros(n: usize) -> Self {
        Moments {
            m_re: vec![T::zero(); n],
            m_im: vec![T::zero(); n],
            v_re: vec![T::zero(); n],
            v_im: vec![T::zero(); n],
        }
    }
}

#[derive(Clone)]
pub struct AdamW<T: Real> {
    pub cfg: AdamWConfig,
    step: u64,
    moments: BTreeMap<String, Moments<T>>,
}

impl<T: Real> AdamW<T> {
    pub fn new(cfg: AdamWConfig) -> Self {
        AdamW { cfg, step: 0, moments: BTreeMap::new() }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn set_step_count(&mut self, step: u64) {
        self.step = step;
    }

    /// Applies one update using gradients accumulated on the model's leaves.
    pub fn step(&mut self, model: &mut dyn ParamModel<T>) -> Result<()> {
        let mut grads: BTreeMap<String, GradBuf<T>> = BTreeMap::new();
        let mut bad: Option<String> = None;
        model.visit_params(&mut |name, p, _| {
            let g = p.grad().unwrap_or_else(|| GradBuf::zeros(p.len()));
            if bad.is_none()
                && (g.re.iter().any(|v| !v.is_finite()) || g.im.iter().any(|v| !v.is_finite()))
            {
                bad = Some(name.clone());
            }
            grads.insert(name, g);
        });
        if let Some(name) = bad {
            return Err(CxError::numeric("adamw", format!("non-finite gradient on `{name}`")));
        }

        self.step += 1;
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let one = T::one();
        let bc1 = one - T::from_f64(self.cfg.beta1.powi(self.step as i32));
        let bc2 = one - T::from_f64(self.cfg.beta2.powi(self.step as i32));
        let lr = T::from_f64(self.cfg.lr);
        let eps = T::from_f64(self.cfg.eps);
        let keep = one - lr * T::from_f64(self.cfg.weight_decay);

        let moments = &mut self.moments;
        let mut failed: Option<CxError> = None;
        model.visit_params_mut(&mut |name, p, _| {
            if failed.is_some() {
                return;
            }
            let g = grads.remove(&name).expect("visit order is stable");
            let mom = moments.entry(name).or_insert_with(|| Moments::zeros(p.len()));
            let mut re = p.re().to_vec();
            let mut im = p.im().to_vec();
            for k in 0..re.len() {
                mom.m_re[k] = b1 * mom.m_re[k] + (one - b1) * g.re[k];
                mom.m_im[k] = b1 * mom.m_im[k] + (one - b1) * g.im[k];
                mom.v_re[k] = b2 * mom.v_re[k] + (one - b2) * g.re[k] * g.re[k];
                mom.v_im[k] = b2 * mom.v_im[k] + (one - b2) * g.im[k] * g.im[k];
                let mh_re = mom.m_re[k] / bc1;
                let mh_im = mom.m_im[k] / bc1;
                let vh_re = mom.v_re[k] / bc2;
                let vh_im = mom.v_im[k] / bc2;
                re[k] = re[k] * keep - lr * mh_re / (vh_re.sqrt() + eps);
                im[k] = im[k] * keep - lr * mh_im / (vh_im.sqrt() + eps);
            }
            match CTensor::from_parts(p.shape(), re, im) {
                Ok(fresh) => *p = fresh.requires_grad(),
                Err(e) => failed = Some(e),
            }
        });
        match failed {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Moment buffers as named tensors for checkpointing.
    pub fn export_state(&self) -> Vec<(String, TensorRecord<T>)> {
        let mut out = Vec::new();
        for (name, mom) in &self.moments {
            let n = mom.m_re.len();
            out.push((format!("adamw.m.{name}"), (vec![n], mom.m_re.clone(), mom.m_im.clone())));
            out.push((format!("adamw.v.{name}"), (vec![n], mom.v_re.clone(), mom.v_im.clone())));
        }
        out
    }

    /// Restores a moment tensor exported by [`export_state`]; unknown names
    /// are rejected so corrupted checkpoints fail loudly.
    pub fn import_entry(&mut self, name: &str, re: Vec<T>, im: Vec<T>) -> Result<()> {
        let (kind, param) = name
            .strip_prefix("adamw.")
            .and_then(|rest| rest.split_once('.'))
            .ok_or_else(|| CxError::contract("adamw", format!("unknown state entry `{name}`")))?;
        let mom = self
            .moments
            .entry(param.to_string())
            .or_insert_with(|| Moments::zeros(re.len()));
        if mom.m_re.len() != re.len() {
            return Err(CxError::shape("adamw", format!("state length mismatch for `{name}`")));
        }
        match kind {
            "m" => {
                mom.m_re = re;
                mom.m_im = im;
            }
            "v" => {
                mom.v_re = re;
                mom.v_im = im;
            }
            _ => return Err(CxError::contract("adamw", format!("unknown state entry `{name}`"))),
        }
        Ok(())
    }
}
