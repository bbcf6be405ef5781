//! Convolutional autoencoder over complex scattering tiles.
//!
//! Residual encoder stages halve the spatial extent and double the channel
//! count; the decoder mirrors them with upsampling. An optional dense
//! bottleneck compresses the innermost feature map. The real-valued twin sees
//! each complex channel as two stacked real planes and grows its widths by
//! sqrt(2) so both networks spend the same number of real parameters.

use rand::Rng;

use crate::cxcore::{make_op_output, CTensor, CxError, Real, Result};
use crate::cxnn::act::{ActLayer, Activation};
use crate::cxnn::conv::Conv2d;
use crate::cxnn::init::Init;
use crate::cxnn::linear::Linear;
use crate::cxnn::norm::BatchNorm;
use crate::cxnn::pool::avg_pool2d;
use crate::cxnn::resample::{upsample, UpsampleMode};

/// Rewrites `[B,C,...]` complex as `[B,2C,...]` real planes: channels `0..C`
/// carry the real parts, `C..2C` the imaginary parts.
pub fn stack_reim<T: Real>(x: &CTensor<T>) -> Result<CTensor<T>> {
    let sh = x.shape();
    if sh.len() < 2 {
        return Err(CxError::shape("stack_reim", format!("need rank >= 2, got {sh:?}")));
    }
    let (b_n, c_n) = (sh[0], sh[1]);
    let block: usize = sh[2..].iter().product();
    let mut out_shape = sh.to_vec();
    out_shape[1] = 2 * c_n;
    let n = b_n * 2 * c_n * block;
    let mut re = vec![T::zero(); n];
    for b in 0..b_n {
        let src = b * c_n * block;
        let dst = b * 2 * c_n * block;
        re[dst..dst + c_n * block].copy_from_slice(&x.re()[src..src + c_n * block]);
        re[dst + c_n * block..dst + 2 * c_n * block]
            .copy_from_slice(&x.im()[src..src + c_n * block]);
    }
    let p = x.clone();
    Ok(make_op_output(out_shape, re, vec![T::zero(); n], "stack_reim", vec![x.clone()], move || {
        Box::new(move |g| {
            let m = p.len();
            let mut gre = vec![T::zero(); m];
            let mut gim = vec![T::zero(); m];
            for b in 0..b_n {
                let dst = b * c_n * block;
                let src = b * 2 * c_n * block;
                gre[dst..dst + c_n * block].copy_from_slice(&g.re[src..src + c_n * block]);
                gim[dst..dst + c_n * block]
                    .copy_from_slice(&g.re[src + c_n * block..src + 2 * c_n * block]);
            }
            p.accumulate_grad(&gre, &gim);
        })
    }))
}

/// Inverse of [`stack_reim`]: `[B,2C,...]` real planes back to `[B,C,...]`.
pub fn unstack_reim<T: Real>(x: &CTensor<T>) -> Result<CTensor<T>> {
    let sh = x.shape();
    if sh.len() < 2 || !sh[1].is_multiple_of(2) {
        return Err(CxError::shape("unstack_reim", format!("need even channel count, got {sh:?}")));
    }
    let (b_n, c2) = (sh[0], sh[1]);
    let c_n = c2 / 2;
    let block: usize = sh[2..].iter().product();
    let mut out_shape = sh.to_vec();
    out_shape[1] = c_n;
    let n = b_n * c_n * block;
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for b in 0..b_n {
        let src = b * c2 * block;
        let dst = b * c_n * block;
        re[dst..dst + c_n * block].copy_from_slice(&x.re()[src..src + c_n * block]);
        im[dst..dst + c_n * block]
            .copy_from_slice(&x.re()[src + c_n * block..src + c2 * block]);
    }
    let p = x.clone();
    Ok(make_op_output(out_shape, re, im, "unstack_reim", vec![x.clone()], move || {
        Box::new(move |g| {
            let m = p.len();
            let mut gre = vec![T::zero(); m];
            let gim = vec![T::zero(); m];
            for b in 0..b_n {
                let dst = b * c2 * block;
                let src = b * c_n * block;
                gre[dst..dst + c_n * block].copy_from_slice(&g.re[src..src + c_n * block]);
                gre[dst + c_n * block..dst + c2 * block]
                    .copy_from_slice(&g.im[src..src + c_n * block]);
            }
            p.accumulate_grad(&gre, &gim);
        })
    }))
}

/// How encoder stages shrink the spatial extent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Downsample {
    /// Stride-2 first convolution inside the block.
    StridedConv,
    /// 2x2 average pooling ahead of a stride-1 block.
    AvgPool,
}

impl Downsample {
    pub fn from_name(name: &str) -> Option<Downsample> {
        match name {
            "strided" => Some(Downsample::StridedConv),
            "avgpool" => Some(Downsample::AvgPool),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Downsample::StridedConv => "strided",
            Downsample::AvgPool => "avgpool",
        }
    }
}

/// Two convolutions with a residual skip; the skip becomes a learned 1x1
/// projection whenever channels or resolution change.
#[derive(Clone)]
pub struct ResBlock<T: Real> {
    conv1: Conv2d<T>,
    act1: ActLayer<T>,
    bn1: BatchNorm<T>,
    conv2: Conv2d<T>,
    act2: ActLayer<T>,
    bn2: BatchNorm<T>,
    skip: Option<Conv2d<T>>,
    pool_first: usize,
}

impl<T: Real> ResBlock<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cin: usize,
        cout: usize,
        kernel: usize,
        factor: usize,
        mode: Downsample,
        act: Activation,
        init: Init,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let pad = kernel / 2;
        let real = init.is_real();
        let (stride1, pool_first, skip_stride) = match mode {
            Downsample::StridedConv => (factor, 1, factor),
            Downsample::AvgPool => (1, factor, 1),
        };
        let skip = if cin != cout || skip_stride > 1 {
            Some(Conv2d::new(cin, cout, 1, skip_stride, 0, init, rng)?)
        } else {
            None
        };
        Ok(ResBlock {
            conv1: Conv2d::new(cin, cout, kernel, stride1, pad, init, rng)?,
            act1: ActLayer::new(act, cout),
            bn1: BatchNorm::new(cout, real),
            conv2: Conv2d::new(cout, cout, kernel, 1, pad, init, rng)?,
            act2: ActLayer::new(act, cout),
            bn2: BatchNorm::new(cout, real),
            skip,
            pool_first,
        })
    }

    pub fn forward(&mut self, x: &CTensor<T>, train: bool) -> Result<CTensor<T>> {
        let x0 = if self.pool_first > 1 {
            avg_pool2d(x, self.pool_first, self.pool_first)?
        } else {
            x.clone()
        };
        let h = self.bn1.forward(&self.act1.forward(&self.conv1.forward(&x0)?)?, train)?;
        let h = self.bn2.forward(&self.act2.forward(&self.conv2.forward(&h)?)?, train)?;
        let sk = match &self.skip {
            Some(proj) => proj.forward(&x0)?,
            None => x0,
        };
        sk.add(&h)
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        self.conv1.visit(&format!("{prefix}.conv1"), f);
        self.act1.visit(&format!("{prefix}.act1"), f);
        self.bn1.visit(&format!("{prefix}.bn1"), f);
        self.conv2.visit(&format!("{prefix}.conv2"), f);
        self.act2.visit(&format!("{prefix}.act2"), f);
        self.bn2.visit(&format!("{prefix}.bn2"), f);
        if let Some(proj) = &self.skip {
            proj.visit(&format!("{prefix}.skip"), f);
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        self.conv1.visit_mut(&format!("{prefix}.conv1"), f);
        self.act1.visit_mut(&format!("{prefix}.act1"), f);
        self.bn1.visit_mut(&format!("{prefix}.bn1"), f);
        self.conv2.visit_mut(&format!("{prefix}.conv2"), f);
        self.act2.visit_mut(&format!("{prefix}.act2"), f);
        self.bn2.visit_mut(&format!("{prefix}.bn2"), f);
        if let Some(proj) = &mut self.skip {
            proj.visit_mut(&format!("{prefix}.skip"), f);
        }
    }

    pub fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(String, &Vec<T>)) {
        self.bn1.visit_buffers(&format!("{prefix}.bn1"), f);
        self.bn2.visit_buffers(&format!("{prefix}.bn2"), f);
    }

    pub fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Vec<T>)) {
        self.bn1.visit_buffers_mut(&format!("{prefix}.bn1"), f);
        self.bn2.visit_buffers_mut(&format!("{prefix}.bn2"), f);
    }
}

/// Dense compression of the innermost feature map.
#[derive(Clone)]
pub struct Bottleneck<T: Real> {
    lin1: Linear<T>,
    act1: ActLayer<T>,
    bn1: BatchNorm<T>,
    lin2: Linear<T>,
    act2: ActLayer<T>,
    bn2: BatchNorm<T>,
    channels: usize,
    height: usize,
    width: usize,
}

impl<T: Real> Bottleneck<T> {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        latent: usize,
        act: Activation,
        init: Init,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let flat = channels * height * width;
        let real = init.is_real();
        Ok(Bottleneck {
            lin1: Linear::new(flat, latent, init, rng)?,
            act1: ActLayer::new(act, latent),
            bn1: BatchNorm::new(latent, real),
            lin2: Linear::new(latent, flat, init, rng)?,
            act2: ActLayer::new(act, flat),
            bn2: BatchNorm::new(flat, real),
            channels,
            height,
            width,
        })
    }

    pub fn forward(&mut self, x: &CTensor<T>, train: bool) -> Result<CTensor<T>> {
        let sh = x.shape().to_vec();
        let flat = self.channels * self.height * self.width;
        let h = x.reshape(&[sh[0], flat])?;
        let h = self.bn1.forward(&self.act1.forward(&self.lin1.forward(&h)?)?, train)?;
        let h = self.bn2.forward(&self.act2.forward(&self.lin2.forward(&h)?)?, train)?;
        h.reshape(&sh)
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        self.lin1.visit(&format!("{prefix}.lin1"), f);
        self.act1.visit(&format!("{prefix}.act1"), f);
        self.bn1.visit(&format!("{prefix}.bn1"), f);
        self.lin2.visit(&format!("{prefix}.lin2"), f);
        self.act2.visit(&format!("{prefix}.act2"), f);
        self.bn2.visit(&format!("{prefix}.bn2"), f);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        self.lin1.visit_mut(&format!("{prefix}.lin1"), f);
        self.act1.visit_mut(&format!("{prefix}.act1"), f);
        self.bn1.visit_mut(&format!("{prefix}.bn1"), f);
        self.lin2.visit_mut(&format!("{prefix}.lin2"), f);
        self.act2.visit_mut(&format!("{prefix}.act2"), f);
        self.bn2.visit_mut(&format!("{prefix}.bn2"), f);
    }

    pub fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(String, &Vec<T>)) {
        self.bn1.visit_buffers(&format!("{prefix}.bn1"), f);
        self.bn2.visit_buffers(&format!("{prefix}.bn2"), f);
    }

    pub fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Vec<T>)) {
        self.bn1.visit_buffers_mut(&format!("{prefix}.bn1"), f);
        self.bn2.visit_buffers_mut(&format!("{prefix}.bn2"), f);
    }
}

/// Autoencoder hyper-parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AeConfig {
    /// Polarimetric channels in the complex input (3 or 4).
    pub in_channels: usize,
    /// Channel count after the stem convolution.
    pub width: usize,
    /// Number of halving/doubling stages.
    pub depth: usize,
    /// Convolution kernel extent (odd).
    pub kernel: usize,
    /// Bottleneck size; 0 disables the dense bottleneck.
    pub latent: usize,
    /// Square tile extent the model is built for.
    pub tile: usize,
    pub activation: Activation,
    pub downsample: Downsample,
    pub upsample: UpsampleMode,
    pub init: Init,
    /// Build the real-valued twin.
    pub real: bool,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            in_channels: 4,
            width: 16,
            depth: 2,
            kernel: 3,
            latent: 0,
            tile: 32,
            activation: Activation::CRelu,
            downsample: Downsample::StridedConv,
            upsample: UpsampleMode::Nearest,
            init: Init::ComplexHeNormal,
            real: false,
        }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CxError::contract("ae_config", msg));
        if self.in_channels == 0 || self.width == 0 || self.depth == 0 || self.tile == 0 {
            return fail("channels, width, depth and tile must be positive".into());
        }
        if self.kernel.is_multiple_of(2) || self.kernel == 0 {
            return fail(format!("kernel must be odd, got {}", self.kernel));
        }
        let shrink = 1usize << self.depth;
        if !self.tile.is_multiple_of(shrink) || self.tile / shrink == 0 {
            return fail(format!("tile {} not divisible by 2^depth = {shrink}", self.tile));
        }
        Ok(())
    }

    /// Channel count entering stage `i` (0 = stem output).
    fn stage_channels(&self, i: usize) -> usize {
        let base = self.width << i;
        if self.real {
            ((base as f64) * 2f64.sqrt()).round() as usize
        } else {
            base
        }
    }

    fn stem_in(&self) -> usize {
        if self.real {
            2 * self.in_channels
        } else {
            self.in_channels
        }
    }

    fn effective_latent(&self) -> usize {
        if self.real {
            ((self.latent as f64) * 2f64.sqrt()).round() as usize
        } else {
            self.latent
        }
    }

    /// Configuration of the parameter-matched real twin.
    pub fn real_twin(&self) -> AeConfig {
        let mut cfg = self.clone();
        cfg.real = true;
        cfg.activation = Activation::RealRelu;
        cfg.init = match self.init {
            Init::ComplexHeUniform | Init::RealHeUniform => Init::RealHeUniform,
            _ => Init::RealHeNormal,
        };
        cfg
    }
}

/// Residual convolutional autoencoder.
#[derive(Clone)]
pub struct AutoEncoder<T: Real> {
    pub cfg: AeConfig,
    conv_in: Conv2d<T>,
    enc: Vec<ResBlock<T>>,
    bottleneck: Option<Bottleneck<T>>,
    dec: Vec<ResBlock<T>>,
    conv_out: Conv2d<T>,
}

impl<T: Real> AutoEncoder<T> {
    pub fn new(cfg: &AeConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let act = if cfg.real { Activation::RealRelu } else { cfg.activation };
        let init = cfg.init;
        let pad = cfg.kernel / 2;
        let conv_in = Conv2d::new(cfg.stem_in(), cfg.stage_channels(0), cfg.kernel, 1, pad, init, rng)?;
        let mut enc = Vec::with_capacity(cfg.depth);
        for i in 1..=cfg.depth {
            enc.push(ResBlock::new(
                cfg.stage_channels(i - 1),
                cfg.stage_channels(i),
                cfg.kernel,
                2,
                cfg.downsample,
                act,
                init,
                rng,
            )?);
        }
        let inner_c = cfg.stage_channels(cfg.depth);
        let inner_hw = cfg.tile >> cfg.depth;
        let bottleneck = if cfg.latent > 0 {
            Some(Bottleneck::new(inner_c, inner_hw, inner_hw, cfg.effective_latent(), act, init, rng)?)
        } else {
            None
        };
        let mut dec = Vec::with_capacity(cfg.depth);
        for i in (1..=cfg.depth).rev() {
            dec.push(ResBlock::new(
                cfg.stage_channels(i),
                cfg.stage_channels(i - 1),
                cfg.kernel,
                1,
                Downsample::StridedConv,
                act,
                init,
                rng,
            )?);
        }
        let conv_out = Conv2d::new(cfg.stage_channels(0), cfg.stem_in(), cfg.kernel, 1, pad, init, rng)?;
        Ok(AutoEncoder { cfg: cfg.clone(), conv_in, enc, bottleneck, dec, conv_out })
    }

    pub fn forward(&mut self, x: &CTensor<T>, train: bool) -> Result<CTensor<T>> {
        let sh = x.shape();
        if sh.len() != 4 || sh[1] != self.cfg.in_channels {
            return Err(CxError::shape(
                "autoencoder",
                format!("expected [B,{},H,W], got {sh:?}", self.cfg.in_channels),
            ));
        }
        let mut h = if self.cfg.real { stack_reim(x)? } else { x.clone() };
        h = self.conv_in.forward(&h)?;
        for blk in &mut self.enc {
            h = blk.forward(&h, train)?;
        }
        if let Some(bt) = &mut self.bottleneck {
            h = bt.forward(&h, train)?;
        }
        for blk in &mut self.dec {
            h = upsample(&h, 2, self.cfg.upsample)?;
            h = blk.forward(&h, train)?;
        }
        h = self.conv_out.forward(&h)?;
        if self.cfg.real {
            unstack_reim(&h)
        } else {
            Ok(h)
        }
    }

    pub fn visit_params(&self, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        self.conv_in.visit("conv_in", f);
        for (i, blk) in self.enc.iter().enumerate() {
            blk.visit(&format!("enc{i}"), f);
        }
        if let Some(bt) = &self.bottleneck {
            bt.visit("bottleneck", f);
        }
        for (i, blk) in self.dec.iter().enumerate() {
            blk.visit(&format!("dec{i}"), f);
        }
        self.conv_out.visit("conv_out", f);
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        self.conv_in.visit_mut("conv_in", f);
        for (i, blk) in self.enc.iter_mut().enumerate() {
            blk.visit_mut(&format!("enc{i}"), f);
        }
        if let Some(bt) = &mut self.bottleneck {
            bt.visit_mut("bottleneck", f);
        }
        for (i, blk) in self.dec.iter_mut().enumerate() {
            blk.visit_mut(&format!("dec{i}"), f);
        }
        self.conv_out.visit_mut("conv_out", f);
    }

    pub fn visit_buffers(&self, f: &mut dyn FnMut(String, &Vec<T>)) {
        for (i, blk) in self.enc.iter().enumerate() {
            blk.visit_buffers(&format!("enc{i}"), f);
        }
        if let Some(bt) = &self.bottleneck {
            bt.visit_buffers("bottleneck", f);
        }
        for (i, blk) in self.dec.iter().enumerate() {
            blk.visit_buffers(&format!("dec{i}"), f);
        }
    }

    pub fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(String, &mut Vec<T>)) {
        for (i, blk) in self.enc.iter_mut().enumerate() {
            blk.visit_buffers_mut(&format!("enc{i}"), f);
        }
        if let Some(bt) = &mut self.bottleneck {
            bt.visit_buffers_mut("bottleneck", f);
        }
        for (i, blk) in self.dec.iter_mut().enumerate() {
            blk.visit_buffers_mut(&format!("dec{i}"), f);
        }
    }

    /// Trainable degrees of freedom counted in real scalars.
    pub fn param_count_real_scalars(&self) -> usize {
        let mut n = 0usize;
        self.visit_params(&mut |_, t, real| {
            n += if real { t.len() } else { 2 * t.len() };
        });
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    #[test]
    fn stack_and_unstack_are_inverse() {
        let mut rng = testkit::rng(3);
        let x = testkit::rand_tensor(&mut rng, &[2, 3, 4, 4], 1.0);
        let s = stack_reim(&x).unwrap();
        assert_eq!(s.shape(), &[2, 6, 4, 4]);
        assert!(s.im().iter().all(|v| *v == 0.0));
        let back = unstack_reim(&s).unwrap();
        assert_eq!(back.shape(), x.shape());
        for k in 0..x.len() {
            assert_eq!(back.re()[k], x.re()[k]);
            assert_eq!(back.im()[k], x.im()[k]);
        }
    }

    #[test]
    fn stacked_planes_sit_in_the_documented_channel_order() {
        let x = CTensor::<f64>::from_parts(&[1, 2, 1, 1], vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let s = stack_reim(&x).unwrap();
        assert_eq!(s.re(), &[1.0, 2.0, 3.0, 4.0]);
    }

    fn forward_shape(cfg: &AeConfig) {
        let mut rng = testkit::rng(9);
        let mut ae = AutoEncoder::<f64>::new(cfg, &mut rng).unwrap();
        let x = testkit::rand_tensor(&mut rng, &[2, cfg.in_channels, cfg.tile, cfg.tile], 1.0);
        let y = ae.forward(&x, true).unwrap();
        assert_eq!(y.shape(), x.shape(), "{cfg:?}");
        let y = ae.forward(&x, false).unwrap();
        assert_eq!(y.shape(), x.shape());
    }

    #[test]
    fn reconstruction_shape_matches_input_across_configurations() {
        let base = AeConfig {
            in_channels: 3,
            width: 4,
            depth: 2,
            kernel: 3,
            latent: 0,
            tile: 16,
            ..AeConfig::default()
        };
        forward_shape(&base);
        forward_shape(&AeConfig { latent: 8, ..base.clone() });
        forward_shape(&AeConfig { downsample: Downsample::AvgPool, ..base.clone() });
        forward_shape(&AeConfig { upsample: UpsampleMode::Bilinear, ..base.clone() });
        forward_shape(&AeConfig { activation: Activation::ZRelu, ..base.clone() });
        forward_shape(&AeConfig { activation: Activation::ModRelu, ..base.clone() });
        forward_shape(&AeConfig { activation: Activation::Cardioid, ..base.clone() });
        forward_shape(&base.real_twin());
        forward_shape(&AeConfig { latent: 8, ..base.real_twin() });
    }

    #[test]
    fn real_twin_parameter_count_stays_within_five_percent() {
        let mut rng = testkit::rng(1);
        let cfg = AeConfig::default();
        let cvnn = AutoEncoder::<f64>::new(&cfg, &mut rng).unwrap();
        let rvnn = AutoEncoder::<f64>::new(&cfg.real_twin(), &mut rng).unwrap();
        let a = cvnn.param_count_real_scalars() as f64;
        let b = rvnn.param_count_real_scalars() as f64;
        assert!((a - b).abs() / a < 0.05, "cvnn {a} rvnn {b}");
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let bad_kernel = AeConfig { kernel: 4, ..AeConfig::default() };
        assert!(bad_kernel.validate().is_err());
        let bad_tile = AeConfig { tile: 36, depth: 3, ..AeConfig::default() };
        assert!(bad_tile.validate().is_err());
    }
}
