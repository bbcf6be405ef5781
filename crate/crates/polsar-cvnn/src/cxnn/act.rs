//! Complex activation functions: CReLU, zReLU, modReLU, Cardioid.
//!
//! All four act elementwise and are zero outside their active region. None is
//! holomorphic, so each op carries its own real-pair backward rule; modReLU
//! additionally owns a trainable per-channel dead-zone bias.

use crate::cxcore::{make_op_output, CTensor, CxError, Real, Result};
use crate::cxnn::init::zero_param;

/// Activation kind; `RealRelu` is the real-valued twin's nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    CRelu,
    ZRelu,
    ModRelu,
    Cardioid,
    RealRelu,
}

impl Activation {
    pub fn from_name(name: &str) -> Option<Activation> {
        match name {
            "crelu" => Some(Activation::CRelu),
            "zrelu" => Some(Activation::ZRelu),
            "modrelu" => Some(Activation::ModRelu),
            "cardioid" => Some(Activation::Cardioid),
            "relu" => Some(Activation::RealRelu),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::CRelu => "crelu",
            Activation::ZRelu => "zrelu",
            Activation::ModRelu => "modrelu",
            Activation::Cardioid => "cardioid",
            Activation::RealRelu => "relu",
        }
    }
}

/// `CReLU(z) = ReLU(x) + j ReLU(y)`.
pub fn crelu<T: Real>(x: &CTensor<T>) -> CTensor<T> {
    let n = x.len();
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for i in 0..n {
        if x.re()[i] > T::zero() {
            re[i] = x.re()[i];
        }
        if x.im()[i] > T::zero() {
            im[i] = x.im()[i];
        }
    }
    let p = x.clone();
    make_op_output(x.shape().to_vec(), re, im, "crelu", vec![x.clone()], move || {
        Box::new(move |g| {
            let n = p.len();
            let mut gre = vec![T::zero(); n];
            let mut gim = vec![T::zero(); n];
            for i in 0..n {
                if p.re()[i] > T::zero() {
                    gre[i] = g.re[i];
                }
                if p.im()[i] > T::zero() {
                    gim[i] = g.im[i];
                }
            }
            p.accumulate_grad(&gre, &gim);
        })
    })
}

/// `zReLU(z) = z` when `arg z` lies in the first quadrant, else 0.
pub fn zrelu<T: Real>(x: &CTensor<T>) -> CTensor<T> {
    let n = x.len();
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for i in 0..n {
        if x.re()[i] >= T::zero() && x.im()[i] >= T::zero() {
            re[i] = x.re()[i];
            im[i] = x.im()[i];
        }
    }
    let p = x.clone();
    make_op_output(x.shape().to_vec(), re, im, "zrelu", vec![x.clone()], move || {
        Box::new(move |g| {
            let n = p.len();
            let mut gre = vec![T::zero(); n];
            let mut gim = vec![T::zero(); n];
            for i in 0..n {
                if p.re()[i] >= T::zero() && p.im()[i] >= T::zero() {
                    gre[i] = g.re[i];
                    gim[i] = g.im[i];
                }
            }
            p.accumulate_grad(&gre, &gim);
        })
    })
}

/// Channel extent and per-element channel stride for the canonical layouts
/// (`[B,C,..]`, or a bare feature vector).
pub fn channel_geometry(shape: &[usize]) -> (usize, usize) {
    if shape.len() >= 2 {
        (shape[1], shape[2..].iter().product())
    } else {
        (shape[0], 1)
    }
}

/// `modReLU(z) = ReLU(|z| + b) * z/|z|` with a per-channel real bias.
pub fn modrelu<T: Real>(x: &CTensor<T>, bias: &CTensor<T>) -> Result<CTensor<T>> {
    let (channels, inner) = channel_geometry(x.shape());
    if bias.len() != channels {
        return Err(CxError::shape(
            "modrelu",
            format!("bias length {} != channel extent {}", bias.len(), channels),
        ));
    }
    let n = x.len();
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    let mut radius = vec![T::zero(); n];
    for i in 0..n {
        let (xr, xi) = (x.re()[i], x.im()[i]);
        let r = (xr * xr + xi * xi).sqrt();
        radius[i] = r;
        let b = bias.re()[(i / inner) % channels];
        if r > T::zero() && r + b > T::zero() {
            let s = (r + b) / r;
            re[i] = xr * s;
            im[i] = xi * s;
        }
    }
    let (p, pb) = (x.clone(), bias.clone());
    Ok(make_op_output(
        x.shape().to_vec(),
        re,
        im,
        "modrelu",
        vec![x.clone(), bias.clone()],
        move || {
            Box::new(move |g| {
                let n = p.len();
                let mut gre = vec![T::zero(); n];
                let mut gim = vec![T::zero(); n];
                let mut gb = vec![T::zero(); channels];
                let two = T::from_f64(2.0);
                for i in 0..n {
                    let r = radius[i];
                    let b = pb.re()[(i / inner) % channels];
                    if !(r > T::zero() && r + b > T::zero()) {
                        continue;
                    }
                    let (xr, xi) = (p.re()[i], p.im()[i]);
                    let (gr, gi) = (g.re[i], g.im[i]);
                    // w = (1 + b/r) z: dw/dz = 1 + b/(2r), dw/dz~ = -b z^2/(2r^3)
                    let hol = T::one() + b / (two * r);
                    let r3 = two * r * r * r;
                    let (cr, ci) = ((xr * xr - xi * xi) / r3, two * xr * xi / r3);
                    // g_z = g * conj(dw/dz) + conj(g) * dw/dz~
                    gre[i] = gr * hol - b * (gr * cr + gi * ci);
                    gim[i] = gi * hol - b * (gr * ci - gi * cr);
                    // dL/db = Re(conj(g) z)/r
                    let c = (i / inner) % channels;
                    gb[c] = gb[c] + (gr * xr + gi * xi) / r;
                }
                p.accumulate_grad(&gre, &gim);
                if pb.needs_grad() {
                    pb.accumulate_grad(&gb, &vec![T::zero(); channels]);
                }
            })
        },
    ))
}

/// `Cardioid(z) = (1 + cos(arg z))/2 * z`.
pub fn cardioid<T: Real>(x: &CTensor<T>) -> CTensor<T> {
    let n = x.len();
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    let half = T::from_f64(0.5);
    for i in 0..n {
        let (xr, xi) = (x.re()[i], x.im()[i]);
        let r = (xr * xr + xi * xi).sqrt();
        if r > T::zero() {
            let f = half * (T::one() + xr / r);
            re[i] = xr * f;
            im[i] = xi * f;
        }
    }
    let p = x.clone();
    make_op_output(x.shape().to_vec(), re, im, "cardioid", vec![x.clone()], move || {
        Box::new(move |g| {
            let n = p.len();
            let mut gre = vec![T::zero(); n];
            let mut gim = vec![T::zero(); n];
            let half = T::from_f64(0.5);
            for i in 0..n {
                let (xr, xi) = (p.re()[i], p.im()[i]);
                let r = (xr * xr + xi * xi).sqrt();
                if r <= T::zero() {
                    continue;
                }
                let r3 = T::from_f64(2.0) * r * r * r;
                let f = half * (T::one() + xr / r);
                // real Jacobian of (u,v) = f(x,y) * (x,y)
                let du_dx = f + xr * xi * xi / r3;
                let du_dy = -(xr * xr * xi) / r3;
                let dv_dx = xi * xi * xi / r3;
                let dv_dy = f - xr * xi * xi / r3;
                gre[i] = g.re[i] * du_dx + g.im[i] * dv_dx;
                gim[i] = g.re[i] * du_dy + g.im[i] * dv_dy;
            }
            p.accumulate_grad(&gre, &gim);
        })
    })
}

/// Real ReLU on the real plane; the imaginary plane is dropped.
pub fn relu_real<T: Real>(x: &CTensor<T>) -> CTensor<T> {
    let n = x.len();
    let re: Vec<T> =
        x.re().iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
    let p = x.clone();
    make_op_output(x.shape().to_vec(), re, vec![T::zero(); n], "relu", vec![x.clone()], move || {
        Box::new(move |g| {
            let n = p.len();
            let gre: Vec<T> = p
                .re()
                .iter()
                .zip(&g.re)
                .map(|(&v, &gr)| if v > T::zero() { gr } else { T::zero() })
                .collect();
            p.accumulate_grad(&gre, &vec![T::zero(); n]);
        })
    })
}

/// Activation site; modReLU owns one dead-zone bias per channel.
#[derive(Clone)]
pub struct ActLayer<T: Real> {
    pub kind: Activation,
    pub bias: Option<CTensor<T>>,
}

impl<T: Real> ActLayer<T> {
    pub fn new(kind: Activation, channels: usize) -> Self {
        let bias = (kind == Activation::ModRelu).then(|| zero_param(&[channels]));
        ActLayer { kind, bias }
    }

    pub fn forward(&self, x: &CTensor<T>) -> Result<CTensor<T>> {
        match self.kind {
            Activation::CRelu => Ok(crelu(x)),
            Activation::ZRelu => Ok(zrelu(x)),
            Activation::ModRelu => {
                let b = self
                    .bias
                    .as_ref()
                    .ok_or_else(|| CxError::contract("modrelu", "missing dead-zone bias"))?;
                modrelu(x, b)
            }
            Activation::Cardioid => Ok(cardioid(x)),
            Activation::RealRelu => Ok(relu_real(x)),
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        if let Some(b) = &self.bias {
            f(format!("{prefix}.b"), b, true);
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        if let Some(b) = &mut self.bias {
            f(format!("{prefix}.b"), b, true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn one(z: Complex64) -> CTensor<f64> {
        CTensor::from_complex(&[1], &[z]).unwrap()
    }

    #[test]
    fn crelu_splits_real_and_imaginary_parts() {
        let y = crelu(&one(Complex64::new(-1.0, 2.0)));
        assert_eq!(y.at(0), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn crelu_agrees_with_real_pair_formulation() {
        let mut rng = crate::testkit::rng(31);
        let x = crate::testkit::rand_tensor(&mut rng, &[64], 2.0);
        let y = crelu(&x);
        for i in 0..x.len() {
            let z = x.at(i);
            assert_eq!(y.at(i), Complex64::new(z.re.max(0.0), z.im.max(0.0)));
        }
    }

    #[test]
    fn zrelu_keeps_first_quadrant_only() {
        assert_eq!(zrelu(&one(Complex64::new(-1.0, 1.0))).at(0), Complex64::new(0.0, 0.0));
        assert_eq!(zrelu(&one(Complex64::new(1.0, 1.0))).at(0), Complex64::new(1.0, 1.0));
    }

    #[test]
    fn modrelu_shrinks_the_modulus_by_the_dead_zone() {
        let z = Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_3);
        let b = CTensor::from_parts(&[1], vec![-0.5], vec![0.0]).unwrap();
        let y = modrelu(&one(z), &b).unwrap();
        let want = Complex64::from_polar(1.5, std::f64::consts::FRAC_PI_3);
        assert!((y.at(0) - want).norm() < 1e-15);
    }

    #[test]
    fn cardioid_halves_at_quarter_turn() {
        let y = cardioid(&one(Complex64::new(0.0, 1.0)));
        assert!((y.at(0) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn modrelu_bias_is_per_channel() {
        let x = CTensor::from_complex(
            &[1, 2, 1, 1],
            &[Complex64::new(3.0, 0.0), Complex64::new(3.0, 0.0)],
        )
        .unwrap();
        let b = CTensor::from_parts(&[2], vec![-1.0, -2.0], vec![0.0, 0.0]).unwrap();
        let y = modrelu(&x, &b).unwrap();
        assert!((y.at(0).re - 2.0).abs() < 1e-15);
        assert!((y.at(1).re - 1.0).abs() < 1e-15);
    }
}
