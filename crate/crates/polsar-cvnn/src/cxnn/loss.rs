//! Reconstruction objectives.

use crate::cxcore::{CTensor, Real, Result};

/// Mean squared error over complex entries: `mean |pred - target|^2`.
/// The result is a real scalar tensor suitable as a backward root.
pub fn mse_loss<T: Real>(pred: &CTensor<T>, target: &CTensor<T>) -> Result<CTensor<T>> {
    Ok(pred.sub(target)?.abs_sq().mean_all())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_modulus_of_the_residual_is_averaged() {
        let p = CTensor::<f64>::from_parts(&[2], vec![1.0, 0.0], vec![0.0, 2.0]).unwrap();
        let t = CTensor::<f64>::from_parts(&[2], vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let l = mse_loss(&p, &t).unwrap();
        assert_eq!(l.len(), 1);
        assert!((l.re()[0] - 2.5).abs() < 1e-15); // (1 + 4) / 2
        assert_eq!(l.im()[0], 0.0);
    }

    #[test]
    fn identical_tensors_have_zero_loss() {
        let p = CTensor::<f64>::from_parts(&[3], vec![1.0, -2.0, 0.5], vec![0.3, 0.0, -1.0]).unwrap();
        let l = mse_loss(&p, &p).unwrap();
        assert_eq!(l.re()[0], 0.0);
    }
}
