//! Squared-exponential kernel distance terms.

use crate::error::MathError;

/// Weighted squared distance sum_i 10^{omega_i} (x_i - x'_i)^2.
///
/// `exp(-sq_exp_distance(..))` is the Gaussian correlation between the two
/// points; omega holds base-10 scale exponents, one per coordinate.
pub fn sq_exp_distance(x: &[f64], x_prime: &[f64], omega: &[f64]) -> Result<f64, MathError> {
    if x.len() != x_prime.len() {
        return Err(MathError::DimensionMismatch {
            expected: x.len(),
            got: x_prime.len(),
        });
    }
    if x.len() != omega.len() {
        return Err(MathError::DimensionMismatch {
            expected: x.len(),
            got: omega.len(),
        });
    }
    Ok(sq_exp_distance_unchecked(x, x_prime, omega))
}

/// Distance term without length validation, for pre-validated hot paths.
#[inline]
pub(crate) fn sq_exp_distance_unchecked(x: &[f64], x_prime: &[f64], omega: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        let d = x[i] - x_prime[i];
        total += pow10(omega[i]) * d * d;
    }
    total
}

#[inline]
pub(crate) fn pow10(exponent: f64) -> f64 {
    (exponent * std::f64::consts::LN_10).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_have_zero_distance() {
        let x = [0.3, -1.2, 4.0];
        let omega = [2.0, -1.0, 0.5];
        let d = sq_exp_distance(&x, &x, &omega).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!((-d).exp(), 1.0);
    }

    #[test]
    fn unit_separation_at_omega_zero() {
        let d = sq_exp_distance(&[1.0], &[0.0], &[0.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!(((-d).exp() - 0.367879441171442).abs() < 1e-12);
    }

    #[test]
    fn omega_one_scales_by_ten() {
        let d = sq_exp_distance(&[1.0], &[0.0], &[1.0]).unwrap();
        assert!((d - 10.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(sq_exp_distance(&[1.0, 2.0], &[1.0], &[0.0, 0.0]).is_err());
        assert!(sq_exp_distance(&[1.0], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn distance_is_symmetric() {
        let x = [0.1, 0.9, 0.4];
        let y = [0.7, 0.2, 0.35];
        let omega = [1.5, -0.5, 0.0];
        let a = sq_exp_distance(&x, &y, &omega).unwrap();
        let b = sq_exp_distance(&y, &x, &omega).unwrap();
        assert_eq!(a, b);
    }
}
