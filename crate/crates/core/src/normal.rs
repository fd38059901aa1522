//! Standard normal pdf, cdf and quantile.

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::scalar::Real;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exponent arguments below this evaluate to zero instead of underflowing noisily.
const EXP_FLOOR: f64 = -745.0;

#[inline]
pub fn pdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    let e = -0.5 * x * x;
    if e < EXP_FLOOR {
        return T::zero();
    }
    T::lit(FRAC_1_SQRT_2PI * e.exp())
}

#[inline]
pub fn ln_pdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::lit(-0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln())
}

/// Phi(x), accurate in the lower tail.
#[inline]
pub fn cdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    if x.is_infinite() {
        return if x > 0.0 { T::one() } else { T::zero() };
    }
    T::lit(0.5 * erfc(-x / std::f64::consts::SQRT_2))
}

/// 1 - Phi(x), accurate in the upper tail.
#[inline]
pub fn sf<T: Real>(x: T) -> T {
    cdf(-x)
}

/// Phi^-1(p) for p in (0, 1); returns the signed infinity at the endpoints.
pub fn quantile<T: Real>(p: T) -> T {
    let p = p.as_f64();
    if p <= 0.0 {
        return T::neg_infinity();
    }
    if p >= 1.0 {
        return T::infinity();
    }
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step against the more accurate cdf
    let d = (-0.5 * x * x).exp() * FRAC_1_SQRT_2PI;
    if d > 0.0 && x.is_finite() {
        let r = 0.5 * erfc(-x / std::f64::consts::SQRT_2) - p;
        return T::lit(x - r / d);
    }
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((cdf(0.0_f64) - 0.5).abs() < 1e-16);
        let v: f64 = cdf(1.959_963_984_540_054_f64);
        assert!((v - 0.975).abs() < 1e-14, "{v}");
        assert!((cdf(-8.0_f64) / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-12);
        assert!((pdf(0.0_f64) - FRAC_1_SQRT_2PI).abs() < 1e-16);
        assert_eq!(pdf(40.0_f64), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-10] {
            let x: f64 = quantile(p);
            assert!((cdf(x) - p).abs() < 1e-13 * p.max(1e-3), "p={p}");
        }
        assert_eq!(quantile(0.0_f64), f64::NEG_INFINITY);
        assert_eq!(quantile(1.0_f64), f64::INFINITY);
    }

    #[test]
    fn f32_agrees() {
        assert!((cdf(1.0_f32) - 0.841_344_75).abs() < 1e-6);
    }
}
