//! Bivariate Gaussian copula on the latent uniforms.

use rand::Rng;

use crate::error::{Error, Result};
use crate::normal;
use crate::scalar::Real;

/// Clamp applied to uniforms produced by the samplers, keeping `Phi^-1` finite.
pub const UNIFORM_EPS: f64 = 1e-15;

/// Correlation of the bivariate Gaussian copula, `0 <= rho < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaParams<T> {
    rho: T,
}

impl<T: Real> CopulaParams<T> {
    pub fn new(rho: T) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho })
    }

    #[inline]
    pub fn rho(&self) -> T {
        self.rho
    }

    /// Log copula density on the normal scores `q = Phi^-1(x)`.
    #[inline]
    pub fn ln_density_scores(&self, q1: T, q2: T) -> T {
        ln_density_scores(q1, q2, self.rho)
    }

    #[inline]
    pub fn ln_density(&self, x1: T, x2: T) -> T {
        ln_density_scores(normal::quantile(x1), normal::quantile(x2), self.rho)
    }
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho >= T::zero() && rho < T::one()) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

fn check_interior<T: Real>(x: T) -> Result<()> {
    if !(x > T::zero() && x < T::one()) {
        return Err(Error::Domain(format!("copula argument must lie in (0, 1), got {x}")));
    }
    Ok(())
}

/// `-(rho^2 q1^2 - 2 rho q1 q2 + rho^2 q2^2) / (2 (1 - rho^2)) - ln(1 - rho^2) / 2`.
#[inline]
pub fn ln_density_scores<T: Real>(q1: T, q2: T, rho: T) -> T {
    if rho == T::zero() {
        return T::zero();
    }
    let r2 = rho * rho;
    let one_m = T::one() - r2;
    let quad = r2 * (q1 * q1 + q2 * q2) - T::lit(2.0) * rho * q1 * q2;
    -quad / (T::lit(2.0) * one_m) - T::lit(0.5) * one_m.ln()
}

pub fn copula_density<T: Real>(x1: T, x2: T, rho: T) -> Result<T> {
    check_interior(x1)?;
    check_interior(x2)?;
    check_rho(rho)?;
    Ok(ln_density_scores(normal::quantile(x1), normal::quantile(x2), rho).exp())
}

/// Maximiser of `copula_density(., x_other)` over the free coordinate.
///
/// On the normal-score scale the log density is
/// `-(q - rho q_o)^2 / (2 (1 - rho^2)) + q^2 / 2` up to constants, whose
/// stationary point is `q = q_o / rho`. With `rho = 0` the density is constant
/// and the centre 0.5 is returned.
pub fn copula_mode_given<T: Real>(x_other: T, rho: T) -> Result<T> {
    check_interior(x_other)?;
    check_rho(rho)?;
    Ok(mode_given_unchecked(x_other, rho))
}

#[inline]
pub(crate) fn mode_given_unchecked<T: Real>(x_other: T, rho: T) -> T {
    if rho == T::zero() {
        return T::lit(0.5);
    }
    clamp_uniform(normal::cdf(normal::quantile(x_other) / rho))
}

/// Largest value of the log copula density with `x_other` fixed.
#[inline]
pub(crate) fn ln_max_given_score<T: Real>(q_other: T, rho: T) -> T {
    if rho == T::zero() {
        return T::zero();
    }
    // plugging q = q_o / rho into the quadratic form leaves q_o^2 / 2
    T::lit(0.5) * q_other * q_other - T::lit(0.5) * (T::one() - rho * rho).ln()
}

#[inline]
pub(crate) fn clamp_uniform<T: Real>(x: T) -> T {
    let eps = T::lit(UNIFORM_EPS);
    x.max(eps).min(T::one() - eps)
}

/// One draw `(Phi(z1), Phi(z2))` with `(z1, z2)` standard bivariate normal, correlation `rho`.
pub fn sample_copula_pair<T: Real, R: Rng + ?Sized>(rho: T, rng: &mut R) -> (T, T) {
    let z1 = T::std_normal(rng);
    let z2 = rho * z1 + (T::one() - rho * rho).sqrt() * T::std_normal(rng);
    (clamp_uniform(normal::cdf(z1)), clamp_uniform(normal::cdf(z2)))
}

/// Draw of one coordinate given the other: `Phi(rho q_o + sqrt(1 - rho^2) N(0,1))`.
pub fn sample_conditional<T: Real, R: Rng + ?Sized>(x_other: T, rho: T, rng: &mut R) -> T {
    let q = rho * normal::quantile(x_other) + (T::one() - rho * rho).sqrt() * T::std_normal(rng);
    clamp_uniform(normal::cdf(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn independence_copula_is_flat() {
        for &(a, b) in &[(0.1, 0.9), (0.5, 0.5), (0.99, 0.01)] {
            assert_eq!(copula_density(a, b, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn centre_value() {
        let v = copula_density(0.5, 0.5, 0.8).unwrap();
        assert!((v - 1.0 / 0.36_f64.sqrt()).abs() < 1e-12);
        assert!((v - 1.666_667).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(copula_density(0.0, 0.5, 0.5).is_err());
        assert!(copula_density(0.5, 1.0, 0.5).is_err());
        assert!(copula_density(0.5, 0.5, 1.0).is_err());
        assert!(copula_density(0.5, 0.5, -0.1).is_err());
        assert!(CopulaParams::new(1.0).is_err());
    }

    #[test]
    fn symmetry_and_reflection() {
        for &(a, b, r) in &[(0.2_f64, 0.7, 0.3), (0.05, 0.6, 0.9), (0.4, 0.41, 0.5)] {
            let v = copula_density(a, b, r).unwrap();
            assert!((v - copula_density(b, a, r).unwrap()).abs() < 1e-12 * v);
            assert!((v - copula_density(1.0 - a, 1.0 - b, r).unwrap()).abs() < 1e-9 * v);
        }
    }

    #[test]
    fn mode_given_examples() {
        assert!((copula_mode_given(0.5_f64, 0.3).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(copula_mode_given(0.8, 0.0).unwrap(), 0.5);
        assert!(copula_mode_given(0.0, 0.3).is_err());
    }

    #[test]
    fn max_given_is_attained_at_mode() {
        let rho = 0.7;
        let xo: f64 = 0.9;
        let qo = normal::quantile(xo);
        let m = copula_mode_given(xo, rho).unwrap();
        let at_mode = ln_density_scores(normal::quantile(m), qo, rho);
        assert!((at_mode - ln_max_given_score(qo, rho)).abs() < 1e-10);
    }

    #[test]
    fn conditional_draw_is_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = sample_conditional(1.0 - 1e-15, 0.99, &mut rng);
            assert!(x > 0.0 && x < 1.0);
        }
    }
}
