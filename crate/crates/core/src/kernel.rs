//! The single-component unimodal density.
//!
//! A draw is `kappa + X / Z` with `X ~ U(0, 1)` and `Z ~ N(mu, sigma^2)`
//! independent, `sigma = |mu| / sqrt(c)`. The density at `y` is the partial
//! first moment of `Z` over `[0, 1/(y - kappa)]`, which has a closed form in
//! terms of the standard normal pdf and cdf. Keeping `X` as a latent variable
//! gives the joint density of `(y, x)` used by the latent-variable samplers.

use rand::Rng;

use crate::error::{Error, Result};
use crate::normal;
use crate::quad;
use crate::scalar::Real;

/// Parameters of one mixture component: the normal mean `mu`, the squared
/// inverse coefficient of variation `c = (mu/sigma)^2` and the mode `kappa`.
///
/// `sigma` is derived on construction; `mu = 0` is rejected because the
/// scale would vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    mu: T,
    c: T,
    kappa: T,
    sigma: T,
}

impl<T: Real> KernelParams<T> {
    pub fn new(mu: T, c: T, kappa: T) -> Result<Self> {
        if !mu.is_finite() || mu == T::zero() {
            return Err(Error::InvalidParameter(format!("mu must be finite and non-zero, got {mu}")));
        }
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be positive and finite, got {c}")));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be finite, got {kappa}")));
        }
        Ok(Self { mu, c, kappa, sigma: mu.abs() / c.sqrt() })
    }

    /// Skips validation; callers guarantee `mu != 0`, `c > 0` and finiteness.
    #[inline]
    pub(crate) fn new_unchecked(mu: T, c: T, kappa: T) -> Self {
        debug_assert!(mu != T::zero() && c > T::zero());
        Self { mu, c, kappa, sigma: mu.abs() / c.sqrt() }
    }

    #[inline]
    pub fn mu(&self) -> T {
        self.mu
    }

    #[inline]
    pub fn c(&self) -> T {
        self.c
    }

    #[inline]
    pub fn kappa(&self) -> T {
        self.kappa
    }

    #[inline]
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Density at `y`. At `y = kappa` the one-sided limit on the side where
    /// `Z` has its mean is returned.
    #[inline]
    pub fn density(&self, y: T) -> T {
        let t = y - self.kappa;
        let xi = if t == T::zero() { self.mu.signum() * T::infinity() } else { t.recip() };
        partial_mean_unchecked(xi, self.mu, self.sigma)
    }

    /// Log density; stays finite where `density` underflows.
    pub fn ln_density(&self, y: T) -> T {
        let t = y - self.kappa;
        let xi = if t == T::zero() { self.mu.signum() * T::infinity() } else { t.recip() };
        ln_partial_mean(xi, self.mu, self.sigma)
    }

    /// Joint density of `(y, x)`; integrates over `x` in `[0, 1]` to [`Self::density`].
    #[inline]
    pub fn latent_density(&self, y: T, x: T) -> T {
        self.ln_latent_density(y, x).exp()
    }

    #[inline]
    pub fn ln_latent_density(&self, y: T, x: T) -> T {
        let t = y - self.kappa;
        let s = x / t;
        let z = (s - self.mu) / self.sigma;
        x.ln() - (t * t).ln() + normal::ln_pdf(z) - self.sigma.ln()
    }

    /// Maximiser over `x` in (0, 1] of the latent density at `y`.
    #[inline]
    pub fn latent_argmax(&self, y: T) -> T {
        let mt = self.mu * (y - self.kappa);
        let root = mt * T::lit(0.5) + mt.abs() * (self.c.recip() + T::lit(0.25)).sqrt();
        root.min(T::one())
    }

    /// `kappa + x / z` with `x ~ U(0,1)`, `z ~ N(mu, sigma^2)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let x = T::open01(rng);
        loop {
            let z = self.mu + self.sigma * T::std_normal(rng);
            if z != T::zero() {
                return self.kappa + x / z;
            }
        }
    }
}

/// `|int_0^xi s N(ds | mu, sigma^2)|`, the partial first moment of a normal.
///
/// Negative `xi` integrates over `[xi, 0]`; `xi = +-inf` gives the limits.
pub fn partial_mean_integral<T: Real>(xi: T, mu: T, sigma: T) -> Result<T> {
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if xi.is_nan() {
        return Err(Error::Domain("xi is NaN".into()));
    }
    Ok(partial_mean_unchecked(xi, mu, sigma))
}

fn partial_mean_unchecked<T: Real>(xi: T, mu: T, sigma: T) -> T {
    let (v, magnitude) = partial_mean_terms(xi, mu, sigma);
    if cancels(v, magnitude) {
        return T::lit(ln_partial_mean_quadrature(xi.as_f64(), mu.as_f64(), sigma.as_f64()).exp());
    }
    v
}

// far out in the tails (|xi| << sigma) the closed form is a difference of
// nearly equal terms and keeps no significant digits
fn cancels<T: Real>(v: T, magnitude: T) -> bool {
    magnitude > T::zero() && !(v > T::lit(1e-7) * magnitude)
}

/// Closed form and the magnitude of its largest cancelling term.
fn partial_mean_terms<T: Real>(xi: T, mu: T, sigma: T) -> (T, T) {
    if xi == T::zero() {
        return (T::zero(), T::zero());
    }
    // reflect so that the interval is [0, xi] with xi > 0
    let (xi, mu) = if xi < T::zero() { (-xi, -mu) } else { (xi, mu) };
    let b = -mu / sigma;
    let a = (xi - mu) / sigma;
    // Phi(a) - Phi(b) without cancellation in the upper tail
    let mass = if b > T::zero() {
        normal::sf(b) - normal::sf(a)
    } else {
        normal::cdf(a) - normal::cdf(b)
    };
    let pa = if a.is_infinite() { T::zero() } else { normal::pdf(a) };
    let pb = normal::pdf(b);
    let first = mu * mass;
    let v = first + sigma * (pb - pa);
    (v.abs(), first.abs() + sigma * (pa + pb))
}

/// `ln` of [`partial_mean_integral`] with a log-domain quadrature fallback when
/// the closed form underflows or cancels.
fn ln_partial_mean<T: Real>(xi: T, mu: T, sigma: T) -> T {
    if xi == T::zero() {
        return T::neg_infinity();
    }
    let (v, magnitude) = partial_mean_terms(xi, mu, sigma);
    if v > T::lit(1e-250) && !cancels(v, magnitude) {
        return v.ln();
    }
    T::lit(ln_partial_mean_quadrature(xi.as_f64(), mu.as_f64(), sigma.as_f64()))
}

fn ln_partial_mean_quadrature(xi: f64, mu: f64, sigma: f64) -> f64 {
    let (xi, mu) = if xi < 0.0 { (-xi, -mu) } else { (xi, mu) };
    // ln(s) - (s - mu)^2 / (2 sigma^2) is concave on s > 0
    let h = |s: f64| s.ln() - 0.5 * ((s - mu) / sigma).powi(2);
    let stationary = 0.5 * (mu + (mu * mu + 4.0 * sigma * sigma).sqrt());
    let upper = if xi.is_finite() { xi } else { stationary.max(mu) + 40.0 * sigma };
    let peak = stationary.min(upper);
    let hmax = h(peak);
    // the integrand peaks at 1, so the integral is at least of order min(upper, sigma)
    let tol = 1e-13 * upper.min(sigma);
    let integral = quad::integrate(|s| if s <= 0.0 { 0.0 } else { (h(s) - hmax).exp() }, 0.0, upper, tol);
    hmax + integral.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Density of the single-component model at `y`.
pub fn kernel_density<T: Real>(y: T, p: &KernelParams<T>) -> T {
    p.density(y)
}

/// Joint density of `(y, x)`, normalising constant included.
pub fn latent_joint_density<T: Real>(y: T, x: T, p: &KernelParams<T>) -> Result<T> {
    if y == p.kappa() {
        return Err(Error::Domain("latent density is undefined at y = kappa".into()));
    }
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    Ok(p.latent_density(y, x))
}

/// Maximiser over (0, 1] of [`latent_joint_density`] in `x`.
pub fn latent_maximizer<T: Real>(y: T, p: &KernelParams<T>) -> Result<T> {
    if y == p.kappa() {
        return Err(Error::Domain("latent density is undefined at y = kappa".into()));
    }
    Ok(p.latent_argmax(y))
}

pub fn sample_kernel<T: Real, R: Rng + ?Sized>(p: &KernelParams<T>, rng: &mut R) -> T {
    p.sample(rng)
}

/// Finite mixture `sum_j w_j f(y | mu_j, c, kappa)`; weights may sum to less than one.
pub fn mixture_density<T: Real>(y: T, weights: &[T], mus: &[T], c: T, kappa: T) -> Result<T> {
    if weights.len() != mus.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} component means",
            weights.len(),
            mus.len()
        )));
    }
    let mut total = T::zero();
    for (&w, &mu) in weights.iter().zip(mus) {
        if w < T::zero() {
            return Err(Error::InvalidParameter(format!("negative weight {w}")));
        }
        total = total + w * KernelParams::new(mu, c, kappa)?.density(y);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(mu: f64, c: f64, kappa: f64) -> KernelParams<f64> {
        KernelParams::new(mu, c, kappa).unwrap()
    }

    #[test]
    fn rejects_degenerate_params() {
        assert!(KernelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 0.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, -2.0, 0.0).is_err());
        assert!(KernelParams::new(f64::NAN, 1.0, 0.0).is_err());
        let k = p(-4.0, 4.0, 1.0);
        assert_eq!(k.sigma(), 2.0);
    }

    #[test]
    fn partial_mean_edge_values() {
        assert_eq!(partial_mean_integral(0.0, 3.0, 2.0).unwrap(), 0.0);
        let v = partial_mean_integral(f64::INFINITY, 0.0, 1.0).unwrap();
        assert!((v - 0.398_942_280_4).abs() < 1e-10);
        assert!(partial_mean_integral(1.0, f64::INFINITY, 1.0).is_err());
        assert!(partial_mean_integral(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn density_sign_symmetry() {
        for &t in &[-3.0, -0.2, 0.01, 0.5, 7.0] {
            let a = p(2.5, 0.7, 1.0).density(1.0 + t);
            let b = p(-2.5, 0.7, 1.0).density(1.0 - t);
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn far_tail_follows_the_inverse_square_law() {
        // f(y) = int_0^{1/y} z f_Z(z) dz ~ f_Z(0) / (2 y^2) as y -> inf
        let k = p(16.0, 0.37, 0.0);
        let sigma = 16.0 / 0.37f64.sqrt();
        let limit = (-0.5 * 0.37f64).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) / 2.0;
        for y in [1e6, 1e8, 1e12, 1e20] {
            let got = k.density(y) * y * y;
            assert!((got / limit - 1.0).abs() < 1e-6, "{y}: {got} vs {limit}");
        }
    }

    #[test]
    fn density_vanishes_far_away() {
        let k = p(3.0, 1.0, 0.0);
        assert!(k.density(1e8) < 1e-16);
        assert!(k.density(-1e8) < 1e-16);
    }

    #[test]
    fn mode_value_is_side_of_mu() {
        let k = p(2.0, 1.0, 5.0);
        let right = k.density(5.0 + 1e-12);
        assert!((k.density(5.0) - right).abs() < 1e-9);
        let k = p(-2.0, 1.0, 5.0);
        let left = k.density(5.0 - 1e-12);
        assert!((k.density(5.0) - left).abs() < 1e-9);
    }

    #[test]
    fn ln_density_matches_where_representable() {
        let k = p(-5.0, 1.0, 10.0);
        for &y in &[-100.0, 0.0, 9.0, 9.9, 10.0, 10.1, 11.0, 50.0] {
            let a = k.ln_density(y);
            let b = k.density(y).ln();
            assert!((a - b).abs() < 1e-9, "y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn ln_density_survives_underflow() {
        // sigma tiny relative to 1/(y - kappa): density is e^{-huge}
        let k = p(1.0, 1e4, 0.0);
        assert_eq!(k.density(1000.0), 0.0);
        let l = k.ln_density(1000.0);
        assert!(l.is_finite() && l < -4000.0, "{l}");
        // close to the closed form in the transition region
        let y = 1.0 / 0.75;
        let closed = k.density(y).ln();
        assert!(closed.is_finite() && closed < -300.0);
        let quad = ln_partial_mean_quadrature(0.75, 1.0, 0.01);
        assert!((closed - quad).abs() < 1e-6, "{closed} vs {quad}");
    }

    #[test]
    fn latent_stationary_value() {
        let k = p(2.0, 4.0, 0.0);
        let y = 0.3;
        let x = 2.0 * y; // x / y = mu
        let expected = (x / (y * y)) / (k.sigma() * (2.0 * std::f64::consts::PI).sqrt());
        assert!((latent_joint_density(y, x, &k).unwrap() - expected).abs() < 1e-12);
        assert_eq!(latent_joint_density(y, 0.0, &k).unwrap(), 0.0);
        assert!(latent_joint_density(0.0, 0.5, &k).is_err());
        assert!(latent_joint_density(0.3, 1.5, &k).is_err());
    }

    #[test]
    fn maximizer_examples() {
        let k = p(2.0, 1.0, 0.0);
        let x = latent_maximizer(0.3, &k).unwrap();
        assert!((x - (0.3 + 0.6 * 1.25_f64.sqrt()).min(1.0)).abs() < 1e-15);
        assert!((x - 0.970_820).abs() < 1e-6);
        // unconstrained root above one clamps
        assert_eq!(latent_maximizer(3.0, &k).unwrap(), 1.0);
        assert!(latent_maximizer(0.0, &k).is_err());
    }

    #[test]
    fn mixture_single_component() {
        let k = p(-5.0, 1.0, 10.0);
        let m = mixture_density(9.3, &[1.0], &[-5.0], 1.0, 10.0).unwrap();
        assert_eq!(m, k.density(9.3));
        assert!(mixture_density(9.3, &[1.0, 0.0], &[-5.0], 1.0, 10.0).is_err());
    }

    #[test]
    fn sampling_degenerate_z() {
        // c huge: z ~ mu, so y ~ U(0, 1/mu)
        let k = p(2.0, 1e12, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let y = k.sample(&mut rng);
            assert!(y > 0.0 && y < 0.5 + 1e-5);
        }
    }

    #[test]
    fn f32_density_is_close() {
        let k32 = KernelParams::<f32>::new(-5.0, 1.0, 10.0).unwrap();
        let k64 = p(-5.0, 1.0, 10.0);
        for &y in &[8.0_f32, 9.5, 10.5, 20.0] {
            assert!((k32.density(y) as f64 - k64.density(y as f64)).abs() < 1e-5);
        }
    }
}
