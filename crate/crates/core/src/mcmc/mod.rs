//! Markov chain samplers for the univariate and bivariate mixtures.
//!
//! Three samplers share the slice/stick machinery of [`crate::dpmix`]:
//!
//! * [`uni`]: the marginal sampler, with the latent uniforms integrated out;
//! * [`bridge`]: the univariate sampler that keeps the latent uniforms;
//! * [`biv`]: the bivariate sampler with Gaussian-copula-coupled latents.
//!
//! The mode of each dimension moves through [`kappa`], which proposes a new
//! mode in a nearby gap between order statistics together with the matching
//! reassignment of the observations it crosses.

pub mod biv;
pub mod bridge;
pub mod kappa;
pub mod uni;

use rand::Rng;

use crate::dpmix::{ScaleUpdate, SliceSchedule};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hyperparameters.
///
/// `mu ~ N(0, mu_var)`, `kappa ~ N(kappa_mean, kappa_var)`,
/// `c ~ Gamma(c_shape, rate c_rate)`, `M ~ Gamma(m_shape, rate m_rate)`;
/// the copula correlation has a uniform prior on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior<T> {
    pub mu_var: T,
    pub kappa_mean: T,
    pub kappa_var: T,
    pub c_shape: T,
    pub c_rate: T,
    pub m_shape: T,
    pub m_rate: T,
}

impl<T: Real> Prior<T> {
    /// The specification used for the simulated-data experiments.
    pub fn reference() -> Self {
        Self {
            mu_var: T::lit(10.0),
            kappa_mean: T::zero(),
            kappa_var: T::lit(10_000.0),
            c_shape: T::lit(0.1),
            c_rate: T::lit(0.1),
            m_shape: T::lit(0.01),
            m_rate: T::lit(0.01),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_var", self.mu_var),
            ("kappa_var", self.kappa_var),
            ("c_shape", self.c_shape),
            ("c_rate", self.c_rate),
            ("m_shape", self.m_shape),
            ("m_rate", self.m_rate),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.kappa_mean.is_finite() {
            return Err(Error::InvalidParameter("kappa_mean must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn ln_mu(&self, mu: T) -> T {
        -T::lit(0.5) * mu * mu / self.mu_var
    }

    #[inline]
    pub fn ln_kappa(&self, kappa: T) -> T {
        let d = kappa - self.kappa_mean;
        -T::lit(0.5) * d * d / self.kappa_var
    }

    /// Log gamma prior of `c` up to a constant.
    #[inline]
    pub fn ln_c(&self, c: T) -> T {
        (self.c_shape - T::one()) * c.ln() - self.c_rate * c
    }

    /// Non-zero draw from the prior of a component mean.
    pub fn draw_mu<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        loop {
            let mu = self.mu_var.sqrt() * T::std_normal(rng);
            if mu != T::zero() {
                return mu;
            }
        }
    }

    pub fn draw_kappa<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.kappa_mean + self.kappa_var.sqrt() * T::std_normal(rng)
    }

    pub fn draw_c<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::gamma_rate(self.c_shape, self.c_rate, rng).max(T::min_positive_value())
    }

    pub fn draw_m<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::gamma_rate(self.m_shape, self.m_rate, rng).max(T::min_positive_value())
    }
}

/// Where the mode may be proposed relative to the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgePolicy {
    /// Only gaps between the smallest and largest observation are proposed.
    #[default]
    Truncate,
    /// The two unbounded gaps outside the data are proposed too, with an
    /// exponential offset from the extreme observation.
    Open,
}

/// How the bivariate sampler conditions the mode and allocation updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    /// Product of the closed-form marginal kernels of each dimension, ignoring
    /// the current latents, which are redrawn later in the same sweep. Not
    /// the full conditional given the latents, so not exactly invariant.
    Marginal,
    /// Product of latent joint densities at the current latents: the exact
    /// full conditional of the augmented model.
    #[default]
    Latent,
}

/// Starting allocation of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Every observation in one cluster with a mean drawn from the prior.
    Single,
    /// One cluster per orthant around the starting mode, with means whose
    /// signs point into the orthant and whose scale matches its data.
    #[default]
    Orthant,
}

/// Proposal scales and algorithmic constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning<T> {
    /// Variance of the random-walk step for component means.
    pub h_mu: T,
    /// Variance of the random-walk step for `ln c`.
    pub h_c: T,
    /// Standard deviation of the random-walk step for `logit rho`.
    pub h_rho: T,
    /// Largest gap offset of a mode move.
    pub window: usize,
    /// Trials of the joint copula proposal before switching to the coordinate-wise sampler.
    pub trial_cap: usize,
    /// Trials any single rejection sampler may use before giving up.
    pub rejection_cap: usize,
    /// Rate of the slice bounds `xi_j = exp(-gamma j)`.
    pub gamma: T,
    pub edge: EdgePolicy,
    pub scale_update: ScaleUpdate,
    pub conditioning: Conditioning,
    pub init: Init,
    /// When the uniform-proposal latent sampler runs out of trials, finish the
    /// draw by adaptive rejection sampling (same target) instead of failing.
    pub latent_fallback: bool,
}

impl<T: Real> Default for Tuning<T> {
    fn default() -> Self {
        Self {
            h_mu: T::lit(0.25),
            h_c: T::lit(0.25),
            h_rho: T::lit(0.5),
            window: 3,
            trial_cap: 100,
            rejection_cap: 10_000,
            gamma: T::lit(0.01),
            edge: EdgePolicy::Truncate,
            scale_update: ScaleUpdate::Auxiliary,
            conditioning: Conditioning::Latent,
            init: Init::Orthant,
            latent_fallback: true,
        }
    }
}

impl<T: Real> Tuning<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h_mu", self.h_mu), ("h_c", self.h_c), ("h_rho", self.h_rho)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        if self.rejection_cap == 0 {
            return Err(Error::InvalidParameter("rejection_cap must be at least 1".into()));
        }
        SliceSchedule::new(self.gamma)?;
        Ok(())
    }

    pub fn schedule(&self) -> SliceSchedule<T> {
        SliceSchedule::new(self.gamma).expect("validated gamma")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig<T> {
    pub prior: Prior<T>,
    pub tuning: Tuning<T>,
}

impl<T: Real> Default for McmcConfig<T> {
    fn default() -> Self {
        Self { prior: Prior::default(), tuning: Tuning::default() }
    }
}

impl<T: Real> Default for Prior<T> {
    fn default() -> Self {
        Self::reference()
    }
}

impl<T: Real> McmcConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        self.tuning.validate()
    }
}

/// Proposal/acceptance counter of one move type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Acceptance {
    pub proposed: u64,
    pub accepted: u64,
}

impl Acceptance {
    #[inline]
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn merge(&mut self, other: &Acceptance) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Running counters of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MoveStats {
    pub mu: Acceptance,
    pub c: Acceptance,
    pub kappa: [Acceptance; 2],
    pub rho: Acceptance,
    /// Latent draws (single or pair) performed.
    pub latent_draws: u64,
    /// Latent draws where the uniform-proposal sampler hit its cap and the
    /// adaptive rejection sampler finished the draw.
    pub latent_fallbacks: u64,
    /// Pair draws where the joint copula proposal hit `trial_cap`.
    pub pair_fallbacks: u64,
    /// Coordinate updates where both rejection stages hit their cap and a
    /// slice-sampling step from the current value was used instead.
    pub coordinate_slices: u64,
    /// Allocation draws whose masses all underflowed.
    pub degenerate_allocations: u64,
}

impl MoveStats {
    pub fn merge(&mut self, o: &MoveStats) {
        self.mu.merge(&o.mu);
        self.c.merge(&o.c);
        self.kappa[0].merge(&o.kappa[0]);
        self.kappa[1].merge(&o.kappa[1]);
        self.rho.merge(&o.rho);
        self.latent_draws += o.latent_draws;
        self.latent_fallbacks += o.latent_fallbacks;
        self.pair_fallbacks += o.pair_fallbacks;
        self.coordinate_slices += o.coordinate_slices;
        self.degenerate_allocations += o.degenerate_allocations;
    }
}

/// Metropolis–Hastings decision for a log acceptance ratio.
#[inline]
pub(crate) fn accept<T: Real, R: Rng + ?Sized>(ln_ratio: T, rng: &mut R) -> bool {
    if ln_ratio.is_nan() {
        return false;
    }
    ln_ratio >= T::zero() || T::open01(rng).ln() < ln_ratio
}

/// Draws a random-walk proposal `mu + sqrt(h) N(0, 1)`.
#[inline]
pub(crate) fn rw_step<T: Real, R: Rng + ?Sized>(x: T, var: T, rng: &mut R) -> T {
    x + var.sqrt() * T::std_normal(rng)
}

/// Log acceptance ratio of a log-scale random walk on `c`, given the log
/// likelihood change: the proposal density of `c*` given `c` is proportional
/// to `1 / c*`, so the correction `q(c | c*) / q(c* | c)` equals `c* / c`.
#[inline]
pub fn ln_ratio_log_walk<T: Real>(ln_lik_change: T, prior: &Prior<T>, c: T, c_new: T) -> T {
    ln_lik_change + prior.ln_c(c_new) - prior.ln_c(c) + c_new.ln() - c.ln()
}

/// Resizes component means to `len`, filling new slots from the prior.
pub(crate) fn resize_means<T: Real, R: Rng + ?Sized>(mus: &mut Vec<T>, len: usize, prior: &Prior<T>, rng: &mut R) {
    if mus.len() > len {
        mus.truncate(len);
    }
    while mus.len() < len {
        mus.push(prior.draw_mu(rng));
    }
}

/// Orthant allocations around `kappa` and one mean per orthant and dimension:
/// with `Z` near `mu`, `Y - kappa = X / Z` has mean `1 / (2 mu)` on the side of
/// `sign(mu)`, so `mu = +-1 / (2 mean|y - kappa|)` over the orthant's data.
pub(crate) fn orthant_start<T: Real>(columns: &[&[T]], kappa: &[T]) -> Result<(Vec<usize>, Vec<Vec<T>>)> {
    let n = columns[0].len();
    let orthants = 1usize << columns.len();
    let d: Vec<usize> = (0..n)
        .map(|i| columns.iter().zip(kappa).enumerate().map(|(l, (c, &k))| usize::from(c[i] < k) << l).sum())
        .collect();
    let mean_abs = |l: usize, pick: &dyn Fn(usize) -> bool| {
        let (sum, count) = (0..n)
            .filter(|&i| pick(i))
            .fold((T::zero(), 0usize), |(s, m), i| (s + (columns[l][i] - kappa[l]).abs(), m + 1));
        if count == 0 || !(sum > T::zero()) {
            None
        } else {
            Some(sum / T::from(count).expect("count fits"))
        }
    };
    let mus = (0..columns.len())
        .map(|l| {
            let overall = mean_abs(l, &|_| true).unwrap_or(T::one());
            (0..orthants)
                .map(|o| {
                    let scale = mean_abs(l, &|i| d[i] == o).unwrap_or(overall);
                    let sign = if (o >> l) & 1 == 0 { T::one() } else { -T::one() };
                    let mu = sign / (T::lit(2.0) * scale);
                    if mu == T::zero() || !mu.is_finite() {
                        return Err(Error::NonFinite(format!("starting mean {mu} from mean distance {scale} to the mode")));
                    }
                    Ok(mu)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((d, mus))
}

/// Index `i` in the observations such that `y_i == kappa`, if any.
pub(crate) fn touches_mode<T: Real>(values: &[T], kappa: T) -> Option<usize> {
    values.iter().position(|&y| y == kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_walk_zero_step_is_neutral() {
        let p = Prior::<f64>::reference();
        assert_eq!(ln_ratio_log_walk(0.0, &p, 1.7, 1.7), 0.0);
    }

    #[test]
    fn log_walk_hand_value() {
        let p = Prior { c_shape: 2.0, c_rate: 3.0, ..Prior::<f64>::reference() };
        // (2-1) ln(2/1) - 3 (2 - 1) + ln 2 = 2 ln 2 - 3
        let r = ln_ratio_log_walk(0.0, &p, 1.0, 2.0);
        assert!((r - (2.0 * 2f64.ln() - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn acceptance_rates() {
        let mut a = Acceptance::default();
        assert!(a.rate().is_nan());
        a.record(true);
        a.record(false);
        assert_eq!(a.rate(), 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(McmcConfig::<f64>::default().validate().is_ok());
        let mut c = McmcConfig::<f64>::default();
        c.tuning.window = 0;
        assert!(c.validate().is_err());
        let mut c = McmcConfig::<f64>::default();
        c.prior.c_rate = 0.0;
        assert!(c.validate().is_err());
    }
}
