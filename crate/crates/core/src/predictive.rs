//! Draws of future observations from a single posterior state.
//!
//! Components are picked with their stick weights; the mass not covered by
//! the instantiated sticks goes to a fresh component whose mean is drawn from
//! the prior, which is exactly the stick-breaking prior beyond the truncation.

use rand::Rng;

use crate::copula;
use crate::dpmix::{pick_component, sample_log_categorical, ComponentPick, StickState};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::mcmc::biv::BivState;
use crate::mcmc::bridge::draw_latent;
use crate::mcmc::uni::UniState;
use crate::mcmc::{MoveStats, Prior, Tuning};
use crate::scalar::Real;

/// The parts of a chain state that define its mixture: sticks, per-dimension
/// component means, `c`, modes and (bivariate) the copula correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub sticks: StickState<T>,
    pub mus: Vec<Vec<T>>,
    pub c: Vec<T>,
    pub kappa: Vec<T>,
    pub rho: T,
}

impl<T: Real> Snapshot<T> {
    pub fn new(sticks: StickState<T>, mus: Vec<Vec<T>>, c: Vec<T>, kappa: Vec<T>, rho: T) -> Result<Self> {
        let dim = mus.len();
        if dim == 0 || dim > 2 || c.len() != dim || kappa.len() != dim {
            return Err(Error::InvalidParameter(format!("inconsistent snapshot dimensions ({dim})")));
        }
        if mus.iter().any(|m| m.len() < sticks.len()) {
            return Err(Error::InvalidParameter("fewer means than sticks".into()));
        }
        for (l, m) in mus.iter().enumerate() {
            for &mu in m.iter().take(sticks.len()) {
                KernelParams::new(mu, c[l], kappa[l])?;
            }
        }
        copula::CopulaParams::new(rho)?;
        Ok(Self { sticks, mus, c, kappa, rho })
    }

    pub fn dim(&self) -> usize {
        self.mus.len()
    }

    #[inline]
    pub fn params(&self, l: usize, k: usize) -> KernelParams<T> {
        KernelParams::new_unchecked(self.mus[l][k], self.c[l], self.kappa[l])
    }

    fn fresh(&self, l: usize, mu: T) -> KernelParams<T> {
        KernelParams::new_unchecked(mu, self.c[l], self.kappa[l])
    }
}

impl<T: Real> From<&UniState<T>> for Snapshot<T> {
    fn from(s: &UniState<T>) -> Self {
        Self { sticks: s.sticks.clone(), mus: vec![s.mus.clone()], c: vec![s.c], kappa: vec![s.kappa], rho: T::zero() }
    }
}

impl<T: Real> From<&BivState<T>> for Snapshot<T> {
    fn from(s: &BivState<T>) -> Self {
        Self {
            sticks: s.sticks.clone(),
            mus: s.mus.to_vec(),
            c: s.c.to_vec(),
            kappa: s.kappa.to_vec(),
            rho: s.rho,
        }
    }
}

fn nonzero_normal<T: Real, R: Rng + ?Sized>(mu: T, sigma: T, rng: &mut R) -> T {
    loop {
        let z = mu + sigma * T::std_normal(rng);
        if z != T::zero() {
            return z;
        }
    }
}

fn through<T: Real, R: Rng + ?Sized>(p: &KernelParams<T>, x: T, rng: &mut R) -> T {
    p.kappa() + x / nonzero_normal(p.mu(), p.sigma(), rng)
}

/// One draw of a future observation (one value per dimension).
pub fn predictive_draw<T: Real, R: Rng + ?Sized>(s: &Snapshot<T>, prior: &Prior<T>, rng: &mut R) -> Vec<T> {
    let params: Vec<KernelParams<T>> = match pick_component(&s.sticks, rng) {
        ComponentPick::Existing(k) => (0..s.dim()).map(|l| s.params(l, k)).collect(),
        ComponentPick::Fresh => (0..s.dim()).map(|l| s.fresh(l, prior.draw_mu(rng))).collect(),
    };
    if s.dim() == 1 {
        return vec![params[0].sample(rng)];
    }
    let (a, b) = copula::sample_copula_pair(s.rho, rng);
    vec![through(&params[0], a, rng), through(&params[1], b, rng)]
}

/// One draw of `y2 | y1` from a bivariate snapshot.
///
/// The component is drawn with mass `w_j f(y1 | mu_1j)`; the uncovered stick
/// mass is represented by one fresh component with a prior mean. Then `x1` is
/// drawn from its full conditional given `y1`, `x2` from the copula given
/// `x1`, and `y2 = kappa_2 + x2 / z2`.
pub fn predict_conditional<T: Real, R: Rng + ?Sized>(
    s: &Snapshot<T>,
    y1: T,
    prior: &Prior<T>,
    tuning: &Tuning<T>,
    rng: &mut R,
) -> Result<T> {
    if s.dim() != 2 {
        return Err(Error::InvalidParameter("conditional prediction needs a bivariate state".into()));
    }
    let k = s.sticks.len();
    let fresh = [prior.draw_mu(rng), prior.draw_mu(rng)];
    let mut ln_mass: Vec<T> = (0..k).map(|j| s.sticks.ln_weight(j) + s.params(0, j).ln_density(y1)).collect();
    ln_mass.push(s.sticks.remaining().ln() + s.fresh(0, fresh[0]).ln_density(y1));
    let j = sample_log_categorical(&ln_mass, rng).unwrap_or(k);
    let (p1, p2) = if j < k { (s.params(0, j), s.params(1, j)) } else { (s.fresh(0, fresh[0]), s.fresh(1, fresh[1])) };
    let x1 = if y1 == p1.kappa() {
        // the latent is not identified at the mode: fall back to its marginal
        T::open01(rng)
    } else {
        draw_latent(y1, &p1, tuning, &mut MoveStats::default(), rng)?
    };
    let x2 = copula::sample_conditional(copula::clamp_uniform(x1), s.rho, rng);
    Ok(through(&p2, x2, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(rho: f64) -> Snapshot<f64> {
        let sticks = StickState::from_fractions(vec![1.0], 1.0).unwrap();
        Snapshot::new(sticks, vec![vec![2.0], vec![-3.0]], vec![4.0, 2.0], vec![1.0, 5.0], rho).unwrap()
    }

    #[test]
    fn snapshot_validates_shapes() {
        let sticks = StickState::from_fractions(vec![0.5, 0.5], 1.0).unwrap();
        assert!(Snapshot::new(sticks.clone(), vec![vec![1.0]], vec![1.0], vec![0.0], 0.0).is_err());
        assert!(Snapshot::new(sticks, vec![vec![1.0, 0.0]], vec![1.0], vec![0.0], 0.0).is_err());
    }

    #[test]
    fn single_component_draws_follow_the_kernel() {
        let s = single(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let prior = Prior::reference();
        let n = 20_000;
        // P(Y1 > kappa1) = Phi(sqrt(c1)) for mu1 > 0
        let above = (0..n).filter(|_| predictive_draw(&s, &prior, &mut rng)[0] > 1.0).count() as f64 / n as f64;
        assert!((above - crate::normal::cdf(2.0)).abs() < 0.01, "{above}");
    }

    #[test]
    fn conditional_needs_two_dimensions() {
        let sticks = StickState::from_fractions(vec![1.0], 1.0).unwrap();
        let s = Snapshot::new(sticks, vec![vec![1.0]], vec![1.0], vec![0.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(predict_conditional(&s, 0.5, &Prior::reference(), &Tuning::default(), &mut rng).is_err());
    }
}
