//! Marginal univariate sampler: the latent uniforms are integrated out and
//! every update uses the closed-form kernel.

use rand::Rng;

use super::kappa::{self, ModeTarget};
use super::{accept, ln_ratio_log_walk, orthant_start, resize_means, rw_step, touches_mode, Init, McmcConfig, MoveStats, Prior};
use crate::data::Column;
use crate::dpmix::{
    draw_prior_allocations, sample_allocation, update_scale, update_scale_from_sticks, update_sticks, Allocation, AllocationState,
    ScaleUpdate, SliceSchedule, StickState,
};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::scalar::Real;

/// State of a univariate chain. Components are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct UniState<T> {
    pub sticks: StickState<T>,
    pub alloc: AllocationState<T>,
    pub mus: Vec<T>,
    pub c: T,
    pub kappa: T,
}

impl<T: Real> UniState<T> {
    /// Mode at the median, `c = 1`, `M = 1`, and the allocations of [`Init`].
    pub fn initial<R: Rng + ?Sized>(data: &Column<T>, cfg: &McmcConfig<T>, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let kappa = data.interior_median().ok_or_else(|| Error::Empty("no observations".into()))?;
        match cfg.tuning.init {
            Init::Single => Self::from_parts(data.len(), kappa, T::one(), T::one(), cfg, rng),
            Init::Orthant => {
                let (d, mut mus) = orthant_start(&[data.values()], &[kappa])?;
                let alloc = AllocationState::from_allocations(d, &cfg.tuning.schedule(), rng);
                let mut mus = mus.remove(0);
                resize_means(&mut mus, alloc.truncation, &cfg.prior, rng);
                let mut sticks = StickState::from_fractions(Vec::new(), T::one())?;
                sticks.resize(alloc.truncation, rng);
                Ok(Self { sticks, alloc, mus, c: T::one(), kappa })
            }
        }
    }

    /// One cluster at the given mode, `c` and scale; means from the prior.
    pub fn from_parts<R: Rng + ?Sized>(n: usize, kappa: T, c: T, m: T, cfg: &McmcConfig<T>, rng: &mut R) -> Result<Self> {
        let schedule = cfg.tuning.schedule();
        let alloc = AllocationState::single_cluster(n, &schedule, rng);
        let mut mus = Vec::new();
        resize_means(&mut mus, alloc.truncation, &cfg.prior, rng);
        let mut sticks = StickState::from_fractions(Vec::new(), m)?;
        sticks.resize(alloc.truncation, rng);
        KernelParams::new(mus[0], c, kappa)?;
        Ok(Self { sticks, alloc, mus, c, kappa })
    }

    /// A draw of every parameter, allocation and slice variable from the prior.
    pub fn draw_prior<R: Rng + ?Sized>(n: usize, cfg: &McmcConfig<T>, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let (mut sticks, d) = draw_prior_allocations(n, cfg.prior.draw_m(rng), rng)?;
        let alloc = AllocationState::from_allocations(d, &cfg.tuning.schedule(), rng);
        sticks.resize(alloc.truncation, rng);
        let mut mus = Vec::new();
        resize_means(&mut mus, alloc.truncation, &cfg.prior, rng);
        Ok(Self { sticks, alloc, mus, c: cfg.prior.draw_c(rng), kappa: cfg.prior.draw_kappa(rng) })
    }

    #[inline]
    pub fn params(&self, k: usize) -> KernelParams<T> {
        KernelParams::new_unchecked(self.mus[k], self.c, self.kappa)
    }

    pub fn scale(&self) -> T {
        self.sticks.scale()
    }

    /// Log of the augmented joint density of data, allocations and slices
    /// given the parameters: `sum_i ln(w_{d_i} / xi_{d_i}) + ln f(y_i | d_i)`.
    pub fn ln_augmented_likelihood(&self, data: &Column<T>, schedule: &SliceSchedule<T>) -> T {
        data.values()
            .iter()
            .zip(&self.alloc.d)
            .map(|(&y, &k)| self.sticks.ln_weight(k) - schedule.ln_bound(k) + self.params(k).ln_density(y))
            .sum()
    }
}

/// Slice refresh, truncation growth, scale and stick updates shared by every sampler.
pub(crate) fn update_mixture_weights<T: Real, R: Rng + ?Sized>(
    sticks: &mut StickState<T>,
    alloc: &mut AllocationState<T>,
    means: &mut [&mut Vec<T>],
    cfg: &McmcConfig<T>,
    rng: &mut R,
) -> Result<()> {
    let schedule = cfg.tuning.schedule();
    alloc.refresh_slices(&schedule, rng);
    let len = alloc.truncation;
    for mus in means.iter_mut() {
        resize_means(mus, len, &cfg.prior, rng);
    }
    let n = alloc.len();
    let m = match cfg.tuning.scale_update {
        ScaleUpdate::Auxiliary => {
            update_scale(alloc.occupied(), n, sticks.scale(), cfg.prior.m_shape, cfg.prior.m_rate, rng)?
        }
        ScaleUpdate::Sticks => {
            sticks.resize(len, rng);
            update_scale_from_sticks(sticks.fractions(), cfg.prior.m_shape, cfg.prior.m_rate, rng)
        }
    };
    *sticks = update_sticks(&alloc.counts(len), m, len, rng);
    Ok(())
}

/// Log MH ratio for moving component mean `mu` to `mu_new`, given the
/// observations currently allocated to it.
pub fn ln_ratio_mu<T: Real>(ys: &[T], mu: T, mu_new: T, c: T, kappa: T, prior: &Prior<T>) -> T {
    if mu_new == T::zero() || !mu_new.is_finite() {
        return T::neg_infinity();
    }
    let old = KernelParams::new_unchecked(mu, c, kappa);
    let new = KernelParams::new_unchecked(mu_new, c, kappa);
    let lik: T = ys.iter().map(|&y| new.ln_density(y) - old.ln_density(y)).sum();
    lik + prior.ln_mu(mu_new) - prior.ln_mu(mu)
}

/// Log MH ratio for moving the common `c` to `c_new` under the log random walk.
pub fn ln_ratio_c<T: Real>(ys: &[T], mus: &[T], d: &[usize], c: T, c_new: T, kappa: T, prior: &Prior<T>) -> T {
    if !(c_new > T::zero()) || !c_new.is_finite() {
        return T::neg_infinity();
    }
    let lik: T = ys
        .iter()
        .zip(d)
        .map(|(&y, &k)| {
            KernelParams::new_unchecked(mus[k], c_new, kappa).ln_density(y)
                - KernelParams::new_unchecked(mus[k], c, kappa).ln_density(y)
        })
        .sum();
    ln_ratio_log_walk(lik, prior, c, c_new)
}

/// Random-walk MH update of component `k`'s mean; an empty component is
/// redrawn from the prior. Returns whether a proposal was accepted (`true`
/// for prior redraws).
pub fn update_mu<T: Real, R: Rng + ?Sized>(
    k: usize,
    state: &mut UniState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> bool {
    let ys: Vec<T> = data.values().iter().zip(&state.alloc.d).filter(|(_, &d)| d == k).map(|(&y, _)| y).collect();
    if ys.is_empty() {
        state.mus[k] = cfg.prior.draw_mu(rng);
        return true;
    }
    let mu = state.mus[k];
    let mu_new = rw_step(mu, cfg.tuning.h_mu, rng);
    let ok = accept(ln_ratio_mu(&ys, mu, mu_new, state.c, state.kappa, &cfg.prior), rng);
    if ok {
        state.mus[k] = mu_new;
    }
    stats.mu.record(ok);
    ok
}

/// Log random-walk MH update of `c`.
pub fn update_c<T: Real, R: Rng + ?Sized>(
    state: &mut UniState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> bool {
    let c_new = (state.c.ln() + cfg.tuning.h_c.sqrt() * T::std_normal(rng)).exp();
    let ln = ln_ratio_c(data.values(), &state.mus, &state.alloc.d, state.c, c_new, state.kappa, &cfg.prior);
    let ok = accept(ln, rng);
    if ok {
        state.c = c_new;
    }
    stats.c.record(ok);
    ok
}

/// Redraws every allocation from `(w_k / xi_k) f(y_i | k)` over its available components.
pub fn update_allocations<T: Real, R: Rng + ?Sized>(
    state: &mut UniState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) {
    let schedule = cfg.tuning.schedule();
    let mut scratch = Vec::new();
    for (i, &y) in data.values().iter().enumerate() {
        let avail = state.alloc.available[i];
        let draw = sample_allocation(
            &state.sticks,
            &schedule,
            avail,
            |k| KernelParams::new_unchecked(state.mus[k], state.c, state.kappa).ln_density(y),
            &mut scratch,
            rng,
        );
        match draw {
            Allocation::Drawn(k) => state.alloc.d[i] = k,
            Allocation::Degenerate => stats.degenerate_allocations += 1,
        }
    }
}

/// The marginal target of a univariate mode move.
pub(crate) struct MarginalTarget<'a, T> {
    pub ys: &'a [T],
    pub mus: &'a [T],
    pub c: T,
    pub sticks: &'a StickState<T>,
    pub schedule: SliceSchedule<T>,
    pub available: &'a [usize],
}

impl<T: Real> ModeTarget<T> for MarginalTarget<'_, T> {
    #[inline]
    fn ln_obs(&self, i: usize, kappa: T, k: usize) -> T {
        KernelParams::new_unchecked(self.mus[k], self.c, kappa).ln_density(self.ys[i])
    }

    #[inline]
    fn ln_component(&self, _i: usize, k: usize) -> T {
        self.sticks.ln_weight(k) - self.schedule.ln_bound(k)
    }

    #[inline]
    fn admits(&self, i: usize, k: usize) -> bool {
        k < self.available[i]
    }
}

/// Mode move with joint reassignment; returns whether it was accepted.
pub fn update_kappa<T: Real, R: Rng + ?Sized>(
    state: &mut UniState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> bool {
    let target = MarginalTarget {
        ys: data.values(),
        mus: &state.mus,
        c: state.c,
        sticks: &state.sticks,
        schedule: cfg.tuning.schedule(),
        available: &state.alloc.available,
    };
    let Some(p) = kappa::propose(
        data,
        &state.alloc.d,
        state.kappa,
        cfg.tuning.window,
        cfg.tuning.edge,
        &cfg.prior,
        &target,
        rng,
    ) else {
        return false;
    };
    let ok = accept(p.ln_ratio, rng);
    if ok {
        state.kappa = p.kappa;
        for &(i, k) in &p.reassigned {
            state.alloc.d[i] = k;
        }
    }
    stats.kappa[0].record(ok);
    ok
}

/// One sweep: slices, scale, sticks, means, `c`, allocations, mode move.
pub fn sweep_uni<T: Real, R: Rng + ?Sized>(
    state: &mut UniState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<()> {
    if data.len() != state.alloc.len() {
        return Err(Error::InvalidParameter(format!(
            "state has {} observations, data has {}",
            state.alloc.len(),
            data.len()
        )));
    }
    update_mixture_weights(&mut state.sticks, &mut state.alloc, &mut [&mut state.mus], cfg, rng)?;
    for k in 0..state.mus.len() {
        update_mu(k, state, data, cfg, stats, rng);
    }
    update_c(state, data, cfg, stats, rng);
    update_allocations(state, data, cfg, stats, rng);
    update_kappa(state, data, cfg, stats, rng);
    if !state.c.is_finite() || !state.kappa.is_finite() {
        return Err(Error::NonFinite(format!("c = {}, kappa = {}", state.c, state.kappa)));
    }
    Ok(())
}

/// Redraws the observations from the kernel given the allocations; used by
/// joint-distribution tests that alternate sweeps with data regeneration.
pub fn regenerate<T: Real, R: Rng + ?Sized>(state: &UniState<T>, rng: &mut R) -> Vec<T> {
    state.alloc.d.iter().map(|&k| state.params(k).sample(rng)).collect()
}

/// Whether an observation sits exactly on the mode (the latent form is undefined there).
pub fn mode_on_data<T: Real>(data: &Column<T>, kappa: T) -> Option<usize> {
    touches_mode(data.values(), kappa)
}
