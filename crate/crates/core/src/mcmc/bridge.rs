//! Univariate sampler that keeps the latent uniforms `x`.
//!
//! Means move by random-walk MH on the latent joint density, `c` has a gamma
//! full conditional, allocations and the mode are drawn with `x` integrated
//! out, and `x` is then redrawn by rejection from its full conditional.

use rand::Rng;

use super::uni::{update_allocations, update_kappa, update_mixture_weights, UniState};
use super::{accept, rw_step, McmcConfig, MoveStats, Prior, Tuning};
use crate::ars::Ars;
use crate::data::Column;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::scalar::Real;

/// Univariate chain state plus one latent uniform per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeState<T> {
    pub chain: UniState<T>,
    pub x: Vec<T>,
}

impl<T: Real> BridgeState<T> {
    pub fn initial<R: Rng + ?Sized>(data: &Column<T>, cfg: &McmcConfig<T>, rng: &mut R) -> Result<Self> {
        let chain = UniState::initial(data, cfg, rng)?;
        let mut s = Self { chain, x: Vec::new() };
        let mut stats = MoveStats::default();
        refresh_latents(&mut s, data, &cfg.tuning, &mut stats, rng)?;
        Ok(s)
    }

    /// A prior draw of the chain state together with latents and data drawn from the model.
    pub fn draw_prior<R: Rng + ?Sized>(n: usize, cfg: &McmcConfig<T>, rng: &mut R) -> Result<(Self, Vec<T>)> {
        let chain = UniState::draw_prior(n, cfg, rng)?;
        let mut s = Self { chain, x: vec![T::lit(0.5); n] };
        let ys = regenerate(&mut s, rng);
        Ok((s, ys))
    }
}

/// `ln x - ((x / t - mu) / sigma)^2 / 2` and its derivative in `x`: the latent
/// joint density in `x` up to terms free of `x`.
#[inline]
pub fn latent_log_profile<T: Real>(y: T, p: &KernelParams<T>, x: T) -> (T, T) {
    let t = y - p.kappa();
    let s2 = p.sigma() * p.sigma();
    let r = x / t - p.mu();
    (x.ln() - T::lit(0.5) * r * r / s2, x.recip() - r / (s2 * t))
}

/// Exact draw from `x | y` proportional to the latent joint density, by
/// uniform proposals accepted with `f(x) / f(x_hat)`. Returns the draw and
/// the number of proposals used.
pub fn sample_x<T: Real, R: Rng + ?Sized>(y: T, p: &KernelParams<T>, cap: usize, rng: &mut R) -> Result<(T, usize)> {
    if y == p.kappa() {
        return Err(Error::Domain("latent draw at y = kappa".into()));
    }
    let top = p.ln_latent_density(y, p.latent_argmax(y));
    for trial in 1..=cap {
        let x = T::open01(rng);
        let ln_ratio = p.ln_latent_density(y, x) - top;
        if ln_ratio > T::lit(1e-9) {
            return Err(Error::BoundViolation { sampler: "latent rejection", ratio: ln_ratio.exp().as_f64() });
        }
        if T::open01(rng).ln() <= ln_ratio {
            return Ok((x, trial));
        }
    }
    Err(Error::TrialCap { sampler: "latent rejection", trials: cap })
}

/// Adaptive rejection sampler of the same full conditional as [`sample_x`].
pub fn latent_ars<T: Real>(y: T, p: KernelParams<T>) -> Result<Ars<T, impl Fn(T) -> (T, T)>> {
    if y == p.kappa() {
        return Err(Error::Domain("latent draw at y = kappa".into()));
    }
    let mode = p.latent_argmax(y);
    let start = if mode < T::one() {
        [mode * T::lit(0.5), mode, (mode + T::one()) * T::lit(0.5)]
    } else {
        [T::lit(0.25), T::lit(0.75), T::one()]
    };
    Ars::new(move |x| latent_log_profile(y, &p, x), T::zero(), T::one(), &start)
}

/// One latent draw for the sweeps: uniform-proposal rejection, finished by
/// adaptive rejection sampling when the cap is hit and the fallback is on.
pub fn draw_latent<T: Real, R: Rng + ?Sized>(
    y: T,
    p: &KernelParams<T>,
    tuning: &Tuning<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<T> {
    stats.latent_draws += 1;
    match sample_x(y, p, tuning.rejection_cap, rng) {
        Ok((x, _)) => Ok(x),
        Err(Error::TrialCap { .. }) if tuning.latent_fallback => {
            stats.latent_fallbacks += 1;
            latent_ars(y, *p)?.sample(tuning.rejection_cap, rng)
        }
        Err(e) => Err(e),
    }
}

fn refresh_latents<T: Real, R: Rng + ?Sized>(
    state: &mut BridgeState<T>,
    data: &Column<T>,
    tuning: &Tuning<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<()> {
    state.x.clear();
    for (i, (&y, &k)) in data.values().iter().zip(&state.chain.alloc.d).enumerate() {
        let x = draw_latent(y, &state.chain.params(k), tuning, stats, rng)
            .map_err(|e| Error::AtObservation { index: i, source: Box::new(e) })?;
        state.x.push(x);
    }
    Ok(())
}

/// Log MH ratio for a component mean under the latent joint density.
pub fn ln_ratio_mu_latent<T: Real>(ys: &[T], xs: &[T], mu: T, mu_new: T, c: T, kappa: T, prior: &Prior<T>) -> T {
    if mu_new == T::zero() || !mu_new.is_finite() {
        return T::neg_infinity();
    }
    let old = KernelParams::new_unchecked(mu, c, kappa);
    let new = KernelParams::new_unchecked(mu_new, c, kappa);
    let lik: T = ys.iter().zip(xs).map(|(&y, &x)| new.ln_latent_density(y, x) - old.ln_latent_density(y, x)).sum();
    lik + prior.ln_mu(mu_new) - prior.ln_mu(mu)
}

/// Random-walk MH for component `k`'s mean given the latents (prior draw when empty).
pub fn update_mu_latent<T: Real, R: Rng + ?Sized>(
    k: usize,
    state: &mut BridgeState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> bool {
    let chain = &mut state.chain;
    let (mut ys, mut xs) = (Vec::new(), Vec::new());
    for ((&y, &x), &d) in data.values().iter().zip(&state.x).zip(&chain.alloc.d) {
        if d == k {
            ys.push(y);
            xs.push(x);
        }
    }
    if ys.is_empty() {
        chain.mus[k] = cfg.prior.draw_mu(rng);
        return true;
    }
    let mu = chain.mus[k];
    let mu_new = rw_step(mu, cfg.tuning.h_mu, rng);
    let ok = accept(ln_ratio_mu_latent(&ys, &xs, mu, mu_new, chain.c, chain.kappa, &cfg.prior), rng);
    if ok {
        chain.mus[k] = mu_new;
    }
    stats.mu.record(ok);
    ok
}

/// Shape and rate of the gamma full conditional of `c` given the latents:
/// `n/2 + alpha_c` and `beta_c + sum_i ((x_i/(y_i - kappa) - mu_i) / mu_i)^2 / 2`.
pub fn c_conditional<T: Real>(ys: &[T], xs: &[T], mus: &[T], d: &[usize], kappa: T, prior: &Prior<T>) -> Result<(T, T)> {
    let mut ss = T::zero();
    for (i, ((&y, &x), &k)) in ys.iter().zip(xs).zip(d).enumerate() {
        if y == kappa {
            return Err(Error::Domain(format!("observation {i} equals the mode")));
        }
        let r = (x / (y - kappa) - mus[k]) / mus[k];
        ss = ss + r * r;
    }
    Ok((T::lit(ys.len() as f64) * T::lit(0.5) + prior.c_shape, prior.c_rate + T::lit(0.5) * ss))
}

/// Gibbs draw of `c`.
pub fn gibbs_c<T: Real, R: Rng + ?Sized>(
    ys: &[T],
    xs: &[T],
    mus: &[T],
    d: &[usize],
    kappa: T,
    prior: &Prior<T>,
    rng: &mut R,
) -> Result<T> {
    let (shape, rate) = c_conditional(ys, xs, mus, d, kappa, prior)?;
    Ok(T::gamma_rate(shape, rate, rng).max(T::min_positive_value()))
}

/// One sweep: slices, scale, sticks, means (latent), `c` (Gibbs), allocations
/// and mode (marginal), then every latent.
pub fn sweep_bridge<T: Real, R: Rng + ?Sized>(
    state: &mut BridgeState<T>,
    data: &Column<T>,
    cfg: &McmcConfig<T>,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<()> {
    if data.len() != state.x.len() {
        return Err(Error::InvalidParameter(format!("state has {} latents, data has {}", state.x.len(), data.len())));
    }
    {
        let chain = &mut state.chain;
        update_mixture_weights(&mut chain.sticks, &mut chain.alloc, &mut [&mut chain.mus], cfg, rng)?;
    }
    for k in 0..state.chain.mus.len() {
        update_mu_latent(k, state, data, cfg, stats, rng);
    }
    let chain = &mut state.chain;
    chain.c = gibbs_c(data.values(), &state.x, &chain.mus, &chain.alloc.d, chain.kappa, &cfg.prior, rng)?;
    update_allocations(chain, data, cfg, stats, rng);
    update_kappa(chain, data, cfg, stats, rng);
    refresh_latents(state, data, &cfg.tuning, stats, rng)
}

/// Redraws `(x, y)` jointly from the model given everything else.
pub fn regenerate<T: Real, R: Rng + ?Sized>(state: &mut BridgeState<T>, rng: &mut R) -> Vec<T> {
    let mut ys = Vec::with_capacity(state.x.len());
    for (i, &k) in state.chain.alloc.d.iter().enumerate() {
        let p = state.chain.params(k);
        let x = T::open01(rng);
        let z = loop {
            let z = p.mu() + p.sigma() * T::std_normal(rng);
            if z != T::zero() {
                break z;
            }
        };
        state.x[i] = x;
        ys.push(p.kappa() + x / z);
    }
    ys
}
