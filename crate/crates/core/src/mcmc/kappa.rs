//! Joint update of a mode and the allocations of the observations it crosses.
//!
//! With order statistics `y_(0) <= ... <= y_(n-1)`, gap `h` is the interval
//! between `y_(h-1)` and `y_(h)`; gaps `0` and `n` are the unbounded ones
//! outside the data. A move draws an offset `s` uniformly among the feasible
//! values in `[-m, m]`, a new mode uniformly in gap `h + s`, and hands the
//! observations between the old and the new mode to the component of the
//! observation on the far side of the old mode: moving up, ranks
//! `h..h+s-1` join the component of rank `h - 1`; moving down, ranks
//! `h+s..h-1` join the component of rank `h`.
//!
//! That reassignment is a bijection only on states where the reverse move
//! (offset `-s` from the new gap) recovers the current allocation, so
//! proposals failing that check are rejected. The acceptance ratio uses the
//! exact forward and reverse proposal densities.

use std::ops::Range;

use rand::Rng;

use super::{EdgePolicy, Prior};
use crate::data::Column;
use crate::scalar::Real;

/// Smallest gap length treated as non-degenerate.
pub const MIN_GAP: f64 = 1e-12;

/// The log target pieces a mode move needs.
pub trait ModeTarget<T> {
    /// Log density of observation `i` in the moving dimension, given the mode
    /// and the (zero-based) component `k`.
    fn ln_obs(&self, i: usize, kappa: T, k: usize) -> T;

    /// Log factors of observation `i` that depend on its component but not on
    /// the moving mode: stick weight over slice bound, other dimensions.
    fn ln_component(&self, i: usize, k: usize) -> T;

    /// Whether the slice variable of observation `i` admits component `k`.
    fn admits(&self, i: usize, k: usize) -> bool;
}

/// Gap geometry of one column.
#[derive(Debug, Clone, Copy)]
pub struct Gaps<'a, T> {
    sorted: &'a [T],
    policy: EdgePolicy,
    tail_scale: T,
}

impl<'a, T: Real> Gaps<'a, T> {
    pub fn new(column: &'a Column<T>, policy: EdgePolicy) -> Self {
        let sorted = column.sorted();
        let range = match (sorted.first(), sorted.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => T::zero(),
        };
        let tail_scale = if range > T::zero() { range } else { T::one() };
        Self { sorted, policy, tail_scale }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    /// Whether gap `h` may be proposed.
    #[inline]
    pub fn feasible(&self, h: isize) -> bool {
        let n = self.n() as isize;
        match self.policy {
            EdgePolicy::Truncate => h >= 1 && h <= n - 1,
            EdgePolicy::Open => h >= 0 && h <= n,
        }
    }

    /// Number of feasible gaps within `m` of gap `h`.
    pub fn window_count(&self, h: usize, m: usize) -> usize {
        let h = h as isize;
        let m = m as isize;
        (-m..=m).filter(|&s| self.feasible(h + s)).count()
    }

    /// Length of a bounded gap; `None` for the outer gaps.
    #[inline]
    pub fn length(&self, h: usize) -> Option<T> {
        if h == 0 || h >= self.n() {
            None
        } else {
            Some(self.sorted[h] - self.sorted[h - 1])
        }
    }

    /// Log density of drawing `kappa` when gap `h` is the target.
    pub fn ln_density(&self, h: usize, kappa: T) -> T {
        match self.length(h) {
            Some(len) => -len.max(T::lit(MIN_GAP)).ln(),
            None => {
                let dist = if h == 0 { self.sorted[0] - kappa } else { kappa - self.sorted[self.n() - 1] };
                -self.tail_scale.ln() - dist.max(T::zero()) / self.tail_scale
            }
        }
    }

    /// Draws a mode in gap `h`; `None` for a degenerate (tied) gap.
    pub fn draw<R: Rng + ?Sized>(&self, h: usize, rng: &mut R) -> Option<T> {
        match self.length(h) {
            Some(len) if len > T::lit(MIN_GAP) => {
                let lo = self.sorted[h - 1];
                let k = lo + len * T::open01(rng);
                (k > lo && k < self.sorted[h]).then_some(k)
            }
            Some(_) => None,
            None => {
                let e = -T::open01(rng).ln() * self.tail_scale;
                Some(if h == 0 { self.sorted[0] - e } else { self.sorted[self.n() - 1] + e })
            }
        }
    }
}

/// Ranks whose observations lie between gap `h` and gap `h + s`.
#[inline]
pub fn crossed(h: usize, s: isize) -> Range<usize> {
    if s >= 0 {
        h..h + s as usize
    } else {
        h - s.unsigned_abs()..h
    }
}

/// Component the crossed observations join: that of the observation just
/// below the mode when moving up, just above when moving down.
#[inline]
pub fn receiving_component(d: &[usize], order: &[usize], h: usize, s: isize) -> Option<usize> {
    if s > 0 {
        h.checked_sub(1).map(|r| d[order[r]])
    } else if s < 0 {
        order.get(h).map(|&i| d[i])
    } else {
        None
    }
}

/// A proposed mode move.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProposal<T> {
    pub from_gap: usize,
    pub offset: isize,
    pub kappa: T,
    /// `(observation, new component)` for every observation whose allocation changes.
    pub reassigned: Vec<(usize, usize)>,
    /// Log acceptance ratio; `-inf` for proposals rejected outright.
    pub ln_ratio: T,
}

impl<T: Real> ModeProposal<T> {
    pub fn to_gap(&self) -> usize {
        (self.from_gap as isize + self.offset) as usize
    }
}

/// Allocation changes of the move `(h, s)`, or `None` when the move is not
/// reversible from the proposed state.
pub fn reassignment(d: &[usize], order: &[usize], h: usize, s: isize) -> Option<Vec<(usize, usize)>> {
    if s == 0 {
        return Some(Vec::new());
    }
    let forward = receiving_component(d, order, h, s);
    let to = (h as isize + s) as usize;
    // the reverse move's receiving rank lies outside the crossed range, so
    // its component is unchanged by the forward move
    let reverse = receiving_component(d, order, to, -s);
    let mut changes = Vec::new();
    for r in crossed(h, s) {
        let i = order[r];
        let new = forward.unwrap_or(d[i]);
        let back = reverse.unwrap_or(new);
        if back != d[i] {
            return None;
        }
        if new != d[i] {
            changes.push((i, new));
        }
    }
    Some(changes)
}

/// Log acceptance ratio of moving from `(kappa, d)` in gap `h` to `kappa_new`
/// in gap `h + s` with the allocation changes `changes`.
#[allow(clippy::too_many_arguments)]
pub fn ln_acceptance<T: Real, M: ModeTarget<T>>(
    gaps: &Gaps<'_, T>,
    d: &[usize],
    kappa: T,
    kappa_new: T,
    h: usize,
    s: isize,
    changes: &[(usize, usize)],
    window: usize,
    prior: &Prior<T>,
    target: &M,
) -> T {
    let n = d.len();
    let to = (h as isize + s) as usize;
    let mut new_comp: Vec<usize> = d.to_vec();
    for &(i, k) in changes {
        if !target.admits(i, k) {
            return T::neg_infinity();
        }
        new_comp[i] = k;
    }
    let mut ln = prior.ln_kappa(kappa_new) - prior.ln_kappa(kappa);
    for i in 0..n {
        ln = ln + target.ln_obs(i, kappa_new, new_comp[i]) - target.ln_obs(i, kappa, d[i]);
    }
    for &(i, k) in changes {
        ln = ln + target.ln_component(i, k) - target.ln_component(i, d[i]);
    }
    if gaps.feasible(h as isize) {
        // q(back) / q(forth) = [K(h) dens_h(kappa)] / [K(to) dens_to(kappa_new)]
        ln = ln + T::lit(gaps.window_count(h, window) as f64).ln()
            - T::lit(gaps.window_count(to, window) as f64).ln()
            + gaps.ln_density(h, kappa)
            - gaps.ln_density(to, kappa_new);
    }
    ln
}

/// Draws a mode move. Returns `None` when no gap is feasible (fewer than two
/// observations under [`EdgePolicy::Truncate`]).
#[allow(clippy::too_many_arguments)]
pub fn propose<T: Real, M: ModeTarget<T>, R: Rng + ?Sized>(
    column: &Column<T>,
    d: &[usize],
    kappa: T,
    window: usize,
    policy: EdgePolicy,
    prior: &Prior<T>,
    target: &M,
    rng: &mut R,
) -> Option<ModeProposal<T>> {
    let gaps = Gaps::new(column, policy);
    let h = column.gap_of(kappa);
    let m = window as isize;
    let offsets: Vec<isize> = (-m..=m).filter(|&s| gaps.feasible(h as isize + s)).collect();
    if offsets.is_empty() {
        return None;
    }
    let s = offsets[rng.random_range(0..offsets.len())];
    let to = (h as isize + s) as usize;
    let reject = |kappa_new: T| ModeProposal {
        from_gap: h,
        offset: s,
        kappa: kappa_new,
        reassigned: Vec::new(),
        ln_ratio: T::neg_infinity(),
    };
    let Some(kappa_new) = gaps.draw(to, rng) else {
        return Some(reject(kappa));
    };
    let Some(changes) = reassignment(d, column.order(), h, s) else {
        return Some(reject(kappa_new));
    };
    let ln_ratio = ln_acceptance(&gaps, d, kappa, kappa_new, h, s, &changes, window, prior, target);
    Some(ModeProposal { from_gap: h, offset: s, kappa: kappa_new, reassigned: changes, ln_ratio })
}
