//! Dirichlet-process mixture bookkeeping for the slice-sampled infinite mixture.
//!
//! Components are indexed from zero internally; component index `k`
//! corresponds to the `j = k + 1` of the stick-breaking sequence and has
//! slice bound `xi_j = exp(-gamma j)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Deterministic slice bounds `xi_j = exp(-gamma j)`, `j >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSchedule<T> {
    gamma: T,
}

impl<T: Real> SliceSchedule<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    #[inline]
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// `xi` of the zero-based component `k`.
    #[inline]
    pub fn bound(&self, k: usize) -> T {
        (-self.gamma * T::lit((k + 1) as f64)).exp()
    }

    /// `ln(xi)` of component `k`.
    #[inline]
    pub fn ln_bound(&self, k: usize) -> T {
        -self.gamma * T::lit((k + 1) as f64)
    }

    /// Number of components whose bound exceeds `u`, i.e. `N_i = max{j : xi_j > u}`.
    #[inline]
    pub fn available(&self, u: T) -> usize {
        let r = (-u.ln() / self.gamma).as_f64();
        if !r.is_finite() {
            return usize::MAX;
        }
        let f = r.floor();
        // strict inequality xi_j > u excludes j = r
        let count = if f == r { f - 1.0 } else { f };
        count.max(0.0) as usize
    }
}

/// `xi_j = exp(-gamma j)` for the one-based index `j`.
pub fn xi<T: Real>(j: usize, gamma: T) -> Result<T> {
    if j == 0 {
        return Err(Error::InvalidParameter("slice indices start at 1".into()));
    }
    Ok(SliceSchedule::new(gamma)?.bound(j - 1))
}

/// `u ~ U(0, xi_{d})` for the zero-based component `d`; returns `u` and the
/// number of components available to it (always `> d`).
pub fn sample_slice<T: Real, R: Rng + ?Sized>(d: usize, schedule: &SliceSchedule<T>, rng: &mut R) -> (T, usize) {
    loop {
        let u = schedule.bound(d) * T::open01(rng);
        let avail = schedule.available(u);
        // rounding at the boundary can only make `avail == d`; redraw then
        if avail > d && u > T::zero() {
            return (u, avail);
        }
    }
}

/// Stick fractions `v`, weights `w_j = v_j prod_{l<j} (1 - v_l)` and the DP scale `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StickState<T> {
    v: Vec<T>,
    w: Vec<T>,
    m: T,
}

impl<T: Real> StickState<T> {
    pub fn from_fractions(v: Vec<T>, m: T) -> Result<Self> {
        if let Some(bad) = v.iter().find(|x| !(**x >= T::zero() && **x <= T::one())) {
            return Err(Error::InvalidParameter(format!("stick fraction {bad} outside [0, 1]")));
        }
        if !(m > T::zero()) {
            return Err(Error::InvalidParameter(format!("DP scale must be positive, got {m}")));
        }
        let mut s = Self { v, w: Vec::new(), m };
        s.recompute_weights();
        Ok(s)
    }

    pub fn fractions(&self) -> &[T] {
        &self.v
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn scale(&self) -> T {
        self.m
    }

    pub fn set_scale(&mut self, m: T) {
        self.m = m;
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Mass not covered by the instantiated components.
    pub fn remaining(&self) -> T {
        self.v.iter().fold(T::one(), |acc, &v| acc * (T::one() - v))
    }

    fn recompute_weights(&mut self) {
        self.w.clear();
        let mut rest = T::one();
        for &v in &self.v {
            self.w.push(v * rest);
            rest = rest * (T::one() - v);
        }
    }

    /// Truncates or extends to `len` fractions, extending with `Beta(1, m)` prior draws.
    pub fn resize<R: Rng + ?Sized>(&mut self, len: usize, rng: &mut R) {
        if len <= self.v.len() {
            self.v.truncate(len);
            self.w.truncate(len);
            return;
        }
        let mut rest = self.remaining();
        while self.v.len() < len {
            let v = T::beta(T::one(), self.m, rng);
            self.v.push(v);
            self.w.push(v * rest);
            rest = rest * (T::one() - v);
        }
    }

    /// Keeps the first `len` sticks; the dropped mass joins [`Self::remaining`].
    pub fn truncate(&mut self, len: usize) {
        self.v.truncate(len);
        self.w.truncate(len);
    }

    #[inline]
    pub fn ln_weight(&self, k: usize) -> T {
        self.w[k].ln()
    }
}

/// Conjugate update `v_j ~ Beta(1 + n_j, m + sum_{l>j} n_l)` for the first `len` sticks.
pub fn update_sticks<T: Real, R: Rng + ?Sized>(counts: &[usize], m: T, len: usize, rng: &mut R) -> StickState<T> {
    let mut above: usize = counts.iter().sum();
    let mut v = Vec::with_capacity(len);
    for j in 0..len {
        let nj = counts.get(j).copied().unwrap_or(0);
        above -= nj;
        v.push(T::beta(T::one() + T::lit(nj as f64), m + T::lit(above as f64), rng));
    }
    let mut s = StickState { v, w: Vec::new(), m };
    s.recompute_weights();
    s
}

/// Draws sticks and allocations of `n` observations from the stick-breaking
/// prior with scale `m`; sticks are instantiated as far as the allocations need.
pub fn draw_prior_allocations<T: Real, R: Rng + ?Sized>(n: usize, m: T, rng: &mut R) -> Result<(StickState<T>, Vec<usize>)> {
    let mut sticks = StickState::from_fractions(Vec::new(), m)?;
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = T::open01(rng);
        let mut k = 0;
        loop {
            if k == sticks.len() {
                sticks.resize(k + 1, rng);
            }
            let w = sticks.weights()[k];
            // rounding can leave u above the covered mass once the rest underflows
            if u < w || (w == T::zero() && sticks.remaining() == T::zero()) {
                break;
            }
            u = u - w;
            k += 1;
        }
        d.push(k);
    }
    Ok((sticks, d))
}

/// How the DP scale is refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleUpdate {
    /// `nu ~ Beta(m, n)`, `m ~ Gamma(alpha + k, beta - ln nu)`, with `k` the number of occupied components.
    #[default]
    Auxiliary,
    /// `m ~ Gamma(alpha + N, beta - sum_{j<=N} ln(1 - v_j))`, conditional on the instantiated sticks.
    Sticks,
}

/// Two-step auxiliary-variable draw of the DP scale given `k` occupied
/// components among `n` observations.
pub fn update_scale<T: Real, R: Rng + ?Sized>(
    k: usize,
    n: usize,
    current: T,
    alpha: T,
    beta: T,
    rng: &mut R,
) -> Result<T> {
    if k < 1 || n < 1 {
        return Err(Error::InvalidParameter(format!("scale update needs k >= 1 and n >= 1, got k={k}, n={n}")));
    }
    let nu = T::beta(current, T::lit(n as f64), rng).max(T::min_positive_value());
    Ok(draw_scale_given_nu(k, nu, alpha, beta, rng))
}

/// Second half of [`update_scale`]: `Gamma(alpha + k, beta - ln nu)`.
pub fn draw_scale_given_nu<T: Real, R: Rng + ?Sized>(k: usize, nu: T, alpha: T, beta: T, rng: &mut R) -> T {
    let shape = alpha + T::lit(k as f64);
    let rate = beta - nu.ln();
    T::gamma_rate(shape, rate, rng).max(T::min_positive_value())
}

/// Scale draw conditional on the first `sticks.len()` fractions.
pub fn update_scale_from_sticks<T: Real, R: Rng + ?Sized>(sticks: &[T], alpha: T, beta: T, rng: &mut R) -> T {
    let floor = T::lit(1e-300);
    let s: T = sticks.iter().map(|&v| (T::one() - v).max(floor).ln()).sum();
    T::gamma_rate(alpha + T::lit(sticks.len() as f64), beta - s, rng).max(T::min_positive_value())
}

/// Draws an index from unnormalised log masses `ln_mass[0..]`.
///
/// Returns `None` when every mass is `-inf` or NaN.
pub fn sample_log_categorical<T: Real, R: Rng + ?Sized>(ln_mass: &[T], rng: &mut R) -> Option<usize> {
    let max = ln_mass.iter().copied().filter(|v| !v.is_nan()).fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return None;
    }
    let total: T = ln_mass.iter().map(|&v| if v.is_nan() { T::zero() } else { (v - max).exp() }).sum();
    let mut target = T::open01(rng) * total;
    let mut last = None;
    for (k, &v) in ln_mass.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        let p = (v - max).exp();
        if p > T::zero() {
            last = Some(k);
        }
        if target < p {
            return Some(k);
        }
        target = target - p;
    }
    last
}

/// Outcome of one allocation draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Allocation {
    Drawn(usize),
    /// Every mass underflowed even in log space; the caller keeps the old value.
    Degenerate,
}

/// Draws `d_i` with mass `(w_j / xi_j) f(y_i | component j)` over the
/// `available` components. `ln_kernel(k)` is the log kernel of component `k`.
pub fn sample_allocation<T, F, R>(
    sticks: &StickState<T>,
    schedule: &SliceSchedule<T>,
    available: usize,
    mut ln_kernel: F,
    scratch: &mut Vec<T>,
    rng: &mut R,
) -> Allocation
where
    T: Real,
    F: FnMut(usize) -> T,
    R: Rng + ?Sized,
{
    if available == 1 {
        return Allocation::Drawn(0);
    }
    scratch.clear();
    for k in 0..available {
        let w = sticks.weights()[k];
        let ln = if w > T::zero() { w.ln() - schedule.ln_bound(k) + ln_kernel(k) } else { T::neg_infinity() };
        scratch.push(ln);
    }
    match sample_log_categorical(scratch, rng) {
        Some(k) => Allocation::Drawn(k),
        None => Allocation::Degenerate,
    }
}

/// Slice variables and allocations of the `n` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationState<T> {
    /// Zero-based component of each observation.
    pub d: Vec<usize>,
    /// Slice variable of each observation, `u_i < xi_{d_i}`.
    pub u: Vec<T>,
    /// Components available to each observation given its slice variable.
    pub available: Vec<usize>,
    /// `max_i available[i]`: the number of instantiated components.
    pub truncation: usize,
}

impl<T: Real> AllocationState<T> {
    /// All observations in the first component, slices drawn fresh.
    pub fn single_cluster<R: Rng + ?Sized>(n: usize, schedule: &SliceSchedule<T>, rng: &mut R) -> Self {
        let mut s = Self { d: vec![0; n], u: Vec::with_capacity(n), available: Vec::with_capacity(n), truncation: 1 };
        s.refresh_slices(schedule, rng);
        s
    }

    pub fn from_allocations<R: Rng + ?Sized>(d: Vec<usize>, schedule: &SliceSchedule<T>, rng: &mut R) -> Self {
        let mut s = Self { d, u: Vec::new(), available: Vec::new(), truncation: 1 };
        s.refresh_slices(schedule, rng);
        s
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Draws every `u_i ~ U(0, xi_{d_i})` and recomputes the truncation level.
    pub fn refresh_slices<R: Rng + ?Sized>(&mut self, schedule: &SliceSchedule<T>, rng: &mut R) {
        self.u.clear();
        self.available.clear();
        for &d in &self.d {
            let (u, a) = sample_slice(d, schedule, rng);
            self.u.push(u);
            self.available.push(a);
        }
        self.truncation = self.available.iter().copied().max().unwrap_or(1).max(1);
    }

    /// Occupancy counts over the first `len` components.
    pub fn counts(&self, len: usize) -> Vec<usize> {
        let mut c = vec![0; len];
        for &d in &self.d {
            c[d] += 1;
        }
        c
    }

    /// Number of distinct occupied components.
    pub fn occupied(&self) -> usize {
        let mut seen: Vec<usize> = self.d.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// `D = max_i d_i + 1` in zero-based terms.
    pub fn max_component(&self) -> usize {
        self.d.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Every slice variable lies below the bound of its component.
    pub fn slices_consistent(&self, schedule: &SliceSchedule<T>) -> bool {
        self.d.iter().zip(&self.u).all(|(&d, &u)| u < schedule.bound(d))
    }
}

/// Which component a predictive draw comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentPick {
    Existing(usize),
    /// Beyond the instantiated components: its parameters are a fresh draw from the base measure.
    Fresh,
}

/// Picks a component with probability `w_j`; the uncovered mass maps to [`ComponentPick::Fresh`].
pub fn pick_component<T: Real, R: Rng + ?Sized>(sticks: &StickState<T>, rng: &mut R) -> ComponentPick {
    let mut u = T::open01(rng);
    for (k, &w) in sticks.weights().iter().enumerate() {
        if u < w {
            return ComponentPick::Existing(k);
        }
        u = u - w;
    }
    ComponentPick::Fresh
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn xi_values() {
        let v: f64 = xi(1, 0.01).unwrap();
        assert!((v - 0.990_049_8).abs() < 1e-7);
        assert!(xi::<f64>(0, 0.01).is_err());
        let r = xi::<f64>(100, 0.01).unwrap() / xi::<f64>(99, 0.01).unwrap();
        assert!((r - (-0.01_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn available_counts_strictly_larger_bounds() {
        let s = SliceSchedule::new(0.5_f64).unwrap();
        // xi_1 = 0.6065, xi_2 = 0.3679, xi_3 = 0.2231
        assert_eq!(s.available(0.5), 1);
        assert_eq!(s.available(0.3), 2);
        assert_eq!(s.available(0.7), 0);
        assert_eq!(s.available((-1.0_f64).exp()), 1);
    }

    #[test]
    fn slices_cover_current_component() {
        let s = SliceSchedule::new(0.01_f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [0usize, 3, 40] {
            for _ in 0..2000 {
                let (u, a) = sample_slice(d, &s, &mut rng);
                assert!(u > 0.0 && u < s.bound(d));
                assert!(a > d);
            }
        }
    }

    #[test]
    fn stick_identity() {
        let s = StickState::from_fractions(vec![0.5_f64, 0.5, 0.5], 1.0).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.25, 0.125]);
        assert_eq!(s.remaining(), 0.125);
        assert!(StickState::from_fractions(vec![1.5_f64], 1.0).is_err());
    }

    #[test]
    fn resize_keeps_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = StickState::from_fractions(vec![0.3_f64], 2.0).unwrap();
        s.resize(50, &mut rng);
        let mut rest = 1.0;
        for (v, w) in s.fractions().iter().zip(s.weights()) {
            assert!((w - v * rest).abs() < 1e-15);
            rest *= 1.0 - v;
        }
        s.resize(4, &mut rng);
        assert_eq!(s.len(), 4);
        assert_eq!(s.weights().len(), 4);
    }

    #[test]
    fn scale_update_validates_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(update_scale(0, 10, 1.0_f64, 0.01, 0.01, &mut rng).is_err());
        assert!(update_scale(2, 0, 1.0_f64, 0.01, 0.01, &mut rng).is_err());
        for _ in 0..1000 {
            assert!(update_scale(3, 100, 1.0_f64, 0.01, 0.01, &mut rng).unwrap() > 0.0);
        }
    }

    #[test]
    fn single_available_component_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sticks = StickState::from_fractions(vec![0.2_f64, 0.9], 1.0).unwrap();
        let sched = SliceSchedule::new(0.01).unwrap();
        let mut scratch = Vec::new();
        for _ in 0..100 {
            let a = sample_allocation(&sticks, &sched, 1, |_| -1e6, &mut scratch, &mut rng);
            assert_eq!(a, Allocation::Drawn(0));
        }
    }

    #[test]
    fn degenerate_masses_are_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sticks = StickState::from_fractions(vec![0.2_f64, 0.9], 1.0).unwrap();
        let sched = SliceSchedule::new(0.01).unwrap();
        let mut scratch = Vec::new();
        let a = sample_allocation(&sticks, &sched, 2, |_| f64::NEG_INFINITY, &mut scratch, &mut rng);
        assert_eq!(a, Allocation::Degenerate);
        // far-out log masses still normalise
        let a = sample_allocation(&sticks, &sched, 2, |k| if k == 1 { -2000.0 } else { -3000.0 }, &mut scratch, &mut rng);
        assert_eq!(a, Allocation::Drawn(1));
    }

    #[test]
    fn allocation_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sched = SliceSchedule::new(0.01_f64).unwrap();
        let a = AllocationState::from_allocations(vec![0, 2, 2, 5], &sched, &mut rng);
        assert_eq!(a.counts(6), vec![1, 0, 2, 0, 0, 1]);
        assert_eq!(a.occupied(), 3);
        assert_eq!(a.max_component(), 6);
        assert!(a.slices_consistent(&sched));
        assert!(a.truncation >= 6);
    }
}
