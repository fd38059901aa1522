//! Tangent-line adaptive rejection sampling for log-concave densities on a
//! bounded interval.
//!
//! The envelope is the piecewise-linear upper hull formed by tangents of the
//! log density at the abscissae; rejected points are added to the hull, so
//! the acceptance rate climbs with use. Because the support is bounded, the
//! hull needs no slope conditions at the ends.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest number of abscissae kept in the hull.
const MAX_POINTS: usize = 64;

/// Relative slack allowed before a point above the hull is treated as a
/// concavity violation rather than rounding.
const HULL_SLACK: f64 = 1e-9;

/// Log density and its derivative at `x`.
pub trait LogConcave<T> {
    fn eval(&self, x: T) -> (T, T);
}

impl<T, F: Fn(T) -> (T, T)> LogConcave<T> for F {
    #[inline]
    fn eval(&self, x: T) -> (T, T) {
        self(x)
    }
}

#[derive(Debug, Clone, Copy)]
struct Point<T> {
    x: T,
    h: T,
    dh: T,
}

/// Sampler for a density proportional to `exp(h(x))` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Ars<T, F> {
    f: F,
    lo: T,
    hi: T,
    points: Vec<Point<T>>,
    /// Breakpoints `z_0 = lo < z_1 < ... < z_k = hi` of the hull.
    z: Vec<T>,
    /// Log mass of each hull piece.
    ln_mass: Vec<T>,
    trials: usize,
}

impl<T: Real, F: LogConcave<T>> Ars<T, F> {
    /// Builds the hull from starting abscissae inside `(lo, hi]`; points with
    /// a non-finite log density are skipped.
    pub fn new(f: F, lo: T, hi: T, start: &[T]) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty support [{lo}, {hi}]")));
        }
        let mut s = Self { f, lo, hi, points: Vec::new(), z: Vec::new(), ln_mass: Vec::new(), trials: 0 };
        for &x in start {
            if x > lo && x <= hi {
                s.insert(x);
            }
        }
        if s.points.is_empty() {
            return Err(Error::InvalidParameter("no starting abscissa with finite log density".into()));
        }
        s.rebuild()?;
        Ok(s)
    }

    /// Proposals evaluated so far.
    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn abscissae(&self) -> usize {
        self.points.len()
    }

    fn insert(&mut self, x: T) -> bool {
        let (h, dh) = self.f.eval(x);
        if !h.is_finite() || !dh.is_finite() {
            return false;
        }
        let at = self.points.partition_point(|p| p.x < x);
        if self.points.get(at).is_some_and(|p| p.x == x) {
            return false;
        }
        self.points.insert(at, Point { x, h, dh });
        true
    }

    fn rebuild(&mut self) -> Result<()> {
        let k = self.points.len();
        self.z.clear();
        self.z.push(self.lo);
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let denom = a.dh - b.dh;
            let z = if denom.abs() > T::lit(1e-12) * (a.dh.abs() + b.dh.abs()).max(T::lit(1e-300)) {
                (b.h - a.h - b.x * b.dh + a.x * a.dh) / denom
            } else {
                (a.x + b.x) * T::lit(0.5)
            };
            if denom < -T::lit(1e-9) * (a.dh.abs() + b.dh.abs()) {
                return Err(Error::BoundViolation { sampler: "adaptive rejection", ratio: f64::INFINITY });
            }
            self.z.push(z.max(a.x).min(b.x));
        }
        self.z.push(self.hi);
        self.ln_mass.clear();
        for j in 0..k {
            let p = self.points[j];
            self.ln_mass.push(ln_piece_mass(p.h + p.dh * (self.z[j] - p.x), p.dh, self.z[j + 1] - self.z[j]));
        }
        Ok(())
    }

    /// Upper hull at `x`.
    fn hull(&self, x: T) -> T {
        let j = self.z[1..self.z.len() - 1].partition_point(|&z| z < x);
        let p = self.points[j];
        p.h + p.dh * (x - p.x)
    }

    /// One exact draw; errors after `cap` proposals or on a hull violation.
    pub fn sample<R: Rng + ?Sized>(&mut self, cap: usize, rng: &mut R) -> Result<T> {
        for _ in 0..cap {
            self.trials += 1;
            let x = self.propose(rng);
            let (h, dh) = self.f.eval(x);
            let u = self.hull(x);
            if h > u + T::lit(HULL_SLACK) * (T::one() + u.abs()) {
                return Err(Error::BoundViolation { sampler: "adaptive rejection", ratio: (h - u).exp().as_f64() });
            }
            if T::open01(rng).ln() <= h - u {
                return Ok(x);
            }
            if self.points.len() < MAX_POINTS && h.is_finite() && dh.is_finite() && self.insert(x) {
                self.rebuild()?;
            }
        }
        Err(Error::TrialCap { sampler: "adaptive rejection", trials: cap })
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let max = self.ln_mass.iter().copied().fold(T::neg_infinity(), T::max);
        let total: T = self.ln_mass.iter().map(|&m| (m - max).exp()).sum();
        let mut target = T::open01(rng) * total;
        let mut j = self.ln_mass.len() - 1;
        for (k, &m) in self.ln_mass.iter().enumerate() {
            let w = (m - max).exp();
            if target < w {
                j = k;
                break;
            }
            target = target - w;
        }
        let (a, b) = (self.z[j], self.z[j + 1]);
        let x = a + sample_exp_piece(self.points[j].dh, b - a, T::open01(rng));
        x.max(a).min(b)
    }
}

/// `ln int_0^w exp(v + g s) ds`.
fn ln_piece_mass<T: Real>(v: T, g: T, w: T) -> T {
    if w <= T::zero() {
        return T::neg_infinity();
    }
    let gw = g * w;
    if gw.abs() < T::lit(1e-12) {
        v + w.ln()
    } else if g > T::zero() {
        v + gw + ((-(-gw).exp_m1()) / g).ln()
    } else {
        v + (gw.exp_m1() / g).ln()
    }
}

/// Inverse cdf of the density `~ exp(g s)` on `[0, w]` at `u`.
fn sample_exp_piece<T: Real>(g: T, w: T, u: T) -> T {
    let gw = g * w;
    if gw.abs() < T::lit(1e-12) {
        u * w
    } else if g > T::zero() {
        w + (u + (T::one() - u) * (-gw).exp()).ln() / g
    } else {
        (u * gw.exp_m1()).ln_1p() / g
    }
}
