//! Exhaustive check of the mode move on a six-point fixture: every feasible
//! (gap, offset) pair is compared with a from-scratch evaluation of the joint
//! density and the proposal densities, and every accepted move's reverse
//! must carry exactly the negated log ratio.

use unimodal::data::Column;
use unimodal::dpmix::{xi, StickState};
use unimodal::kernel::KernelParams;
use unimodal::mcmc::kappa::{ln_acceptance, reassignment, Gaps, ModeTarget};
use unimodal::mcmc::{EdgePolicy, Prior};

const Y: [f64; 6] = [1.0, 3.0, 0.5, 6.0, 2.0, 4.5];
const MUS: [f64; 3] = [0.8, -1.5, 2.5];
const C: f64 = 2.0;
const GAMMA: f64 = 0.3;
const WINDOW: usize = 3;

struct Fixture {
    sticks: StickState<f64>,
    u: [f64; 6],
}

impl ModeTarget<f64> for Fixture {
    fn ln_obs(&self, i: usize, kappa: f64, k: usize) -> f64 {
        KernelParams::new(MUS[k], C, kappa).unwrap().ln_density(Y[i])
    }
    fn ln_component(&self, _i: usize, k: usize) -> f64 {
        self.sticks.weights()[k].ln() - xi(k + 1, GAMMA).unwrap().ln()
    }
    fn admits(&self, i: usize, k: usize) -> bool {
        self.u[i] < xi(k + 1, GAMMA).unwrap()
    }
}

fn fixture(u: [f64; 6]) -> Fixture {
    Fixture { sticks: StickState::from_fractions(vec![0.5, 0.4, 0.7], 1.3).unwrap(), u }
}

fn prior() -> Prior<f64> {
    Prior { kappa_mean: 2.0, kappa_var: 9.0, ..Prior::reference() }
}

/// Log joint of (kappa, d) given everything else, written without the crate's sampler code.
fn ln_joint(kappa: f64, d: &[usize]) -> f64 {
    let p = prior();
    let mut ln = -0.5 * (kappa - p.kappa_mean).powi(2) / p.kappa_var;
    let w: [f64; 3] = [0.5, 0.5 * 0.4, 0.5 * 0.6 * 0.7];
    for i in 0..6 {
        let k = d[i];
        let g = MUS[k] * MUS[k] / C;
        let sigma = g.sqrt();
        let t = Y[i] - kappa;
        // closed form of the kernel: |mu (Phi(a) - Phi(b)) + sigma (phi(b) - phi(a))|, a = (1/t - mu)/sigma, b = -mu/sigma
        let a = (1.0 / t - MUS[k]) / sigma;
        let b = -MUS[k] / sigma;
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = |z: f64| 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        let f = (MUS[k] * (cdf(a) - cdf(b)) + sigma * (phi(b) - phi(a))).abs();
        ln += f.ln() + w[k].ln() + GAMMA * (k as f64 + 1.0);
    }
    ln
}

fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Feasible offsets and gap lengths by direct counting on the sorted data.
fn window_count(h: usize) -> usize {
    (-(WINDOW as isize)..=WINDOW as isize).filter(|s| (1..=5).contains(&(h as isize + s))).count()
}

fn gap_length(h: usize) -> f64 {
    let mut s = Y.to_vec();
    s.sort_by(f64::total_cmp);
    s[h] - s[h - 1]
}

fn midpoint(h: usize, frac: f64) -> f64 {
    let mut s = Y.to_vec();
    s.sort_by(f64::total_cmp);
    s[h - 1] + frac * (s[h] - s[h - 1])
}

#[test]
fn every_move_matches_enumeration() {
    let column = Column::new(Y.to_vec()).unwrap();
    let gaps = Gaps::new(&column, EdgePolicy::Truncate);
    let fx = fixture([1e-4; 6]);
    // sorted ranks hold components 0, 0, 1, 1, 1, 0
    let d = vec![0, 1, 0, 0, 1, 1];
    let (mut checked, mut changing) = (0, 0);
    for h in 1..=5 {
        let kappa = midpoint(h, 0.3);
        for s in -(WINDOW as isize)..=WINDOW as isize {
            let to = h as isize + s;
            if !(1..=5).contains(&to) {
                continue;
            }
            let to = to as usize;
            let kappa_new = midpoint(to, 0.6);
            let Some(changes) = reassignment(&d, column.order(), h, s) else { continue };
            let mut d_new = d.clone();
            for &(i, k) in &changes {
                d_new[i] = k;
            }
            let got = ln_acceptance(&gaps, &d, kappa, kappa_new, h, s, &changes, WINDOW, &prior(), &fx);
            let want = ln_joint(kappa_new, &d_new) - ln_joint(kappa, &d)
                + (window_count(h) as f64).ln()
                - (window_count(to) as f64).ln()
                - gap_length(h).ln()
                + gap_length(to).ln();
            assert!((got - want).abs() < 1e-10, "h {h} s {s}: {got} vs {want}");
            // reverse move restores d and negates the ratio
            let back = reassignment(&d_new, column.order(), to, -s).expect("reverse move exists");
            let mut d_back = d_new.clone();
            for &(i, k) in &back {
                d_back[i] = k;
            }
            assert_eq!(d_back, d);
            let rev = ln_acceptance(&gaps, &d_new, kappa_new, kappa, to, -s, &back, WINDOW, &prior(), &fx);
            assert!((got + rev).abs() < 1e-10, "h {h} s {s}: {got} vs {rev}");
            checked += 1;
            changing += usize::from(!changes.is_empty());
        }
    }
    assert!(checked >= 10 && changing >= 4, "{checked} reversible moves, {changing} changing allocations");
}

#[test]
fn inadmissible_reassignment_is_rejected() {
    let column = Column::new(Y.to_vec()).unwrap();
    let gaps = Gaps::new(&column, EdgePolicy::Truncate);
    let d = vec![0, 1, 0, 0, 1, 1];
    let (h, s, changes) = (1..=5usize)
        .flat_map(|h| (-3isize..=3).map(move |s| (h, s)))
        .filter(|&(h, s)| (1..=5).contains(&(h as isize + s)))
        .find_map(|(h, s)| {
            let c = reassignment(&d, column.order(), h, s)?;
            c.iter().any(|&(i, k)| k > d[i]).then_some((h, s, c))
        })
        .expect("fixture has a move into a later component");
    let &(i, k) = changes.iter().find(|&&(i, k)| k > d[i]).unwrap();
    let to = (h as isize + s) as usize;
    let mut u = [1e-4; 6];
    let ln = ln_acceptance(&gaps, &d, midpoint(h, 0.5), midpoint(to, 0.5), h, s, &changes, WINDOW, &prior(), &fixture(u));
    assert!(ln.is_finite());
    // slice admits the current component but not the receiving one
    u[i] = 0.5 * (xi(d[i] + 1, GAMMA).unwrap() + xi(k + 1, GAMMA).unwrap());
    let ln = ln_acceptance(&gaps, &d, midpoint(h, 0.5), midpoint(to, 0.5), h, s, &changes, WINDOW, &prior(), &fixture(u));
    assert_eq!(ln, f64::NEG_INFINITY);
}
