//! Two-state detailed-balance checks of the Metropolis updates, against
//! targets and proposal densities written out independently here.

use std::f64::consts::PI;

use unimodal::mcmc::biv::ln_ratio_rho;
use unimodal::mcmc::bridge::{c_conditional, ln_ratio_mu_latent};
use unimodal::mcmc::uni::{ln_ratio_c, ln_ratio_mu};
use unimodal::mcmc::Prior;

const YS: [f64; 5] = [1.3, 2.9, 0.4, 5.1, 2.2];
const KAPPA: f64 = 2.0;

fn ln_norm(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (x - mean).powi(2) / var - 0.5 * (2.0 * PI * var).ln()
}

fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn ln_kernel(y: f64, mu: f64, c: f64) -> f64 {
    let sigma = mu.abs() / c.sqrt();
    let a = (1.0 / (y - KAPPA) - mu) / sigma;
    let b = -mu / sigma;
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    (mu * (cdf(a) - cdf(b)) + sigma * (phi(b) - phi(a))).abs().ln()
}

fn ln_latent(y: f64, x: f64, mu: f64, c: f64) -> f64 {
    let t = y - KAPPA;
    x.ln() - 2.0 * t.abs().ln() + ln_norm(x / t, mu, mu * mu / c)
}

fn ln_gamma_rate(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - libm::lgamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

fn balanced(ln_pi: [f64; 2], ln_q: [f64; 2], r: [f64; 2]) {
    // pi(a) q(b|a) alpha(a,b) = pi(b) q(a|b) alpha(b,a)
    let lhs = ln_pi[0] + ln_q[0] + r[0].min(0.0);
    let rhs = ln_pi[1] + ln_q[1] + r[1].min(0.0);
    assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
}

#[test]
fn mean_walk_is_balanced() {
    let prior = Prior { mu_var: 4.0, ..Prior::reference() };
    let (c, a, b) = (1.7, 0.9, 1.6);
    let pi = |mu: f64| ln_norm(mu, 0.0, prior.mu_var) + YS.iter().map(|&y| ln_kernel(y, mu, c)).sum::<f64>();
    let r = [ln_ratio_mu(&YS, a, b, c, KAPPA, &prior), ln_ratio_mu(&YS, b, a, c, KAPPA, &prior)];
    balanced([pi(a), pi(b)], [0.0, 0.0], r);
}

#[test]
fn latent_mean_walk_is_balanced() {
    let prior = Prior { mu_var: 4.0, ..Prior::reference() };
    let xs = [0.3, 0.8, 0.55, 0.12, 0.9];
    let (c, a, b) = (1.7, 0.9, 1.6);
    let pi = |mu: f64| {
        ln_norm(mu, 0.0, prior.mu_var) + YS.iter().zip(&xs).map(|(&y, &x)| ln_latent(y, x, mu, c)).sum::<f64>()
    };
    let r = [ln_ratio_mu_latent(&YS, &xs, a, b, c, KAPPA, &prior), ln_ratio_mu_latent(&YS, &xs, b, a, c, KAPPA, &prior)];
    balanced([pi(a), pi(b)], [0.0, 0.0], r);
}

#[test]
fn log_walk_on_c_is_balanced() {
    let prior = Prior { c_shape: 2.0, c_rate: 0.5, ..Prior::reference() };
    let mus = [1.2, -0.7];
    let d = [0, 1, 0, 0, 1];
    let h = 0.25;
    let (a, b) = (0.8, 2.3);
    let pi = |c: f64| {
        ln_gamma_rate(c, prior.c_shape, prior.c_rate) + YS.iter().zip(&d).map(|(&y, &k)| ln_kernel(y, mus[k], c)).sum::<f64>()
    };
    // log-normal walk: q(c' | c) = N(ln c'; ln c, h) / c'
    let q = |from: f64, to: f64| ln_norm(to.ln(), from.ln(), h) - to.ln();
    let r = [ln_ratio_c(&YS, &mus, &d, a, b, KAPPA, &prior), ln_ratio_c(&YS, &mus, &d, b, a, KAPPA, &prior)];
    balanced([pi(a), pi(b)], [q(a, b), q(b, a)], r);
}

#[test]
fn logit_walk_on_rho_is_balanced() {
    let scores = [[0.3, 0.5], [-1.2, -0.4], [0.8, 1.9], [-0.1, 0.6]];
    let h = 0.5f64;
    let (a, b) = (0.25, 0.7);
    let pi = |rho: f64| {
        let s2 = 1.0 - rho * rho;
        scores
            .iter()
            .map(|q| -0.5 * s2.ln() - (rho * rho * (q[0] * q[0] + q[1] * q[1]) - 2.0 * rho * q[0] * q[1]) / (2.0 * s2))
            .sum::<f64>()
    };
    let logit = |r: f64| (r / (1.0 - r)).ln();
    let q = |from: f64, to: f64| ln_norm(logit(to), logit(from), h * h) - (to * (1.0 - to)).ln();
    let r = [ln_ratio_rho(&scores, a, b), ln_ratio_rho(&scores, b, a)];
    balanced([pi(a), pi(b)], [q(a, b), q(b, a)], r);
}

#[test]
fn gibbs_c_is_the_exact_conditional() {
    let prior = Prior { c_shape: 2.0, c_rate: 0.5, ..Prior::reference() };
    let mus = [1.2, -0.7];
    let d = [0, 1, 0, 0, 1];
    let xs = [0.3, 0.8, 0.55, 0.12, 0.9];
    let (shape, rate) = c_conditional(&YS, &xs, &mus, &d, KAPPA, &prior).unwrap();
    let pi = |c: f64| {
        ln_gamma_rate(c, prior.c_shape, prior.c_rate)
            + YS.iter().zip(&xs).zip(&d).map(|((&y, &x), &k)| ln_latent(y, x, mus[k], c)).sum::<f64>()
    };
    for (a, b) in [(0.3, 1.0), (1.0, 4.5), (0.05, 9.0)] {
        let want = pi(b) - pi(a);
        let got = ln_gamma_rate(b, shape, rate) - ln_gamma_rate(a, shape, rate);
        assert!((want - got).abs() < 1e-10, "{want} vs {got}");
    }
}
