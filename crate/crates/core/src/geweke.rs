//! Joint-distribution ("getting it right") tests of the samplers.
//!
//! Draws of the parameters are produced two ways: independently from the
//! prior (marginal-conditional), and by alternating one sweep with a fresh
//! draw of the data given the current state (successive-conditional). Both
//! have the prior as their distribution iff the sweep leaves the posterior
//! invariant.
//!
//! A single successive-conditional chain mixes very slowly in the mode, so
//! each successive-conditional draw is the end of its own short chain started
//! from the prior; every such end point is an independent prior draw when the
//! sweep is correct. Each statistic is binned into equiprobable cells of the
//! prior sample and the two histograms are compared by chi-squared.

use rand::Rng;

use crate::data::{Column, Dataset};
use crate::diagnostics::{bin_counts, chi2_two_sample, equiprobable_edges};
use crate::error::Result;
use crate::mcmc::biv::{self, BivState};
use crate::mcmc::bridge::{self, BridgeState};
use crate::mcmc::uni::{self, UniState};
use crate::mcmc::{McmcConfig, MoveStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    Marginal,
    Bridge,
    Bivariate,
}

impl Sampler {
    pub fn statistics(self) -> &'static [&'static str] {
        match self {
            Self::Marginal | Self::Bridge => &["kappa", "c", "M"],
            Self::Bivariate => &["kappa1", "kappa2", "rho", "c1", "c2", "M"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticTest {
    pub name: &'static str,
    pub chi2: f64,
    pub df: f64,
    pub p_value: f64,
    pub prior_mean: f64,
    pub chain_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeReport {
    pub sampler: Sampler,
    pub tests: Vec<StatisticTest>,
    pub stats: MoveStats,
}

impl GewekeReport {
    pub fn min_p(&self) -> f64 {
        self.tests.iter().map(|t| t.p_value).fold(1.0, f64::min)
    }
}

enum Chain {
    Uni(UniState<f64>, Column<f64>),
    Bridge(BridgeState<f64>, Column<f64>),
    Biv(BivState<f64>, Dataset<f64>),
}

impl Chain {
    fn draw(sampler: Sampler, n: usize, cfg: &McmcConfig<f64>, rng: &mut (impl Rng + ?Sized)) -> Result<Self> {
        Ok(match sampler {
            Sampler::Marginal => {
                let s = UniState::draw_prior(n, cfg, rng)?;
                let ys = uni::regenerate(&s, rng);
                Self::Uni(s, Column::new(ys)?)
            }
            Sampler::Bridge => {
                let (s, ys) = BridgeState::draw_prior(n, cfg, rng)?;
                Self::Bridge(s, Column::new(ys)?)
            }
            Sampler::Bivariate => {
                let (s, [a, b]) = BivState::draw_prior(n, cfg, rng)?;
                Self::Biv(s, Dataset::bivariate(a, b)?)
            }
        })
    }

    fn record(&self) -> Vec<f64> {
        match self {
            Self::Uni(s, _) => vec![s.kappa, s.c, s.scale()],
            Self::Bridge(s, _) => vec![s.chain.kappa, s.chain.c, s.chain.scale()],
            Self::Biv(s, _) => vec![s.kappa[0], s.kappa[1], s.rho, s.c[0], s.c[1], s.scale()],
        }
    }

    fn step(&mut self, cfg: &McmcConfig<f64>, stats: &mut MoveStats, rng: &mut (impl Rng + ?Sized)) -> Result<()> {
        match self {
            Self::Uni(s, data) => {
                uni::sweep_uni(s, data, cfg, stats, rng)?;
                *data = Column::new(uni::regenerate(s, rng))?;
            }
            Self::Bridge(s, data) => {
                bridge::sweep_bridge(s, data, cfg, stats, rng)?;
                *data = Column::new(bridge::regenerate(s, rng))?;
            }
            Self::Biv(s, data) => {
                biv::sweep_biv(s, data, cfg, stats, rng)?;
                let [a, b] = biv::regenerate(s, rng);
                *data = Dataset::bivariate(a, b)?;
            }
        }
        Ok(())
    }
}

/// Runs `cycles` prior draws and `cycles` successive-conditional chains of
/// `steps` sweeps each on `n` observations, and compares every statistic over
/// `bins` cells.
pub fn run<R: Rng + ?Sized>(
    sampler: Sampler,
    n: usize,
    cycles: usize,
    steps: usize,
    bins: usize,
    cfg: &McmcConfig<f64>,
    rng: &mut R,
) -> Result<GewekeReport> {
    let names = sampler.statistics();
    let mut prior: Vec<Vec<f64>> = vec![Vec::with_capacity(cycles); names.len()];
    for _ in 0..cycles {
        for (col, v) in prior.iter_mut().zip(Chain::draw(sampler, n, cfg, rng)?.record()) {
            col.push(v);
        }
    }
    let mut stats = MoveStats::default();
    let mut succ: Vec<Vec<f64>> = vec![Vec::with_capacity(cycles); names.len()];
    for _ in 0..cycles {
        let mut chain = Chain::draw(sampler, n, cfg, rng)?;
        for _ in 0..steps.max(1) {
            chain.step(cfg, &mut stats, rng)?;
        }
        for (col, v) in succ.iter_mut().zip(chain.record()) {
            col.push(v);
        }
    }
    let tests = names
        .iter()
        .zip(prior.iter().zip(&succ))
        .map(|(&name, (a, b))| {
            let edges = equiprobable_edges(a, bins);
            let (chi2, df, p_value) = chi2_two_sample(&bin_counts(a, &edges), &bin_counts(b, &edges));
            StatisticTest {
                name,
                chi2,
                df,
                p_value,
                prior_mean: crate::diagnostics::mean(a),
                chain_mean: crate::diagnostics::mean(b),
            }
        })
        .collect();
    Ok(GewekeReport { sampler, tests, stats })
}
