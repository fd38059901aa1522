//! Chain execution and run artifacts.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use unimodal::data::{Column, Dataset};
use unimodal::diagnostics::pearson;
use unimodal::dpmix::StickState;
use unimodal::mcmc::biv::{sweep_biv, BivState};
use unimodal::mcmc::bridge::{sweep_bridge, BridgeState};
use unimodal::mcmc::uni::{sweep_uni, UniState};
use unimodal::mcmc::{McmcConfig, MoveStats};
use unimodal::predictive::{predictive_draw, Snapshot};

use crate::config::{flatten, Model, RunConfig};
use crate::ingest::{ingest, ColumnSummary};
use crate::summarize::{parameter_rows, write_parameter_rows};
use crate::CliError;

/// Predictive draws per correlation block of the bivariate run. Blocks are
/// built from one extra draw at every post-burn-in iteration, not the thinned
/// states.
pub const CORRELATION_BLOCK: usize = 100;

/// One retained state, reduced to what is persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedState {
    pub chain: usize,
    pub iteration: usize,
    pub fractions: Vec<f64>,
    pub m: f64,
    pub mus: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub kappa: Vec<f64>,
    pub rho: f64,
    pub clusters: usize,
}

impl SavedState {
    pub fn snapshot(&self) -> Result<Snapshot<f64>, CliError> {
        let sticks = StickState::from_fractions(self.fractions.clone(), self.m).map_err(CliError::from_core)?;
        Snapshot::new(sticks, self.mus.clone(), self.c.clone(), self.kappa.clone(), self.rho).map_err(CliError::from_core)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ChainOutput {
    pub states: Vec<SavedState>,
    pub predictive: Vec<Vec<f64>>,
    /// Bivariate runs: sample correlations of successive blocks of per-iteration predictive draws.
    pub correlations: Vec<f64>,
    pub stats: MoveStats,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub config: RunConfig,
    pub columns: Vec<String>,
    pub summaries: Vec<ColumnSummary>,
    pub chains: Vec<ChainOutput>,
    pub wall_seconds: f64,
}

impl FitResult {
    /// Values of one state field pooled over chains, in chain order.
    pub fn pooled(&self, f: impl Fn(&SavedState) -> f64) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.states.iter().map(&f)).collect()
    }

    pub fn predictive(&self) -> Vec<Vec<f64>> {
        self.chains.iter().flat_map(|c| c.predictive.iter().cloned()).collect()
    }

    /// Block correlations of all chains, in chain order.
    pub fn block_correlations(&self) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.correlations.iter().copied()).collect()
    }

    pub fn stats(&self) -> MoveStats {
        let mut s = MoveStats::default();
        for c in &self.chains {
            s.merge(&c.stats);
        }
        s
    }
}

enum Chain {
    Uni(UniState<f64>, Column<f64>),
    Bridge(BridgeState<f64>, Column<f64>),
    Biv(BivState<f64>, Dataset<f64>),
}

impl Chain {
    fn start(model: Model, data: &Dataset<f64>, cfg: &McmcConfig<f64>, rng: &mut ChaCha8Rng) -> unimodal::Result<Self> {
        Ok(match model {
            Model::UniMarginal => Self::Uni(UniState::initial(data.column(0), cfg, rng)?, data.column(0).clone()),
            Model::UniBridge => Self::Bridge(BridgeState::initial(data.column(0), cfg, rng)?, data.column(0).clone()),
            Model::Bivariate => Self::Biv(BivState::initial(data, cfg, rng)?, data.clone()),
        })
    }

    fn sweep(&mut self, cfg: &McmcConfig<f64>, stats: &mut MoveStats, rng: &mut ChaCha8Rng) -> unimodal::Result<()> {
        match self {
            Self::Uni(s, d) => sweep_uni(s, d, cfg, stats, rng),
            Self::Bridge(s, d) => sweep_bridge(s, d, cfg, stats, rng),
            Self::Biv(s, d) => sweep_biv(s, d, cfg, stats, rng),
        }
    }

    /// The mixture of the current state, cut after the last occupied
    /// component: later sticks and their means are prior draws, which the
    /// fresh-component mass of the snapshot represents exactly.
    fn snapshot(&self) -> (Snapshot<f64>, usize) {
        let (mut snap, alloc) = match self {
            Self::Uni(s, _) => (Snapshot::from(s), &s.alloc),
            Self::Bridge(s, _) => (Snapshot::from(&s.chain), &s.chain.alloc),
            Self::Biv(s, _) => (Snapshot::from(s), &s.alloc),
        };
        let keep = alloc.max_component().clamp(1, snap.sticks.len());
        snap.sticks.truncate(keep);
        for m in &mut snap.mus {
            m.truncate(keep);
        }
        (snap, alloc.occupied())
    }

    /// Sum over observations of the log kernel density at the allocated component.
    fn ln_likelihood(&self) -> f64 {
        let (snap, _) = self.snapshot();
        let (d, cols): (&[usize], Vec<&Column<f64>>) = match self {
            Self::Uni(s, c) => (&s.alloc.d, vec![c]),
            Self::Bridge(s, c) => (&s.chain.alloc.d, vec![c]),
            Self::Biv(s, data) => (&s.alloc.d, data.columns().iter().collect()),
        };
        cols.iter()
            .enumerate()
            .map(|(l, col)| col.values().iter().zip(d).map(|(&y, &k)| snap.params(l, k).ln_density(y)).sum::<f64>())
            .sum()
    }
}

fn saved(chain: usize, iteration: usize, snap: &Snapshot<f64>, clusters: usize) -> SavedState {
    let k = snap.sticks.len();
    SavedState {
        chain,
        iteration,
        fractions: snap.sticks.fractions().to_vec(),
        m: snap.sticks.scale(),
        mus: snap.mus.iter().map(|m| m[..k].to_vec()).collect(),
        c: snap.c.clone(),
        kappa: snap.kappa.clone(),
        rho: snap.rho,
        clusters,
    }
}

/// Generator of one chain: the root seed with the chain's own stream. The
/// predictive draws use a disjoint stream so they never perturb the chain.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const PREDICTIVE_STREAMS: u64 = 1 << 32;
const CORRELATION_STREAMS: u64 = 2 << 32;

fn run_chain(cfg: &RunConfig, data: &Dataset<f64>, index: usize) -> Result<ChainOutput, CliError> {
    let mcmc = cfg.mcmc();
    let mut rng = chain_rng(cfg.chain.seed, index as u64);
    let mut pred_rng = chain_rng(cfg.chain.seed, PREDICTIVE_STREAMS + index as u64);
    let mut corr_rng = chain_rng(cfg.chain.seed, CORRELATION_STREAMS + index as u64);
    let mut block: Vec<[f64; 2]> = Vec::with_capacity(CORRELATION_BLOCK);
    let mut chain = Chain::start(cfg.model, data, &mcmc, &mut rng)
        .map_err(|e| CliError::Numerical(format!("chain {index}: initialization failed: {e}")))?;
    let ll = chain.ln_likelihood();
    if !ll.is_finite() {
        return Err(CliError::Numerical(format!("chain {index}: log likelihood at the initial state is {ll}")));
    }
    let mut out = ChainOutput::default();
    for t in 1..=cfg.chain.iterations {
        chain
            .sweep(&mcmc, &mut out.stats, &mut rng)
            .map_err(|e| CliError::Numerical(format!("chain {index}, iteration {t}: {e}")))?;
        if t <= cfg.chain.burn_in {
            continue;
        }
        let keep = (t - cfg.chain.burn_in) % cfg.chain.thin == 0;
        if !keep && data.dim() != 2 {
            continue;
        }
        let (snap, clusters) = chain.snapshot();
        if data.dim() == 2 {
            let y = predictive_draw(&snap, &mcmc.prior, &mut corr_rng);
            block.push([y[0], y[1]]);
            if block.len() == CORRELATION_BLOCK {
                out.correlations.push(pearson(&block));
                block.clear();
            }
        }
        if keep {
            out.predictive.push(predictive_draw(&snap, &mcmc.prior, &mut pred_rng));
            out.states.push(saved(index, t, &snap, clusters));
        }
    }
    Ok(out)
}

/// Runs `n_chains` chains on `data`, one thread each.
pub fn run_chains(cfg: &RunConfig, data: &Dataset<f64>) -> Result<Vec<ChainOutput>, CliError> {
    if data.dim() != cfg.model.dim() {
        return Err(CliError::Data(format!("model needs {} column(s), data has {}", cfg.model.dim(), data.dim())));
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.chain.n_chains).map(|k| s.spawn(move || run_chain(cfg, data, k))).collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    })
}

/// Fits `data` (already ingested) and returns the in-memory result.
pub fn fit_data(cfg: &RunConfig, data: &Dataset<f64>, columns: Vec<String>) -> Result<FitResult, CliError> {
    let started = Instant::now();
    let summaries = columns.iter().zip(data.columns()).map(|(n, c)| ColumnSummary::of(n, c.values())).collect();
    let chains = run_chains(cfg, data)?;
    Ok(FitResult { config: cfg.clone(), columns, summaries, chains, wall_seconds: started.elapsed().as_secs_f64() })
}

/// Reads the configured input, fits it and writes every artifact to `io.output`.
pub fn fit(cfg: &RunConfig) -> Result<FitResult, CliError> {
    let input = cfg.io.input.as_ref().ok_or_else(|| CliError::Config("io.input is required for fit".into()))?;
    let data = ingest(input, &cfg.io.columns, cfg.model.dim(), cfg.io.rows, cfg.io.row_seed)?;
    let result = fit_data(cfg, &data.data, data.columns)?;
    write_outputs(&cfg.io.output, &result)?;
    Ok(result)
}

pub fn state_names(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["kappa", "c", "M", "clusters"]
    } else {
        vec!["kappa1", "kappa2", "c1", "c2", "M", "rho", "clusters"]
    }
}

pub fn state_values(s: &SavedState) -> Vec<f64> {
    let mut v = Vec::with_capacity(7);
    v.extend(&s.kappa);
    v.extend(&s.c);
    v.push(s.m);
    if s.kappa.len() == 2 {
        v.push(s.rho);
    }
    v.push(s.clusters as f64);
    v
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const DRAWS: &str = "draws.csv";
    pub const PREDICTIVE: &str = "predictive.csv";
    pub const CORRELATIONS: &str = "predictive_correlations.csv";
    pub const STATES: &str = "states.jsonl";
    pub const DIAGNOSTICS: &str = "diagnostics.csv";
    pub const MANIFEST: &str = "manifest.json";
}

pub fn write_outputs(dir: &Path, r: &FitResult) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let dim = r.config.model.dim();

    let mut w = csv::Writer::from_path(dir.join(files::DRAWS))?;
    let mut header = vec!["chain", "iteration"];
    header.extend(state_names(dim));
    w.write_record(&header)?;
    for s in r.chains.iter().flat_map(|c| &c.states) {
        let mut row = vec![s.chain.to_string(), s.iteration.to_string()];
        row.extend(state_values(s).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(files::PREDICTIVE))?;
    let mut header = vec!["chain".to_string(), "iteration".to_string()];
    header.extend(r.columns.iter().cloned());
    w.write_record(&header)?;
    for c in &r.chains {
        for (s, y) in c.states.iter().zip(&c.predictive) {
            let mut row = vec![s.chain.to_string(), s.iteration.to_string()];
            row.extend(y.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;

    if dim == 2 {
        let mut w = csv::Writer::from_path(dir.join(files::CORRELATIONS))?;
        w.write_record(["chain", "block", "correlation"])?;
        for (k, c) in r.chains.iter().enumerate() {
            for (b, r) in c.correlations.iter().enumerate() {
                w.write_record([k.to_string(), b.to_string(), r.to_string()])?;
            }
        }
        w.flush()?;
    }

    let mut states = String::new();
    for s in r.chains.iter().flat_map(|c| &c.states) {
        states.push_str(&serde_json::to_string(s)?);
        states.push('\n');
    }
    std::fs::write(dir.join(files::STATES), states)?;

    let names = state_names(dim);
    let per_chain: Vec<Vec<Vec<f64>>> = r
        .chains
        .iter()
        .map(|c| (0..names.len()).map(|j| c.states.iter().map(|s| state_values(s)[j]).collect()).collect())
        .collect();
    write_parameter_rows(&dir.join(files::DIAGNOSTICS), &parameter_rows(&names, &per_chain))?;

    let stats = r.stats();
    let rate = |a: &unimodal::mcmc::Acceptance| if a.proposed == 0 { serde_json::Value::Null } else { json!(a.rate()) };
    let manifest = json!({
        "config": r.config,
        "config_flat": flatten(&r.config),
        "seed": r.config.chain.seed,
        "n": r.summaries.first().map(|s| s.n),
        "columns": r.summaries,
        "retained_per_chain": r.chains.iter().map(|c| c.states.len()).collect::<Vec<_>>(),
        "acceptance": {
            "mu": rate(&stats.mu),
            "c": rate(&stats.c),
            "kappa": rate(&stats.kappa[0]),
            "kappa2": rate(&stats.kappa[1]),
            "rho": rate(&stats.rho),
        },
        "sampler_events": {
            "latent_draws": stats.latent_draws,
            "latent_fallbacks": stats.latent_fallbacks,
            "pair_fallbacks": stats.pair_fallbacks,
            "coordinate_slices": stats.coordinate_slices,
            "degenerate_allocations": stats.degenerate_allocations,
        },
        "wall_seconds": r.wall_seconds,
        "version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::write(dir.join(files::MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Reads back the persisted states of a run directory.
pub fn read_states(dir: &Path) -> Result<Vec<SavedState>, CliError> {
    let path = dir.join(files::STATES);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1))))
        .collect()
}
