//! Run configuration: defaults, named presets, key=value or JSON files and
//! flag overrides, all merged on a JSON tree before typed validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use unimodal::dpmix::ScaleUpdate;
use unimodal::mcmc::{Conditioning, EdgePolicy, Init, McmcConfig, Prior, Tuning};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    UniMarginal,
    UniBridge,
    Bivariate,
}

impl Model {
    pub fn dim(self) -> usize {
        match self {
            Model::Bivariate => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Long,
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mu_var: f64,
    pub kappa_mean: f64,
    pub kappa_var: f64,
    pub c_shape: f64,
    pub c_rate: f64,
    pub m_shape: f64,
    pub m_rate: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        let p = Prior::<f64>::reference();
        Self {
            mu_var: p.mu_var,
            kappa_mean: p.kappa_mean,
            kappa_var: p.kappa_var,
            c_shape: p.c_shape,
            c_rate: p.c_rate,
            m_shape: p.m_shape,
            m_rate: p.m_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Truncate,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMove {
    Auxiliary,
    Sticks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationPmf {
    Marginal,
    Latent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Single,
    Orthant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub h_mu: f64,
    pub h_c: f64,
    pub h_rho: f64,
    pub window: usize,
    pub trial_cap: usize,
    pub rejection_cap: usize,
    pub gamma: f64,
    pub edge: Edge,
    pub scale_update: ScaleMove,
    pub conditioning: AllocationPmf,
    pub init: Start,
}

impl Default for TuningConfig {
    fn default() -> Self {
        let t = Tuning::<f64>::default();
        Self {
            h_mu: t.h_mu,
            h_c: t.h_c,
            h_rho: t.h_rho,
            window: t.window,
            trial_cap: t.trial_cap,
            rejection_cap: t.rejection_cap,
            gamma: t.gamma,
            edge: Edge::Truncate,
            scale_update: ScaleMove::Auxiliary,
            conditioning: match t.conditioning {
                Conditioning::Marginal => AllocationPmf::Marginal,
                Conditioning::Latent => AllocationPmf::Latent,
            },
            init: match t.init {
                Init::Single => Start::Single,
                Init::Orthant => Start::Orthant,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub n_chains: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    /// Column names to model; empty selects the first `dim` columns.
    pub columns: Vec<String>,
    pub output: PathBuf,
    /// Optional random subset of this many rows.
    pub rows: Option<usize>,
    pub row_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub prior: PriorConfig,
    pub tuning: TuningConfig,
    pub chain: ChainConfig,
    pub io: IoConfig,
}

impl RunConfig {
    /// Run lengths of a preset for a model.
    pub fn preset(model: Model, preset: Preset) -> Self {
        let (iterations, burn_in, thin) = match (preset, model) {
            (Preset::Long, Model::Bivariate) => (75_000, 5_000, 50),
            (Preset::Long, _) => (300_000, 10_000, 100),
            (Preset::Desk, Model::Bivariate) => (20_000, 2_000, 10),
            (Preset::Desk, _) => (30_000, 2_000, 10),
        };
        Self {
            model,
            prior: PriorConfig::default(),
            tuning: TuningConfig::default(),
            chain: ChainConfig { iterations, burn_in, thin, seed: 1, n_chains: 1 },
            io: IoConfig { input: None, columns: Vec::new(), output: PathBuf::from("run"), rows: None, row_seed: 0 },
        }
    }

    /// Builds a config from a preset, an optional file and `key=value` overrides.
    pub fn load(model: Model, preset: Preset, file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut tree = serde_json::to_value(Self::preset(model, preset)).expect("config serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            merge_text(&mut tree, &text)?;
        }
        for kv in overrides {
            apply_pair(&mut tree, kv)?;
        }
        let cfg: Self = serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.chain;
        if c.iterations <= c.burn_in {
            return Err(CliError::Config(format!(
                "iterations ({}) must exceed burn_in ({})",
                c.iterations, c.burn_in
            )));
        }
        if c.thin == 0 {
            return Err(CliError::Config("thin must be at least 1".into()));
        }
        if c.n_chains == 0 {
            return Err(CliError::Config("n_chains must be at least 1".into()));
        }
        if !self.io.columns.is_empty() && self.io.columns.len() != self.model.dim() {
            return Err(CliError::Config(format!(
                "model {:?} needs {} column(s), got {}",
                self.model,
                self.model.dim(),
                self.io.columns.len()
            )));
        }
        self.mcmc().validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn mcmc(&self) -> McmcConfig<f64> {
        let p = &self.prior;
        let t = &self.tuning;
        McmcConfig {
            prior: Prior {
                mu_var: p.mu_var,
                kappa_mean: p.kappa_mean,
                kappa_var: p.kappa_var,
                c_shape: p.c_shape,
                c_rate: p.c_rate,
                m_shape: p.m_shape,
                m_rate: p.m_rate,
            },
            tuning: Tuning {
                h_mu: t.h_mu,
                h_c: t.h_c,
                h_rho: t.h_rho,
                window: t.window,
                trial_cap: t.trial_cap,
                rejection_cap: t.rejection_cap,
                gamma: t.gamma,
                edge: match t.edge {
                    Edge::Truncate => EdgePolicy::Truncate,
                    Edge::Open => EdgePolicy::Open,
                },
                scale_update: match t.scale_update {
                    ScaleMove::Auxiliary => ScaleUpdate::Auxiliary,
                    ScaleMove::Sticks => ScaleUpdate::Sticks,
                },
                conditioning: match t.conditioning {
                    AllocationPmf::Marginal => Conditioning::Marginal,
                    AllocationPmf::Latent => Conditioning::Latent,
                },
                init: match t.init {
                    Start::Single => Init::Single,
                    Start::Orthant => Init::Orthant,
                },
                ..Tuning::default()
            },
        }
    }

    /// Number of states kept per chain.
    pub fn retained(&self) -> usize {
        (self.chain.burn_in + 1..=self.chain.iterations).filter(|t| (t - self.chain.burn_in) % self.chain.thin == 0).count()
    }
}

/// Merges a JSON object, or `key=value` lines, into `tree`.
fn merge_text(tree: &mut Value, text: &str) -> Result<(), CliError> {
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config JSON: {e}")))?;
        merge_json(tree, v);
        return Ok(());
    }
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        apply_pair(tree, line).map_err(|e| CliError::Config(format!("config line {}: {e}", no + 1)))?;
    }
    Ok(())
}

fn merge_json(into: &mut Value, from: Value) {
    match (into, from) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                merge_json(a.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.c=value`; the value is read as JSON when it parses, else as a string.
/// Comma-separated values for `io.columns` become a list.
pub fn apply_pair(tree: &mut Value, kv: &str) -> Result<(), CliError> {
    let (key, raw) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, got '{kv}'")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = if key == "io.columns" && !raw.starts_with('[') {
        Value::Array(raw.split(',').filter(|s| !s.is_empty()).map(|s| Value::String(s.trim().into())).collect())
    } else {
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()))
    };
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| CliError::Config(format!("'{key}' is not a config key")))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(CliError::Config(format!("unknown config key '{key}'")));
            }
            obj.insert((*part).into(), value);
            return Ok(());
        }
        node = obj.get_mut(*part).ok_or_else(|| CliError::Config(format!("unknown config key '{key}'")))?;
    }
    Ok(())
}

/// Flattened `key=value` view of a config, for the manifest and `--dump-config`.
pub fn flatten(cfg: &RunConfig) -> Map<String, Value> {
    fn walk(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            _ => {
                out.insert(prefix.into(), v.clone());
            }
        }
    }
    let mut out = Map::new();
    walk("", &serde_json::to_value(cfg).expect("config serializes"), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = RunConfig::preset(Model::UniMarginal, Preset::Long);
        assert_eq!((p.chain.iterations, p.chain.burn_in, p.chain.thin), (300_000, 10_000, 100));
        assert_eq!(p.retained(), 2900);
        let b = RunConfig::preset(Model::Bivariate, Preset::Long);
        assert_eq!(b.retained(), 1400);
    }

    #[test]
    fn overrides_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let kv = dir.path().join("run.cfg");
        std::fs::write(&kv, "# comment\nchain.seed=7\ntuning.edge=open\nio.columns=a,b\n").unwrap();
        let cfg = RunConfig::load(Model::Bivariate, Preset::Desk, Some(&kv), &["chain.seed=9".into()]).unwrap();
        assert_eq!(cfg.chain.seed, 9);
        assert_eq!(cfg.tuning.edge, Edge::Open);
        assert_eq!(cfg.io.columns, vec!["a", "b"]);
        let js = dir.path().join("run.json");
        std::fs::write(&js, r#"{"chain": {"thin": 5}, "prior": {"mu_var": 2.5}}"#).unwrap();
        let cfg = RunConfig::load(Model::UniBridge, Preset::Desk, Some(&js), &[]).unwrap();
        assert_eq!((cfg.chain.thin, cfg.prior.mu_var), (5, 2.5));
    }

    #[test]
    fn config_errors() {
        let bad = |kv: &str| RunConfig::load(Model::UniMarginal, Preset::Desk, None, &[kv.into()]).unwrap_err();
        assert!(matches!(bad("chain.burn_in=40000"), CliError::Config(_)));
        assert!(matches!(bad("chain.thin=0"), CliError::Config(_)));
        assert!(matches!(bad("chain.nope=1"), CliError::Config(_)));
        assert!(matches!(bad("prior.c_rate=-1"), CliError::Config(_)));
        assert!(matches!(bad("tuning.edge=sideways"), CliError::Config(_)));
    }
}
