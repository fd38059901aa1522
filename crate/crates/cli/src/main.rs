use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use unimodal::simulate::{generate, GammaParam, Side, SimSpec};
use unimodal_cli::config::{Model, Preset, RunConfig};
use unimodal_cli::fit::{chain_rng, fit};
use unimodal_cli::ingest::write_dataset;
use unimodal_cli::summarize::{render, summarize};
use unimodal_cli::{predict, study, CliError};

#[derive(Parser)]
#[command(name = "unimodal", version, about = "Unimodal Dirichlet-process mixtures: simulate, fit, predict, summarize")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ModelA,
    ModelB,
    BivNormal,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaArg {
    Rate,
    Scale,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    UniMarginal,
    UniBridge,
    Bivariate,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Long,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    X,
    Z,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset as CSV.
    Simulate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Reading of the second gamma parameter (model-b).
        #[arg(long, value_enum, default_value = "rate")]
        gamma: GammaArg,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the sampler on a CSV file and write draws, predictive draws, diagnostics and a manifest.
    Fit {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "desk")]
        preset: PresetArg,
        /// key=value or JSON config file, applied over the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Comma-separated column names.
        #[arg(long)]
        columns: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        /// Random subset of this many rows.
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        row_seed: Option<u64>,
        /// Any config key, e.g. `--set tuning.h_mu=0.5`; applied last.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Print the resolved config and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Quantiles of the second column given values of the first, from a bivariate run.
    Predict {
        #[arg(long)]
        run: PathBuf,
        /// Comma-separated values of the first column.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        given: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        draws: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Posterior summaries, ESS and histogram data of a run.
    Summarize {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Quantile bands of corr(Y1, Y2) under coupling of the uniforms or the normals.
    StudyDependence {
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
        /// Mean pair `mu1,mu2`; repeat for several.
        #[arg(long, value_parser = parse_pair, default_value = "10,10")]
        mu: Vec<[f64; 2]>,
        /// `(mu / sd)^2` of the normals; large values make Z nearly constant.
        #[arg(long, default_value_t = 100.0)]
        c: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,-0.9,-0.8,-0.7,-0.6,-0.5,-0.4,-0.3,-0.2,-0.1,0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|_| format!("expected two comma-separated numbers, got '{s}'"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { kind, n, seed, gamma, output } => {
            let spec = match kind {
                Kind::ModelA => SimSpec::model_a(n),
                Kind::ModelB => SimSpec::ModelB {
                    n,
                    param: match gamma {
                        GammaArg::Rate => GammaParam::Rate,
                        GammaArg::Scale => GammaParam::Scale,
                    },
                },
                Kind::BivNormal => SimSpec::biv_normal(n),
            };
            let data = generate(&spec, &mut chain_rng(seed, 0)).map_err(|e| CliError::Config(e.to_string()))?;
            let names: Vec<String> = if data.dim() == 1 { vec!["y".into()] } else { vec!["y1".into(), "y2".into()] };
            write_dataset(&output, &names, &data)
        }
        Command::Fit {
            model,
            preset,
            config,
            input,
            columns,
            output,
            seed,
            iterations,
            burn_in,
            thin,
            chains,
            rows,
            row_seed,
            set,
            dump_config,
        } => {
            let model = match model {
                ModelArg::UniMarginal => Model::UniMarginal,
                ModelArg::UniBridge => Model::UniBridge,
                ModelArg::Bivariate => Model::Bivariate,
            };
            let preset = match preset {
                PresetArg::Desk => Preset::Desk,
                PresetArg::Long => Preset::Long,
            };
            let mut overrides = Vec::new();
            let mut flag = |key: &str, v: Option<String>| {
                if let Some(v) = v {
                    overrides.push(format!("{key}={v}"));
                }
            };
            flag("io.input", input.map(|p| serde_json::to_string(&p).expect("path serializes")));
            flag("io.columns", columns);
            flag("io.output", output.map(|p| serde_json::to_string(&p).expect("path serializes")));
            flag("chain.seed", seed.map(|v| v.to_string()));
            flag("chain.iterations", iterations.map(|v| v.to_string()));
            flag("chain.burn_in", burn_in.map(|v| v.to_string()));
            flag("chain.thin", thin.map(|v| v.to_string()));
            flag("chain.n_chains", chains.map(|v| v.to_string()));
            flag("io.rows", rows.map(|v| v.to_string()));
            flag("io.row_seed", row_seed.map(|v| v.to_string()));
            overrides.extend(set);
            let cfg = RunConfig::load(model, preset, config.as_deref(), &overrides)?;
            if dump_config {
                println!("{}", serde_json::to_string_pretty(&cfg)?);
                return Ok(());
            }
            let r = fit(&cfg)?;
            let kept: usize = r.chains.iter().map(|c| c.states.len()).sum();
            eprintln!("{kept} states from {} chain(s) in {:.1} s -> {}", r.chains.len(), r.wall_seconds, cfg.io.output.display());
            Ok(())
        }
        Command::Predict { run, given, draws, seed, output } => {
            let rows = predict::predict(&run, &given, draws, seed, &output)?;
            for r in rows {
                println!("{:>12.5} {:>12.5} {:>12.5} {:>12.5}", r.given, r.q025, r.median, r.q975);
            }
            Ok(())
        }
        Command::Summarize { run, bins, json } => {
            let report = summarize(&run, bins)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", render(&report));
            }
            Ok(())
        }
        Command::StudyDependence { side, mu, c, grid, reps, n, seed, output } => {
            let sides: &[Side] = match side {
                SideArg::X => &[Side::X],
                SideArg::Z => &[Side::Z],
                SideArg::Both => &[Side::X, Side::Z],
            };
            let rows = study::study(sides, &mu, c, &grid, reps, n, seed)?;
            study::write_rows(&output, &rows)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
