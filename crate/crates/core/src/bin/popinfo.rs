//! Command-line front end for the experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use popinfo::divergence::DivergenceKind;
use popinfo::experiment::{
    preset, preset_names, run_divergence, run_experiment, run_metrics, run_oracle, write_sidecar,
    ExperimentConfig, ResultTable,
};

#[derive(Parser)]
#[command(name = "popinfo", version, about = "Information metrics for Poisson population codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Preset name (fig1..fig6) or path to a JSON config file.
    config: String,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte-Carlo samples per estimate.
    #[arg(long)]
    jmax: Option<usize>,
    /// Override the number of bootstrap replicates.
    #[arg(long)]
    imax: Option<usize>,
    /// Restrict the sweep to these N values (must be in the config sweep).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Output CSV path; a .json sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full run: metrics, Monte-Carlo reference and relative errors per N.
    Run(CommonArgs),
    /// Metrics only, no Monte-Carlo columns.
    Metrics(CommonArgs),
    /// Exact-enumeration reference for tiny instances.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Neglected probability mass allowed per neuron.
        #[arg(long, default_value_t = 1e-12)]
        tail_tol: f64,
    },
    /// Dump a pairwise divergence matrix for a single N.
    Divergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Population size.
        #[arg(long)]
        pop_size: usize,
        /// kl | chernoff | bhattacharyya | chernoff-information
        #[arg(long, default_value = "kl")]
        kind: String,
        /// Exponent parameter for --kind chernoff.
        #[arg(long)]
        beta: Option<f64>,
    },
}

fn load_config(common: &CommonArgs) -> popinfo::Result<ExperimentConfig> {
    let mut cfg = if preset_names().contains(&common.config.as_str()) {
        preset(&common.config)?
    } else {
        let text = std::fs::read_to_string(&common.config).map_err(|e| {
            popinfo::Error::Config(format!("cannot read config '{}': {e}", common.config))
        })?;
        ExperimentConfig::from_json(&text)?
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(jmax) = common.jmax {
        cfg.mc.j_max = jmax;
    }
    if let Some(imax) = common.imax {
        cfg.mc.i_max = imax;
    }
    if let Some(subset) = &common.n {
        for n in subset {
            if !cfg.n_sweep.contains(n) {
                return Err(popinfo::Error::Config(format!(
                    "--n value {n} is not in the config sweep"
                )));
            }
        }
        cfg.n_sweep = subset.clone();
        cfg.n_sweep.sort_unstable();
        cfg.n_sweep.dedup();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_table(table: &ResultTable, cfg: &ExperimentConfig, out: &Option<PathBuf>) -> popinfo::Result<()> {
    match out {
        Some(path) => {
            table.write_csv(path)?;
            write_sidecar(cfg, &path.with_extension("json"))?;
        }
        None => print!("{}", table.to_csv_string()),
    }
    Ok(())
}

fn parse_kind(kind: &str, beta: Option<f64>) -> popinfo::Result<DivergenceKind> {
    match kind {
        "kl" => Ok(DivergenceKind::Kl),
        "chernoff" => {
            let beta = beta.ok_or_else(|| {
                popinfo::Error::Config("--kind chernoff requires --beta".into())
            })?;
            Ok(DivergenceKind::ChernoffCoefficient { beta })
        }
        "bhattacharyya" => Ok(DivergenceKind::Bhattacharyya),
        "chernoff-information" => Ok(DivergenceKind::ChernoffInformation),
        other => Err(popinfo::Error::Config(format!("unknown divergence kind '{other}'"))),
    }
}

fn run(cli: Cli) -> popinfo::Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = load_config(&common)?;
            let table = run_experiment(&cfg)?;
            emit_table(&table, &cfg, &common.out)
        }
        Command::Metrics(common) => {
            let cfg = load_config(&common)?;
            let table = run_metrics(&cfg)?;
            emit_table(&table, &cfg, &common.out)
        }
        Command::Oracle { common, tail_tol } => {
            let cfg = load_config(&common)?;
            let table = run_oracle(&cfg, tail_tol)?;
            emit_table(&table, &cfg, &common.out)
        }
        Command::Divergence { common, pop_size, kind, beta } => {
            let cfg = load_config(&common)?;
            let kind = parse_kind(&kind, beta)?;
            let matrix = run_divergence(&cfg, pop_size, kind)?;
            match &common.out {
                Some(path) => {
                    matrix.write_csv(std::fs::File::create(path)?)?;
                    write_sidecar(&cfg, &path.with_extension("json"))?;
                }
                None => {
                    let mut buf = Vec::new();
                    matrix.write_csv(&mut buf)?;
                    print!("{}", String::from_utf8_lossy(&buf));
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
