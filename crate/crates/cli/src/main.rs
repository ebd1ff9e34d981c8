use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use owm_core::harness::{
    self, compare_report, sample_size_sweep, ExperimentConfig, RunSummary, SampleSize,
};

#[derive(Parser)]
#[command(
    name = "owm",
    version,
    about = "Sequential training with orthogonal weights modification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; metrics lines go to stdout, the summary table to stderr.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plain SGD: no gradient projection.
        #[arg(long)]
        no_owm: bool,
        /// Suppress metrics lines on stdout.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Run the experiment once per training samples per class.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated sizes, e.g. `1,5,10,50,full`.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate summary files.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Also write the CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load_config(
    path: &PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    let mut cfg =
        ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if out.is_some() {
        cfg.output = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            no_owm,
            quiet,
        } => {
            let mut cfg = load_config(&config, seed, out)?;
            if no_owm {
                cfg.owm_enabled = false;
            }
            let stdout = io::stdout();
            let summary = harness::run_experiment_with(&cfg, &mut |rec| {
                if !quiet {
                    let mut lock = stdout.lock();
                    let _ = writeln!(lock, "{}", rec.to_line());
                }
                Ok(())
            })?;
            eprint!("{}", compare_report(&[summary])?.table);
        }
        Command::Sweep {
            config,
            sizes,
            seed,
            out,
        } => {
            let cfg = load_config(&config, seed, out)?;
            let sizes = sizes
                .iter()
                .map(|s| SampleSize::parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let report = sample_size_sweep(&cfg, &sizes)?;
            for p in &report.points {
                println!(
                    "{}",
                    serde_json::json!({
                        "size": p.size.to_string(),
                        "seed": p.seed,
                        "mean_accuracy": p.mean_accuracy,
                        "overall_accuracy": p.overall_accuracy,
                        "config_hash": p.summary.config_hash,
                    })
                );
            }
            for s in &report.non_monotone {
                eprintln!("warning: accuracy fell at size {s}");
            }
        }
        Command::Report { summaries, csv } => {
            let loaded = summaries
                .iter()
                .map(RunSummary::load)
                .collect::<Result<Vec<_>, _>>()?;
            let report = compare_report(&loaded)?;
            print!("{}", report.table);
            if let Some(path) = csv {
                std::fs::write(&path, report.csv)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (category, code) = match err.downcast_ref::<owm_core::Error>() {
                Some(e) => (e.category(), e.exit_code()),
                None => ("io", 3),
            };
            eprintln!("error [{category}]: {err:#}");
            ExitCode::from(code as u8)
        }
    }
}
