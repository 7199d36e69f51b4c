use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpmix_cli::config::{self, OUTPUT_ROOT_ENV};
use dpmix_cli::{io, run_experiment, summarize_dir, CliError, Result};
use dpmix_core::{adjusted_rand, Preset};

#[derive(Parser)]
#[command(
    name = "dpmix",
    version,
    about = "Dirichlet process Gaussian mixtures with a choice of covariance priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one of the benchmark designs to CSV.
    Generate {
        /// data1 … data7
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Feature matrix (with an x1…xJ header).
        #[arg(long)]
        out: PathBuf,
        /// True partition as subject,cluster.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Run an experiment from a config file and/or key=value overrides.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// key=value, applied after the config file; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Root for the default output directory.
        #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "runs")]
        output_root: PathBuf,
    },
    /// Rebuild summary.csv and aggregate.csv from the run directories.
    Summarize { dir: PathBuf },
    /// Adjusted Rand index between two subject,cluster files.
    Ari { first: PathBuf, second: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            preset,
            seed,
            out,
            labels,
        } => {
            let p = Preset::parse(&preset).ok_or_else(|| CliError::Config(format!("unknown preset {preset:?}")))?;
            let (data, truth) = p.spec(seed).generate()?;
            io::write_features(&out, &data)?;
            if let Some(l) = labels {
                io::write_partition(&l, &truth)?;
            }
        }
        Command::Run {
            config,
            mut set,
            workers,
            output,
            output_root,
        } => {
            if let Some(w) = workers {
                set.push(format!("run.workers={w}"));
            }
            if let Some(o) = output {
                set.push(format!("output.dir={}", o.display()));
            }
            let cfg = config::load(config.as_deref(), &set, &output_root)?;
            let report = run_experiment(&cfg)?;
            for r in &report.rows {
                let ari = r.ari.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
                println!(
                    "{} {} clusters={} ari={ari} seconds={:.2}",
                    r.chain, r.prior, r.n_clusters, r.seconds
                );
            }
            println!("wrote {}", cfg.output.display());
        }
        Command::Summarize { dir } => {
            for r in summarize_dir(&dir)? {
                let ari = r.ari.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
                println!("{} {} clusters={} ari={ari}", r.chain, r.prior, r.n_clusters);
            }
        }
        Command::Ari { first, second } => {
            let a = io::read_partition(&first)?;
            let b = io::read_partition(&second)?;
            println!("{}", io::fmt_num(adjusted_rand(&a, &b)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dpmix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
