//! Replicate × seed runs on a worker pool, per-run artifacts and the
//! aggregate tables.
//!
//! Layout under the output directory:
//!
//! ```text
//! r{replicate}_s{seed}/  data.csv truth.csv allocations.csv alpha_trace.csv
//!                        similarity.csv best_partition.csv pca_coords.csv
//!                        summary.csv (this run only)
//! summary.csv            one row per successful run
//! aggregate.csv          per-prior cluster counts, ARI spread, runtimes
//! failures.csv           only when some run failed
//! ```

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use dpmix_core::postprocess::pca_project;
use dpmix_core::{adjusted_rand, best_partition, run_chain, similarity, Clock, FeatureMatrix, McmcConfig, Partition};

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::io::{self, SummaryRow};

/// Wall-clock time since construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Job {
    pub replicate: usize,
    pub seed: u64,
}

impl Job {
    pub fn name(&self) -> String {
        format!("r{}_s{}", self.replicate, self.seed)
    }
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub chain: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<Failure>,
}

struct Dataset {
    data: FeatureMatrix,
    truth: Option<Partition>,
}

fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset>> {
    match &cfg.source {
        DataSource::Preset(p) => (1..=cfg.replicates)
            .map(|r| {
                let (data, truth) = p.spec(r as u64).generate()?;
                Ok(Dataset {
                    data,
                    truth: Some(truth),
                })
            })
            .collect(),
        DataSource::Csv { path, header, labels } => {
            let data = io::ingest_csv(path, *header)?;
            let truth = match labels {
                Some(l) => {
                    let t = io::read_partition(l)?;
                    if t.len() != data.n_rows() {
                        return Err(CliError::data(
                            l,
                            format!("{} labels for {} rows", t.len(), data.n_rows()),
                        ));
                    }
                    Some(t)
                }
                None => None,
            };
            Ok(vec![Dataset { data, truth }])
        }
    }
}

/// Runs one chain and writes its artifacts into `dir`.
fn run_job(cfg: &ExperimentConfig, job: &Job, set: &Dataset, dir: &Path) -> Result<SummaryRow> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let model = cfg.model_spec(&set.data)?;
    let mcmc = McmcConfig {
        seed: job.seed,
        ..cfg.mcmc.clone()
    };
    let out = run_chain(&set.data, &model, &mcmc, &WallClock::start())?;
    let s = similarity(&out.allocations)?;
    let best = best_partition(&s, cfg.k_max.min(set.data.n_rows()))?.partition;
    let ari = set.truth.as_ref().map(|t| adjusted_rand(&best, t)).transpose()?;
    let pca = pca_project(&set.data, set.data.dim().min(2))?;

    io::write_features(&dir.join("data.csv"), &set.data)?;
    if let Some(t) = &set.truth {
        io::write_partition(&dir.join("truth.csv"), t)?;
    }
    io::write_allocations(&dir.join("allocations.csv"), &out.allocations)?;
    io::write_alpha_trace(&dir.join("alpha_trace.csv"), &out.alpha)?;
    io::write_similarity(&dir.join("similarity.csv"), &s)?;
    io::write_partition(&dir.join("best_partition.csv"), &best)?;
    io::write_pca(&dir.join("pca_coords.csv"), &pca.coords, pca.k, &best)?;
    let row = SummaryRow {
        chain: job.name(),
        prior: cfg.family.to_string(),
        n_clusters: best.n_clusters(),
        ari,
        seconds: out.seconds,
    };
    io::write_summary(&dir.join("summary.csv"), std::slice::from_ref(&row))?;
    Ok(row)
}

/// Runs every replicate × seed job. Finished runs keep their artifacts
/// even when others fail; the tables list successful runs only and
/// `failures.csv` names the rest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output).map_err(CliError::io(&cfg.output))?;
    let sets = load_datasets(cfg)?;
    let jobs: Vec<Job> = (1..=sets.len())
        .flat_map(|replicate| cfg.seeds.iter().map(move |&seed| Job { replicate, seed }))
        .collect();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SummaryRow>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = cfg.workers.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = run_job(cfg, job, &sets[job.replicate - 1], &cfg.output.join(job.name()));
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut worst: Option<CliError> = None;
    for (job, r) in jobs.iter().zip(results.into_inner().expect("worker panicked")) {
        match r.expect("every job ran") {
            Ok(row) => rows.push(row),
            Err(e) => {
                failures.push(Failure {
                    chain: job.name(),
                    message: e.to_string(),
                });
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    write_tables(&cfg.output, &rows)?;
    if !failures.is_empty() {
        write_failures(&cfg.output.join("failures.csv"), &failures)?;
    }
    match worst {
        Some(e) if failures.len() == jobs.len() && jobs.len() == 1 => Err(e),
        Some(_) => Err(CliError::RunsFailed {
            failed: failures.len(),
            total: jobs.len(),
        }),
        None => Ok(ExperimentReport { rows, failures }),
    }
}

fn write_tables(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    io::write_summary(&dir.join("summary.csv"), rows)?;
    io::write_aggregate(&dir.join("aggregate.csv"), &io::aggregate(rows))
}

fn write_failures(path: &Path, failures: &[Failure]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::data(path, e))?;
    w.write_record(["chain", "error"])
        .map_err(|e| CliError::data(path, e))?;
    for f in failures {
        w.write_record([&f.chain, &f.message])
            .map_err(|e| CliError::data(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Run directories under `dir`, in name order.
pub fn run_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(CliError::io(dir))? {
        let path = entry.map_err(CliError::io(dir))?.path();
        if path.join("best_partition.csv").is_file() && path.join("summary.csv").is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Rebuilds the aggregate tables from the per-run files. Cluster counts
/// and ARI are recomputed from `best_partition.csv` and `truth.csv`; the
/// chain name, prior and runtime come from the run's own summary.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for run in run_dirs(dir)? {
        let meta = io::read_summary(&run.join("summary.csv"))?;
        let meta = meta
            .into_iter()
            .next()
            .ok_or_else(|| CliError::data(run.join("summary.csv"), "no rows"))?;
        let best = io::read_partition(&run.join("best_partition.csv"))?;
        let truth_path = run.join("truth.csv");
        let ari = if truth_path.is_file() {
            Some(adjusted_rand(&best, &io::read_partition(&truth_path)?)?)
        } else {
            None
        };
        rows.push(SummaryRow {
            n_clusters: best.n_clusters(),
            ari,
            ..meta
        });
    }
    if rows.is_empty() {
        return Err(CliError::data(dir, "no run directories found"));
    }
    write_tables(dir, &rows)?;
    Ok(rows)
}
