//! CSV readers and writers for the feature matrix and every run artifact.
//! Numbers are written with 17 significant digits so that they read back
//! bit-for-bit.

use std::fs::File;
use std::path::Path;

use dpmix_core::{Error as CoreError, FeatureMatrix, Partition, SimilarityMatrix};

use crate::error::{CliError, Result};

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn reader(path: &Path, has_header: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(CliError::io(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(CliError::io(path))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::data(path, e)
}

fn write_rows<I, R>(path: &Path, header: Option<&[String]>, rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    if let Some(h) = header {
        w.write_record(h).map_err(csv_err(path))?;
    }
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

fn records(path: &Path, has_header: bool) -> Result<Vec<csv::StringRecord>> {
    let mut r = reader(path, has_header)?;
    r.records().collect::<Result<Vec<_>, _>>().map_err(csv_err(path))
}

fn parse_cell<T: std::str::FromStr>(path: &Path, row: usize, col: usize, cell: &str) -> Result<T> {
    cell.parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        row,
        col,
        value: cell.to_string(),
    })
}

/// Reads a rectangular numeric CSV. Row and column numbers in errors are
/// 1-based and count data rows only.
pub fn ingest_csv(path: &Path, has_header: bool) -> Result<FeatureMatrix> {
    let mut r = reader(path, has_header)?;
    let names: Option<Vec<String>> = if has_header {
        Some(r.headers().map_err(csv_err(path))?.iter().map(String::from).collect())
    } else {
        None
    };
    let mut values = Vec::new();
    let mut dim = None;
    let mut n = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let width = *dim.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(CliError::data(
                path,
                format!("row {} has {} fields, expected {width}", i + 1, rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = parse_cell(path, i + 1, j + 1, cell)?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    col: j + 1,
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        n += 1;
    }
    FeatureMatrix::new(n, dim.unwrap_or(0), values).map_err(|e| match e {
        CoreError::ConstantColumn { column } => CliError::ConstantColumn {
            path: path.to_path_buf(),
            column: names
                .as_ref()
                .and_then(|h| h.get(column).cloned())
                .unwrap_or_else(|| (column + 1).to_string()),
        },
        CoreError::EmptyData => CliError::data(path, "no data rows"),
        other => CliError::data(path, other),
    })
}

pub fn write_features(path: &Path, data: &FeatureMatrix) -> Result<()> {
    let header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    write_rows(
        path,
        Some(&header),
        data.rows().map(|r| r.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>()),
    )
}

/// `subject,cluster`, both 1-based.
pub fn write_partition(path: &Path, p: &Partition) -> Result<()> {
    let header = ["subject".to_string(), "cluster".to_string()];
    write_rows(
        path,
        Some(&header),
        p.labels()
            .iter()
            .enumerate()
            .map(|(i, l)| [(i + 1).to_string(), l.to_string()]),
    )
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    let mut labels = Vec::new();
    for (i, rec) in records(path, true)?.iter().enumerate() {
        let cell = rec
            .get(1)
            .ok_or_else(|| CliError::data(path, format!("row {} has no cluster column", i + 1)))?;
        labels.push(parse_cell::<u32>(path, i + 1, 2, cell)?);
    }
    if labels.is_empty() {
        return Err(CliError::data(path, "no data rows"));
    }
    Ok(Partition::from_labels(&labels))
}

/// One row per stored sweep; labels are written 1-based.
pub fn write_allocations(path: &Path, allocations: &[Vec<u32>]) -> Result<()> {
    let n = allocations.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("sample".to_string())
        .chain((1..=n).map(|i| format!("s{i}")))
        .collect();
    write_rows(
        path,
        Some(&header),
        allocations.iter().enumerate().map(|(t, z)| {
            std::iter::once((t + 1).to_string())
                .chain(z.iter().map(|l| (l + 1).to_string()))
                .collect::<Vec<_>>()
        }),
    )
}

/// Inverse of [`write_allocations`]: zero-based labels.
pub fn read_allocations(path: &Path) -> Result<Vec<Vec<u32>>> {
    records(path, true)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            rec.iter()
                .enumerate()
                .skip(1)
                .map(|(j, cell)| {
                    let l: u32 = parse_cell(path, i + 1, j + 1, cell)?;
                    l.checked_sub(1)
                        .ok_or_else(|| CliError::data(path, "labels are 1-based"))
                })
                .collect()
        })
        .collect()
}

pub fn write_alpha_trace(path: &Path, alpha: &[f64]) -> Result<()> {
    let header = ["sample".to_string(), "alpha".to_string()];
    write_rows(
        path,
        Some(&header),
        alpha
            .iter()
            .enumerate()
            .map(|(t, a)| [(t + 1).to_string(), fmt_num(*a)]),
    )
}

pub fn read_alpha_trace(path: &Path) -> Result<Vec<f64>> {
    records(path, true)?
        .iter()
        .enumerate()
        .map(|(i, rec)| parse_cell(path, i + 1, 2, rec.get(1).unwrap_or("")))
        .collect()
}

/// Full `n × n` matrix, no header.
pub fn write_similarity(path: &Path, s: &SimilarityMatrix) -> Result<()> {
    let n = s.n();
    write_rows(
        path,
        None,
        s.values()
            .chunks(n)
            .map(|row| row.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>()),
    )
}

pub fn read_similarity(path: &Path) -> Result<SimilarityMatrix> {
    let rows = records(path, false)?;
    let n = rows.len();
    let mut values = Vec::with_capacity(n * n);
    for (i, rec) in rows.iter().enumerate() {
        if rec.len() != n {
            return Err(CliError::data(
                path,
                format!("row {} has {} fields, expected {n}", i + 1, rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            values.push(parse_cell(path, i + 1, j + 1, cell)?);
        }
    }
    SimilarityMatrix::from_values(n, values).map_err(|e| CliError::data(path, e))
}

/// `subject,pc1,…,pck,cluster`.
pub fn write_pca(path: &Path, coords: &[f64], k: usize, best: &Partition) -> Result<()> {
    let header: Vec<String> = std::iter::once("subject".to_string())
        .chain((1..=k).map(|c| format!("pc{c}")))
        .chain(std::iter::once("cluster".to_string()))
        .collect();
    write_rows(
        path,
        Some(&header),
        coords.chunks(k).zip(best.labels()).enumerate().map(|(i, (row, l))| {
            std::iter::once((i + 1).to_string())
                .chain(row.iter().map(|&v| fmt_num(v)))
                .chain(std::iter::once(l.to_string()))
                .collect::<Vec<_>>()
        }),
    )
}

/// Returns the scores (`n × k`, row-major), `k` and the cluster labels.
pub fn read_pca(path: &Path) -> Result<(Vec<f64>, usize, Partition)> {
    let rows = records(path, true)?;
    let width = rows.first().map_or(0, |r| r.len());
    if width < 3 {
        return Err(CliError::data(path, "expected subject, at least one score and cluster"));
    }
    let k = width - 2;
    let mut coords = Vec::with_capacity(rows.len() * k);
    let mut labels = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        for j in 1..=k {
            coords.push(parse_cell(path, i + 1, j + 1, rec.get(j).unwrap_or(""))?);
        }
        labels.push(parse_cell::<u32>(path, i + 1, k + 2, rec.get(k + 1).unwrap_or(""))?);
    }
    Ok((coords, k, Partition::from_labels(&labels)))
}

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub chain: String,
    pub prior: String,
    pub n_clusters: usize,
    pub ari: Option<f64>,
    pub seconds: f64,
}

pub const SUMMARY_HEADER: [&str; 5] = ["chain", "prior", "n_clusters", "ari", "seconds"];

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let header: Vec<String> = SUMMARY_HEADER.iter().map(|s| s.to_string()).collect();
    write_rows(
        path,
        Some(&header),
        rows.iter().map(|r| {
            [
                r.chain.clone(),
                r.prior.clone(),
                r.n_clusters.to_string(),
                r.ari.map(fmt_num).unwrap_or_default(),
                fmt_num(r.seconds),
            ]
        }),
    )
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    records(path, true)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            if rec.len() != SUMMARY_HEADER.len() {
                return Err(CliError::data(path, format!("row {} has {} fields", i + 1, rec.len())));
            }
            Ok(SummaryRow {
                chain: rec[0].to_string(),
                prior: rec[1].to_string(),
                n_clusters: parse_cell(path, i + 1, 3, &rec[2])?,
                ari: if rec[3].is_empty() {
                    None
                } else {
                    Some(parse_cell(path, i + 1, 4, &rec[3])?)
                },
                seconds: parse_cell(path, i + 1, 5, &rec[4])?,
            })
        })
        .collect()
}

/// Per-prior aggregate over runs: cluster counts, ARI spread and runtime.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub prior: String,
    pub runs: usize,
    pub median_clusters: f64,
    pub min_ari: Option<f64>,
    pub median_ari: Option<f64>,
    pub max_ari: Option<f64>,
    pub mean_seconds: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        0.5 * (xs[m - 1] + xs[m])
    } else {
        xs[m]
    }
}

pub fn aggregate(rows: &[SummaryRow]) -> Vec<AggregateRow> {
    let mut priors: Vec<&str> = rows.iter().map(|r| r.prior.as_str()).collect();
    priors.sort_unstable();
    priors.dedup();
    priors
        .into_iter()
        .map(|prior| {
            let group: Vec<&SummaryRow> = rows.iter().filter(|r| r.prior == prior).collect();
            let aris: Vec<f64> = group.iter().filter_map(|r| r.ari).collect();
            let has_ari = !aris.is_empty();
            AggregateRow {
                prior: prior.to_string(),
                runs: group.len(),
                median_clusters: median(group.iter().map(|r| r.n_clusters as f64).collect()),
                min_ari: has_ari.then(|| aris.iter().copied().fold(f64::INFINITY, f64::min)),
                median_ari: has_ari.then(|| median(aris.clone())),
                max_ari: has_ari.then(|| aris.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                mean_seconds: group.iter().map(|r| r.seconds).sum::<f64>() / group.len() as f64,
            }
        })
        .collect()
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let header: Vec<String> = [
        "prior",
        "runs",
        "median_clusters",
        "min_ari",
        "median_ari",
        "max_ari",
        "mean_seconds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    write_rows(
        path,
        Some(&header),
        rows.iter().map(|r| {
            [
                r.prior.clone(),
                r.runs.to_string(),
                fmt_num(r.median_clusters),
                opt(r.min_ari),
                opt(r.median_ari),
                opt(r.max_ari),
                fmt_num(r.mean_seconds),
            ]
        }),
    )
}
