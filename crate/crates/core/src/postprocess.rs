//! From stored allocations to partitions and scores.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::priors::PriorFamily;
use crate::sampler::ChainOutput;

/// Cluster labels numbered `1, 2, …` in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<u32>,
    n_clusters: u32,
}

impl Partition {
    /// Relabels any labelling into first-occurrence order.
    pub fn from_labels<T: Ord + Copy>(labels: &[T]) -> Self {
        let mut map = BTreeMap::new();
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len() as u32 + 1;
            out.push(*map.entry(l).or_insert(next));
        }
        Self {
            labels: out,
            n_clusters: map.len() as u32,
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters as usize
    }

    /// Size of cluster `k` is at index `k − 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters()];
        for &l in &self.labels {
            sizes[l as usize - 1] += 1;
        }
        sizes
    }

    /// Clusters with more than `min_size` members.
    pub fn n_clusters_above(&self, min_size: usize) -> usize {
        self.sizes().iter().filter(|&&s| s > min_size).count()
    }
}

/// Posterior co-clustering frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Checks shape, range, symmetry and the unit diagonal.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::InvalidParameter {
                    name: "similarity diagonal",
                    value: values[i * n + i],
                });
            }
            for j in 0..i {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter {
                        name: "similarity",
                        value: v,
                    });
                }
                if v != values[j * n + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major `n × n` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_{i<j} (S_ij − 1{z_i = z_j})²`.
    pub fn ls_criterion(&self, labels: &[u32]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = &self.values[i * self.n..];
            for j in 0..i {
                let same = if labels[i] == labels[j] { 1.0 } else { 0.0 };
                let d = row[j] - same;
                acc += d * d;
            }
        }
        acc
    }
}

/// Fraction of samples in which each pair shares a label.
pub fn similarity<L: AsRef<[u32]>>(samples: &[L]) -> Result<SimilarityMatrix> {
    let first = samples.first().ok_or(Error::EmptyData)?.as_ref();
    let n = first.len();
    let mut counts = vec![0u32; n * (n + 1) / 2];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for sample in samples {
        let z = sample.as_ref();
        if z.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: z.len(),
            });
        }
        for g in groups.iter_mut() {
            g.clear();
        }
        for (i, &c) in z.iter().enumerate() {
            let c = c as usize;
            if c >= groups.len() {
                groups.resize_with(c + 1, Vec::new);
            }
            groups[c].push(i);
        }
        for g in &groups {
            for (a, &i) in g.iter().enumerate() {
                let base = i * (i + 1) / 2;
                for &j in &g[..a] {
                    counts[base + j] += 1;
                }
            }
        }
    }
    let m = samples.len() as f64;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in 0..i {
            let v = counts[i * (i + 1) / 2 + j] as f64 / m;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(SimilarityMatrix { n, values })
}

/// Nearest and second-nearest medoid of every point.
struct Assignment {
    nearest: Vec<usize>,
    d_nearest: Vec<f64>,
    d_second: Vec<f64>,
}

fn assign(dist: impl Fn(usize, usize) -> f64, n: usize, medoids: &[usize]) -> Assignment {
    let mut a = Assignment {
        nearest: vec![0; n],
        d_nearest: vec![f64::INFINITY; n],
        d_second: vec![f64::INFINITY; n],
    };
    for o in 0..n {
        for (slot, &m) in medoids.iter().enumerate() {
            let d = dist(o, m);
            if d < a.d_nearest[o] {
                a.d_second[o] = a.d_nearest[o];
                a.d_nearest[o] = d;
                a.nearest[o] = slot;
            } else if d < a.d_second[o] {
                a.d_second[o] = d;
            }
        }
    }
    a
}

/// Partitioning around medoids with `k` medoids: greedy build then
/// best-improvement swaps, computing all `k` swap gains for a candidate in
/// one pass over the points. Returns the medoid indices.
pub fn pam(dissimilarity: impl Fn(usize, usize) -> f64, n: usize, k: usize) -> Vec<usize> {
    let d = &dissimilarity;
    let k = k.min(n);
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut best_d = vec![f64::INFINITY; n];
    while medoids.len() < k {
        let mut pick = (f64::INFINITY, 0);
        for h in 0..n {
            if medoids.contains(&h) {
                continue;
            }
            let cost: f64 = (0..n).map(|o| best_d[o].min(d(o, h))).sum();
            if cost < pick.0 {
                pick = (cost, h);
            }
        }
        medoids.push(pick.1);
        for (o, bd) in best_d.iter_mut().enumerate() {
            *bd = bd.min(d(o, pick.1));
        }
    }
    if k <= 1 {
        return medoids;
    }

    let mut delta = vec![0.0; k];
    for _ in 0..100 * k {
        let a = assign(d, n, &medoids);
        let mut best = (-1e-12, usize::MAX, usize::MAX);
        for h in 0..n {
            if medoids.contains(&h) {
                continue;
            }
            let mut shared = 0.0;
            delta.iter_mut().for_each(|x| *x = 0.0);
            for o in 0..n {
                let dh = d(o, h);
                let dn = a.d_nearest[o];
                if dh < dn {
                    shared += dh - dn;
                    // removing o's medoid: o goes to h anyway
                } else {
                    delta[a.nearest[o]] += dh.min(a.d_second[o]) - dn;
                }
            }
            for (slot, &dm) in delta.iter().enumerate() {
                let gain = shared + dm;
                if gain < best.0 {
                    best = (gain, slot, h);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        medoids[best.1] = best.2;
    }
    medoids
}

/// Best partition and its least-squares criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct BestPartition {
    pub partition: Partition,
    pub criterion: f64,
    /// Criterion of the PAM candidate for each `k = 1..=k_max`.
    pub candidates: Vec<f64>,
}

/// Runs PAM on `1 − S` for every `k` up to `k_max` and keeps the candidate
/// closest to `S` in least squares (smallest `k` on ties).
pub fn best_partition(s: &SimilarityMatrix, k_max: usize) -> Result<BestPartition> {
    let n = s.n();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if k_max == 0 || k_max > n {
        return Err(Error::InvalidParameter {
            name: "k_max",
            value: k_max as f64,
        });
    }
    let dist = |i: usize, j: usize| 1.0 - s.get(i, j);
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut candidates = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let medoids = pam(dist, n, k);
        let a = assign(dist, n, &medoids);
        let labels: Vec<u32> = a.nearest.iter().map(|&m| m as u32).collect();
        let crit = s.ls_criterion(&labels);
        candidates.push(crit);
        if best.as_ref().is_none_or(|(c, _)| crit < *c) {
            best = Some((crit, labels));
        }
    }
    let (criterion, labels) = best.expect("k_max ≥ 1");
    Ok(BestPartition {
        partition: Partition::from_labels(&labels),
        criterion,
        candidates,
    })
}

fn pairs(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

/// Adjusted Rand index from the contingency table. Two partitions that are
/// both all-singletons or both one cluster score 1.
pub fn adjusted_rand(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (ka, kb) = (a.n_clusters(), b.n_clusters());
    let mut table: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut row = vec![0u64; ka];
    let mut col = vec![0u64; kb];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *table.entry((x, y)).or_insert(0) += 1;
        row[x as usize - 1] += 1;
        col[y as usize - 1] += 1;
    }
    let index: u64 = table.values().map(|&m| pairs(m)).sum();
    let sa: u64 = row.iter().map(|&m| pairs(m)).sum();
    let sb: u64 = col.iter().map(|&m| pairs(m)).sum();
    let total = pairs(a.len() as u64);
    // (index − sa·sb/total) / ((sa+sb)/2 − sa·sb/total), scaled by 2·total
    let (index, sa, sb, total) = (index as i128, sa as i128, sb as i128, total as i128);
    let num = 2 * (index * total - sa * sb);
    let den = (sa + sb) * total - 2 * sa * sb;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Sample principal components.
#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    /// `n × k` scores, row-major.
    pub coords: Vec<f64>,
    pub k: usize,
    /// Share of total variance per retained component.
    pub explained: Vec<f64>,
}

pub fn pca_project(data: &FeatureMatrix, k: usize) -> Result<Pca> {
    let (n, dim) = (data.n_rows(), data.dim());
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
        });
    }
    let means = data.means();
    let mut cov = SymMatrix::zeros(dim);
    let mut centred = vec![0.0; dim];
    for row in data.rows() {
        for (c, (x, m)) in centred.iter_mut().zip(row.iter().zip(means)) {
            *c = x - m;
        }
        cov.add_outer(&centred, 1.0);
    }
    let cov = cov.scaled(1.0 / (n.max(2) - 1) as f64);
    let eig = cov.spectral()?;
    let total: f64 = eig.values.iter().map(|&v| v.max(0.0)).sum();
    let explained = eig.values[..k]
        .iter()
        .map(|&v| if total > 0.0 { v.max(0.0) / total } else { 0.0 })
        .collect();
    let mut coords = Vec::with_capacity(n * k);
    for row in data.rows() {
        for c in 0..k {
            let mut s = 0.0;
            for j in 0..dim {
                s += (row[j] - means[j]) * eig.vector_entry(j, c);
            }
            coords.push(s);
        }
    }
    Ok(Pca { coords, k, explained })
}

/// Gaussian kernel density estimate on an even grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule: `0.9 · min(sd, IQR/1.34) · n^{−1/5}`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 1.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if h > 0.0 {
        h
    } else if mean != 0.0 {
        1e-3 * mean.abs()
    } else {
        1.0
    }
}

/// Density over `[min − 3h, max + 3h]` at `points` grid points.
pub fn kde(values: &[f64], points: usize) -> Result<DensityGrid> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "points",
            value: points as f64,
        });
    }
    let h = silverman_bandwidth(values);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (points - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * core::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..points).map(|i| lo + i as f64 * step).collect();
    let density = x
        .iter()
        .map(|&t| {
            norm * values
                .iter()
                .map(|&v| {
                    let z = (t - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(DensityGrid {
        bandwidth: h,
        x,
        density,
    })
}

/// One summary row per chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSummary {
    pub family: PriorFamily,
    pub best: BestPartition,
    pub ari: Option<f64>,
    pub alpha_density: DensityGrid,
    pub seconds: f64,
}

impl ChainSummary {
    pub fn n_clusters(&self) -> usize {
        self.best.partition.n_clusters()
    }
}

/// Best partition, optional ARI against `reference`, α density and runtime
/// for each chain.
pub fn summarize(
    chains: &[ChainOutput],
    reference: Option<&Partition>,
    k_max: usize,
    density_points: usize,
) -> Result<Vec<ChainSummary>> {
    if chains.is_empty() {
        return Err(Error::EmptyData);
    }
    chains
        .iter()
        .map(|chain| {
            let s = similarity(&chain.allocations)?;
            let best = best_partition(&s, k_max.min(s.n()))?;
            let ari = reference.map(|r| adjusted_rand(&best.partition, r)).transpose()?;
            Ok(ChainSummary {
                family: chain.family,
                best,
                ari,
                alpha_density: kde(&chain.alpha, density_points)?,
                seconds: chain.seconds,
            })
        })
        .collect()
}

/// `counts[k]` is the number of summaries whose best partition has `k`
/// clusters.
pub fn cluster_count_histogram(summaries: &[ChainSummary]) -> Vec<usize> {
    let max = summaries.iter().map(|s| s.n_clusters()).max().unwrap_or(0);
    let mut counts = vec![0; max + 1];
    for s in summaries {
        counts[s.n_clusters()] += 1;
    }
    counts
}
