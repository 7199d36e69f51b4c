//! Shared helpers: summary statistics, rank and chi-square tests, the
//! successive-conditional (Geweke) simulator and preset chain runs.

#![allow(dead_code)]

use dpmix_core::linalg::SymMatrix;
use dpmix_core::model::{scatter, update_mean, update_mu0, MeanPrior, RowStats};
use dpmix_core::priors::{Hiw1Spec, Hiw2Spec, IndependentSpec, IwSpec, LogSpec, SeparationSpec, SparseSpec};
use dpmix_core::random::{gamma, open01, sample_mvn};
use dpmix_core::tuning::Tuning;
use dpmix_core::{
    adjusted_rand, best_partition, run_chain, similarity, CovBlock, Latent, McmcConfig, ModelSpec, NoClock, Partition,
    Preset, PriorFamily, PriorSpec, SharedHyper,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Integrated autocorrelation time by Geyer's initial monotone sequence:
/// sums of adjacent autocorrelation pairs are kept while positive and
/// forced non-increasing.
pub fn geyer_iat(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = mean(xs);
    let centred: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let acov = |lag: usize| -> f64 {
        centred[..n - lag]
            .iter()
            .zip(&centred[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = acov(0);
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (acov(2 * k) + acov(2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        k += 1;
    }
    tau.max(1.0)
}

/// One-sided Mann–Whitney test of `H₁: x` stochastically smaller than `y`,
/// normal approximation with tie correction. Returns the p-value.
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut rank_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for item in &all[i..=j] {
            if item.1 {
                rank_x += avg;
            }
        }
        i = j + 1;
    }
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let u = rank_x - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nt = n1 + n2;
    let sigma = (n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)))).sqrt();
    Normal::standard().cdf((u - mu + 0.5) / sigma)
}

/// Pearson chi-square test of homogeneity for a table of counts (rows are
/// samples). Empty columns are dropped. Returns the p-value.
pub fn chi_square_homogeneity(table: &[Vec<f64>]) -> f64 {
    let cols = table[0].len();
    let col_sums: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let keep: Vec<usize> = (0..cols).filter(|&c| col_sums[c] > 0.0).collect();
    let total: f64 = col_sums.iter().sum();
    let mut stat = 0.0;
    for row in table {
        let rs: f64 = row.iter().sum();
        for &c in &keep {
            let e = rs * col_sums[c] / total;
            stat += (row[c] - e) * (row[c] - e) / e;
        }
    }
    let df = ((table.len() - 1) * (keep.len().max(1) - 1)) as f64;
    if df == 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).unwrap().sf(stat)
}

// ---------------------------------------------------------------------------
// Successive-conditional simulator

pub const GEWEKE_DIM: usize = 3;
pub const GEWEKE_ROWS: usize = 60;
const GEWEKE_COMPONENTS: usize = 2;

/// Prior with moderate hyperparameters for the simulator: proper,
/// light-tailed enough that all tested moments exist.
pub fn geweke_prior(family: PriorFamily) -> PriorSpec {
    let j = GEWEKE_DIM;
    let id = SymMatrix::identity(j);
    match family {
        PriorFamily::InverseWishart => PriorSpec::InverseWishart(IwSpec::new(id.scaled(3.0), j as f64 + 4.0).unwrap()),
        PriorFamily::Hiw1 => PriorSpec::Hiw1(Hiw1Spec::new(id, j as f64 + 2.0, 4.0, 6.0).unwrap()),
        PriorFamily::Hiw2 => PriorSpec::Hiw2(Hiw2Spec::new(vec![2.0; j], 3.0, 4.0, 6.0).unwrap()),
        PriorFamily::Separation => {
            PriorSpec::Separation(SeparationSpec::new(id, 4.0, 6.0, 3.0, 3.0, vec![3.0; j]).unwrap())
        }
        PriorFamily::Log => PriorSpec::Log(LogSpec::defaults(j).unwrap()),
        PriorFamily::Sparse => PriorSpec::Sparse(SparseSpec::defaults(j).unwrap()),
        PriorFamily::Independent => PriorSpec::Independent(IndependentSpec::new(vec![3.0; j], vec![2.0; j]).unwrap()),
    }
}

/// `Σ₀ = Σ₀₀ = 0.1 I`. With 30 rows per component a much wider `Σ₀` makes
/// the component means crawl through their prior in the chain, leaving too
/// few effective draws in 2×10⁴ cycles.
pub fn geweke_mean_prior() -> MeanPrior {
    let j = GEWEKE_DIM;
    let s = SymMatrix::scaled_identity(j, 0.1);
    MeanPrior::new(s.clone(), vec![0.0; j], s).unwrap()
}

struct GewekeState {
    mu0: Vec<f64>,
    shared: SharedHyper,
    means: Vec<Vec<f64>>,
    covs: Vec<CovBlock>,
}

/// Exact draw from the graphical-lasso prior by rejection: independent
/// exponential diagonal and Laplace off-diagonal entries, kept when
/// positive definite.
fn sparse_prior_exact(m0: &SymMatrix, rng: &mut ChaCha8Rng) -> CovBlock {
    let j = m0.dim();
    loop {
        let mut t = SymMatrix::zeros(j);
        for a in 0..j {
            t.set(a, a, -open01(rng).ln() / (0.5 * m0.get(a, a)));
            for b in 0..a {
                let mag = -open01(rng).ln() / m0.get(a, b);
                let sign = if open01(rng) < 0.5 { -1.0 } else { 1.0 };
                t.set(a, b, sign * mag);
            }
        }
        if let Ok(chol) = t.cholesky() {
            let m1 = SymMatrix::from_lower_fn(j, |a, b| if a == b { 0.0 } else { 1.0 / m0.get(a, b) });
            return CovBlock::new(chol.inverse(), Latent::Sparse { precision: t, m1 }).unwrap();
        }
    }
}

fn forward_draw(prior: &PriorSpec, mp: &MeanPrior, rng: &mut ChaCha8Rng) -> GewekeState {
    let shared = prior.draw_shared(rng).unwrap();
    let mu0 = sample_mvn(&mp.mu00, &mp.sigma00.cholesky().unwrap(), rng);
    let covs = (0..GEWEKE_COMPONENTS)
        .map(|_| match prior {
            PriorSpec::Sparse(s) => sparse_prior_exact(&s.m0, rng),
            _ => prior.g0_draw(&shared, rng).unwrap(),
        })
        .collect();
    let means = (0..GEWEKE_COMPONENTS)
        .map(|_| sample_mvn(&mu0, &mp.sigma0_chol, rng))
        .collect();
    GewekeState {
        mu0,
        shared,
        means,
        covs,
    }
}

fn functional_names(family: PriorFamily) -> Vec<String> {
    let mut names = vec!["mu0[0]".to_string(), "mu_1[0]".to_string()];
    for j in 0..GEWEKE_DIM {
        names.push(format!("log var_1[{j}]"));
    }
    if family != PriorFamily::Independent {
        for a in 0..GEWEKE_DIM {
            for b in 0..a {
                names.push(format!("corr_1[{a},{b}]"));
            }
        }
    }
    match family {
        PriorFamily::Hiw1 => names.extend(["log(kappa0-J)", "log R0[0,0]", "corr R0[1,0]"].map(String::from)),
        PriorFamily::Hiw2 => names.extend(["log delta[0]", "log(eps0-1)"].map(String::from)),
        PriorFamily::Separation => names.extend(["log(kappaR-J)", "log beta_s[0]", "log s_1[0]"].map(String::from)),
        _ => {}
    }
    names
}

/// Correlations are left out for the independent prior, where they are
/// identically zero.
fn functionals(state: &GewekeState, family: PriorFamily) -> Vec<f64> {
    let sigma = &state.covs[0].sigma;
    let mut f = vec![state.mu0[0], state.means[0][0]];
    for j in 0..GEWEKE_DIM {
        f.push(sigma.get(j, j).ln());
    }
    if family != PriorFamily::Independent {
        for a in 0..GEWEKE_DIM {
            for b in 0..a {
                f.push(sigma.correlation(a, b));
            }
        }
    }
    let j = GEWEKE_DIM as f64;
    match &state.shared {
        SharedHyper::Hiw1 { r0, kappa0 } => {
            f.extend([(kappa0 - j).ln(), r0.get(0, 0).ln(), r0.correlation(1, 0)]);
        }
        SharedHyper::Hiw2 { delta, eps0 } => f.extend([delta[0].ln(), (eps0 - 1.0).ln()]),
        SharedHyper::Separation { kappa_r, beta_s } => {
            let Latent::Separation { s, .. } = &state.covs[0].latent else {
                unreachable!()
            };
            f.extend([(kappa_r - j).ln(), beta_s[0].ln(), s[0].ln()]);
        }
        SharedHyper::None => {}
    }
    f
}

fn conditional_cycle(
    state: &mut GewekeState,
    prior: &PriorSpec,
    mp: &MeanPrior,
    tuning: &mut Tuning,
    rng: &mut ChaCha8Rng,
) {
    let per = GEWEKE_ROWS / GEWEKE_COMPONENTS;
    for c in 0..GEWEKE_COMPONENTS {
        let rows: Vec<Vec<f64>> = (0..per)
            .map(|_| sample_mvn(&state.means[c], &state.covs[c].chol, rng))
            .collect();
        let stats = RowStats::from_rows(GEWEKE_DIM, rows.iter().map(|r| r.as_slice()));
        state.means[c] = update_mean(&stats, &state.covs[c].chol, &state.mu0, &mp.sigma0_inv, rng).unwrap();
        let w = scatter(GEWEKE_DIM, rows.iter().map(|r| r.as_slice()), &state.means[c]);
        state.covs[c] = prior
            .update_cov(&state.covs[c], per, &w, &state.shared, tuning, rng)
            .unwrap();
    }
    let blocks: Vec<&CovBlock> = state.covs.iter().collect();
    prior.update_shared(&mut state.shared, &blocks, tuning, rng).unwrap();
    state.mu0 = update_mu0(state.means.iter().map(|m| m.as_slice()), mp, rng).unwrap();
}

#[derive(Clone, Debug)]
pub struct GewekeRow {
    pub name: String,
    /// 1 for the mean, 2 for the second moment.
    pub moment: u8,
    pub forward: f64,
    pub chain: f64,
    pub z: f64,
    /// Integrated autocorrelation time of the chain.
    pub tau: f64,
    /// Means are reported but not part of the pass/fail decision.
    pub gated: bool,
}

#[derive(Clone, Debug)]
pub struct GewekeReport {
    pub family: PriorFamily,
    pub rows: Vec<GewekeRow>,
}

impl GewekeReport {
    pub fn worst(&self) -> &GewekeRow {
        self.rows
            .iter()
            .filter(|r| r.gated)
            .max_by(|a, b| a.z.abs().total_cmp(&b.z.abs()))
            .expect("at least one functional")
    }

    pub fn passed(&self, z_max: f64) -> bool {
        self.rows.iter().filter(|r| r.gated).all(|r| r.z.abs() <= z_max)
    }
}

/// Compares `cycles` independent prior draws with `cycles` recorded cycles
/// of the data-given-parameters / parameters-given-data chain (after
/// `cycles / 10` adaptive warm-up cycles). Each functional's mean and second
/// moment is compared by a z-score using the iid standard error for the
/// forward sample and batch means for the chain.
pub fn geweke(family: PriorFamily, cycles: usize, seed: u64) -> GewekeReport {
    let prior = geweke_prior(family);
    let mp = geweke_mean_prior();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = functional_names(family);
    let k = names.len();

    let mut fwd: Vec<Vec<f64>> = vec![Vec::with_capacity(cycles); k];
    for _ in 0..cycles {
        let s = forward_draw(&prior, &mp, &mut rng);
        for (col, v) in fwd.iter_mut().zip(functionals(&s, family)) {
            col.push(v);
        }
    }

    let mut state = forward_draw(&prior, &mp, &mut rng);
    let mut tuning = Tuning::new(GEWEKE_DIM);
    for _ in 0..cycles / 10 {
        conditional_cycle(&mut state, &prior, &mp, &mut tuning, &mut rng);
    }
    tuning.freeze();
    let mut chain: Vec<Vec<f64>> = vec![Vec::with_capacity(cycles); k];
    for _ in 0..cycles {
        conditional_cycle(&mut state, &prior, &mp, &mut tuning, &mut rng);
        for (col, v) in chain.iter_mut().zip(functionals(&state, family)) {
            col.push(v);
        }
    }

    let mut rows = Vec::with_capacity(2 * k);
    for (i, name) in names.into_iter().enumerate() {
        for moment in [1u8, 2] {
            let pow = |xs: &[f64]| -> Vec<f64> { xs.iter().map(|x| x.powi(moment as i32)).collect() };
            let (f, c) = (pow(&fwd[i]), pow(&chain[i]));
            let se_f = (variance(&f) / f.len() as f64).sqrt();
            let tau = geyer_iat(&c);
            let se_c = (variance(&c) * tau / c.len() as f64).sqrt();
            let (mf, mc) = (mean(&f), mean(&c));
            rows.push(GewekeRow {
                gated: !name.starts_with("mu"),
                name: name.clone(),
                moment,
                forward: mf,
                chain: mc,
                z: (mf - mc) / (se_f * se_f + se_c * se_c).sqrt(),
                tau,
            });
        }
    }
    GewekeReport { family, rows }
}

// ---------------------------------------------------------------------------
// Preset runs

#[derive(Clone, Debug)]
pub struct PresetRun {
    pub best: Partition,
    pub ari: f64,
    pub seconds: f64,
}

impl PresetRun {
    pub fn n_clusters(&self) -> usize {
        self.best.n_clusters()
    }
}

/// Generates `preset` with `data_seed`, runs one chain with default
/// hyperparameters and returns the best partition scored against the truth.
pub fn run_preset(preset: Preset, family: PriorFamily, data_seed: u64, burn_in: usize, main: usize) -> PresetRun {
    let (data, truth) = preset.spec(data_seed).generate().unwrap();
    let model = ModelSpec::from_data(PriorSpec::defaults(family, &data).unwrap(), &data).unwrap();
    let config = McmcConfig {
        burn_in,
        main,
        seed: data_seed.wrapping_mul(7919).wrapping_add(17),
        ..McmcConfig::default()
    };
    let start = std::time::Instant::now();
    let out = run_chain(&data, &model, &config, &NoClock).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let s = similarity(&out.allocations).unwrap();
    let best = best_partition(&s, 15).unwrap().partition;
    let ari = adjusted_rand(&best, &truth).unwrap();
    PresetRun { best, ari, seconds }
}

/// Draws `n` values from `Gamma(shape, rate)` with a seeded generator.
pub fn gamma_draws(shape: f64, rate: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| gamma(shape, rate, &mut rng)).collect()
}
