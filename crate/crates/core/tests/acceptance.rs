//! Exit criteria. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails. Runs as a single test so the timing comparison is
//! not disturbed by other tests in the same binary.

mod common;

use std::fmt::Write as _;

use dpmix_core::linalg::SymMatrix;
use dpmix_core::model::stick_weights;
use dpmix_core::priors::{log_coordinates, log_lik_exact, log_matrix, log_vector, LogExpansion, SparseSpec};
use dpmix_core::random::standard_normal;
use dpmix_core::sampler::run_chain_observed;
use dpmix_core::{
    adjusted_rand, McmcConfig, MixtureState, ModelSpec, NoClock, Observer, Partition, Preset, PriorFamily, PriorSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, title: &str, outcome: &Outcome) {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict} {title}: {}", outcome.detail);
}

// ---------------------------------------------------------------------------
// 1. ARI against brute-force pair counting

fn pair_count_ari(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1,
                (true, false) => only_a += 1,
                (false, true) => only_b += 1,
                (false, false) => neither += 1,
            }
        }
    }
    let num = 2 * (both * neither - only_a * only_b);
    let den = (both + only_a) * (only_a + neither) + (both + only_b) * (only_b + neither);
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn criterion_ari() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=30);
        let ka = rng.random_range(1..=n) as u32;
        let kb = rng.random_range(1..=n) as u32;
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        let got = adjusted_rand(&Partition::from_labels(&a), &Partition::from_labels(&b)).unwrap();
        worst = worst.max((got - pair_count_ari(&a, &b)).abs());
    }
    let hand =
        |a: [u32; 4], b: [u32; 4]| adjusted_rand(&Partition::from_labels(&a), &Partition::from_labels(&b)).unwrap();
    let h1 = hand([1, 1, 2, 2], [1, 2, 2, 2]);
    let h2 = hand([1, 1, 2, 2], [1, 1, 2, 3]);
    Outcome {
        pass: worst <= 1e-12 && h1.abs() <= 1e-12 && (h2 - 4.0 / 7.0).abs() <= 1e-12,
        detail: format!("max |diff| {worst:.1e} over 200 pairs; hand cases {h1:.6}, {h2:.6}"),
    }
}

// ---------------------------------------------------------------------------
// 2. Successive-conditional prior reproduction

fn criterion_geweke() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for family in PriorFamily::ALL {
        let report = common::geweke(family, 20_000, 2024);
        let worst = report.worst();
        let ok = report.passed(3.0);
        pass &= ok;
        let _ = write!(
            detail,
            "{family} {} (worst {} m{} z={:.2}); ",
            if ok { "ok" } else { "FAIL" },
            worst.name,
            worst.moment,
            worst.z
        );
    }
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// 3. Positive definiteness of every covariance

#[derive(Default)]
struct PdCheck {
    checked: usize,
    failures: usize,
}

impl Observer for PdCheck {
    fn after_sweep(&mut self, _sweep: usize, state: &MixtureState) {
        for c in &state.components {
            self.checked += 1;
            if !c.cov.sigma.is_finite() || c.cov.sigma.cholesky().is_err() {
                self.failures += 1;
            }
        }
    }
}

fn criterion_pd() -> Outcome {
    let (data, _) = Preset::DataI.spec(1).generate().unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for family in PriorFamily::ALL {
        let model = ModelSpec::from_data(PriorSpec::defaults(family, &data).unwrap(), &data).unwrap();
        let config = McmcConfig {
            burn_in: 1000,
            main: 1000,
            seed: 3,
            ..McmcConfig::default()
        };
        let mut check = PdCheck::default();
        let run = run_chain_observed(&data, &model, &config, &NoClock, &mut check);
        let ok = run.is_ok() && check.failures == 0;
        pass &= ok;
        let _ = write!(
            detail,
            "{family} {}/{} ok; ",
            check.checked - check.failures,
            check.checked
        );
    }
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// 4. Stick and slice invariants

#[derive(Default)]
struct InvariantCheck {
    sweeps: usize,
    weight_errors: usize,
    sum_errors: usize,
    slice_errors: usize,
    max_sum_error: f64,
}

impl InvariantCheck {
    fn slice(&mut self, state: &MixtureState) {
        if state
            .z
            .iter()
            .zip(&state.u)
            .any(|(&z, &u)| u.partial_cmp(&state.psi[z]) != Some(core::cmp::Ordering::Less))
        {
            self.slice_errors += 1;
        }
    }
}

impl Observer for InvariantCheck {
    fn after_allocation(&mut self, _sweep: usize, state: &MixtureState) {
        self.slice(state);
    }

    fn after_sweep(&mut self, _sweep: usize, state: &MixtureState) {
        self.sweeps += 1;
        let (psi, rest) = stick_weights(&state.v);
        if psi != state.psi {
            self.weight_errors += 1;
        }
        let err = (state.psi.iter().sum::<f64>() + rest - 1.0).abs();
        self.max_sum_error = self.max_sum_error.max(err);
        if err > 1e-12 {
            self.sum_errors += 1;
        }
        self.slice(state);
    }
}

fn criterion_invariants() -> Outcome {
    let (data, _) = Preset::DataI.spec(2).generate().unwrap();
    let model = ModelSpec::from_data(PriorSpec::defaults(PriorFamily::Sparse, &data).unwrap(), &data).unwrap();
    let config = McmcConfig {
        burn_in: 250,
        main: 250,
        seed: 5,
        ..McmcConfig::default()
    };
    let mut check = InvariantCheck::default();
    let ok = run_chain_observed(&data, &model, &config, &NoClock, &mut check).is_ok();
    Outcome {
        pass: ok && check.sweeps == 500 && check.weight_errors == 0 && check.sum_errors == 0 && check.slice_errors == 0,
        detail: format!(
            "{} sweeps; weight mismatches {}, max |Σψ + rest − 1| {:.1e}, slice violations {}",
            check.sweeps, check.weight_errors, check.max_sum_error, check.slice_errors
        ),
    }
}

// ---------------------------------------------------------------------------
// 5. Log-prior expansion gradient

fn criterion_log_gradient() -> Outcome {
    let dim = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a0: Vec<f64> = (0..log_coordinates(dim).len())
            .map(|_| 0.8 * standard_normal(&mut rng))
            .collect();
        let n = rng.random_range(2..=40);
        let mut w = SymMatrix::zeros(dim);
        for _ in 0..n {
            let x: Vec<f64> = (0..dim).map(|_| 2.0 * standard_normal(&mut rng)).collect();
            w.add_outer(&x, 1.0);
        }
        let exp = LogExpansion::at(&log_matrix(&a0, dim), n, &w).unwrap();
        let ll = |a: &[f64]| log_lik_exact(&log_matrix(a, dim), n, &w).unwrap().0;
        for k in 0..a0.len() {
            let (mut up, mut dn) = (a0.clone(), a0.clone());
            up[k] += h;
            dn[k] -= h;
            let fd = (ll(&up) - ll(&dn)) / (2.0 * h);
            worst = worst.max((fd - exp.grad[k]).abs());
        }
        debug_assert_eq!(log_vector(&log_matrix(&a0, dim)), a0);
    }
    Outcome {
        pass: worst <= 1e-4,
        detail: format!("max |grad − FD| {worst:.2e} over 20 points"),
    }
}

// ---------------------------------------------------------------------------
// 6. Sparse prior correlation shrinkage

fn sparse_abs_corr(offdiag: f64, seed: u64) -> Vec<f64> {
    let prior = PriorSpec::Sparse(SparseSpec::uniform(6, 10.0, offdiag).unwrap());
    let shared = prior.initial_shared();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10_000)
        .map(|_| prior.g0_draw(&shared, &mut rng).unwrap().sigma.correlation(1, 0).abs())
        .collect()
}

fn criterion_sparse_shape() -> Outcome {
    let mild = sparse_abs_corr(30.0, 11);
    let strong = sparse_abs_corr(90.0, 12);
    let p = common::mann_whitney_less(&strong, &mild);
    Outcome {
        pass: p < 0.01,
        detail: format!(
            "median |corr| {:.4} at m0,ij=90 vs {:.4} at 30, one-sided p = {p:.2e}",
            median(&strong),
            median(&mild)
        ),
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

// ---------------------------------------------------------------------------
// 7–10. Desk-scale reproductions

fn criterion_data1_sparse() -> Outcome {
    let mut hits = 0;
    let mut detail = String::new();
    for rep in 1..=5 {
        let run = common::run_preset(Preset::DataI, PriorFamily::Sparse, rep, 3000, 2000);
        let big = run.best.n_clusters_above(2);
        if big == 5 && run.ari >= 0.95 {
            hits += 1;
        }
        let _ = write!(detail, "rep {rep}: {big} clusters >2, ARI {:.3}; ", run.ari);
    }
    Outcome {
        pass: hits >= 4,
        detail: format!("{hits}/5 hit; {detail}"),
    }
}

fn criterion_data3_sparse() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for rep in 1..=3 {
        let run = common::run_preset(Preset::DataIII, PriorFamily::Sparse, rep, 3000, 2000);
        pass &= run.ari >= 0.98;
        let _ = write!(detail, "rep {rep}: ARI {:.4}; ", run.ari);
    }
    Outcome { pass, detail }
}

fn criterion_data1_iw() -> Outcome {
    let counts: Vec<f64> = (1..=5)
        .map(|rep| common::run_preset(Preset::DataI, PriorFamily::InverseWishart, rep, 3000, 2000).n_clusters() as f64)
        .collect();
    let med = median(&counts);
    Outcome {
        pass: med < 5.0,
        detail: format!("cluster counts {counts:?}, median {med}"),
    }
}

fn criterion_data4_independent() -> Outcome {
    let counts: Vec<usize> = (1..=3)
        .map(|rep| common::run_preset(Preset::DataIV, PriorFamily::Independent, rep, 3000, 2000).n_clusters())
        .collect();
    let hits = counts.iter().filter(|&&k| k > 5).count();
    Outcome {
        pass: hits >= 2,
        detail: format!("cluster counts {counts:?}, {hits}/3 above 5"),
    }
}

// ---------------------------------------------------------------------------
// 11. Runtime ordering

fn criterion_runtime() -> Outcome {
    let times: Vec<(PriorFamily, f64)> = PriorFamily::ALL
        .iter()
        .map(|&f| (f, common::run_preset(Preset::DataIII, f, 1, 150, 150).seconds))
        .collect();
    let t = |f: PriorFamily| times.iter().find(|(g, _)| *g == f).unwrap().1;
    let mut sorted = times.clone();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let fastest = sorted.last().unwrap().1;
    let ratio = t(PriorFamily::Sparse) / t(PriorFamily::Hiw1);
    let checks = [
        ("log slowest", sorted[0].0 == PriorFamily::Log),
        ("separation second", sorted[1].0 == PriorFamily::Separation),
        ("sparse/hiw1 in [2, 6]", (2.0..=6.0).contains(&ratio)),
        (
            "iw within 10% of fastest",
            t(PriorFamily::InverseWishart) <= 1.1 * fastest,
        ),
    ];
    let mut detail: String = times.iter().map(|(f, s)| format!("{f} {s:.2}s, ")).collect();
    let _ = write!(detail, "sparse/hiw1 {ratio:.2}; ");
    for (name, ok) in checks {
        let _ = write!(detail, "{name} {}; ", if ok { "ok" } else { "FAIL" });
    }
    Outcome {
        pass: checks.iter().all(|c| c.1),
        detail,
    }
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("ARI equals pair-counting oracle", criterion_ari),
        ("successive-conditional prior reproduction", criterion_geweke),
        ("covariances positive definite over 2000 sweeps", criterion_pd),
        ("stick and slice invariants over 500 sweeps", criterion_invariants),
        ("log-prior expansion gradient", criterion_log_gradient),
        ("sparse prior shrinks correlations", criterion_sparse_shape),
        ("Data I sparse recovers five clusters", criterion_data1_sparse),
        ("Data III sparse ARI >= 0.98", criterion_data3_sparse),
        ("Data I inverse Wishart merges clusters", criterion_data1_iw),
        ("Data IV independent over-splits", criterion_data4_independent),
        ("relative runtime ordering on Data III", criterion_runtime),
    ];
    let mut failed = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let outcome = run();
        report(i + 1, title, &outcome);
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
