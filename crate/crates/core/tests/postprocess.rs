use dpmix_core::postprocess::{cluster_count_histogram, pca_project};
use dpmix_core::random::standard_normal;
use dpmix_core::{
    adjusted_rand, best_partition, similarity, summarize, ChainOutput, FeatureMatrix, Partition, PriorFamily,
    SimilarityMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(labels: &[u32]) -> Partition {
    Partition::from_labels(labels)
}

/// Fraction of samples placing `i` and `j` together, by direct counting.
fn brute_similarity(samples: &[Vec<u32>], i: usize, j: usize) -> f64 {
    samples.iter().filter(|z| z[i] == z[j]).count() as f64 / samples.len() as f64
}

fn brute_criterion(s: &SimilarityMatrix, labels: &[u32]) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let same = if labels[i] == labels[j] { 1.0 } else { 0.0 };
            total += (s.get(i, j) - same).powi(2);
        }
    }
    total
}

/// All set partitions of `n` points as restricted growth strings.
fn all_partitions(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur[i] = l;
            rec(i + 1, max.max(l), cur, out);
        }
    }
    cur[0] = 0;
    if n > 0 {
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

/// Samples scattered around `truth`: each label is replaced by a uniform
/// draw from `0..spread` with probability `noise`.
fn noisy_samples(truth: &[u32], count: usize, noise: f64, spread: u32, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    (0..count)
        .map(|_| {
            truth
                .iter()
                .map(|&t| {
                    if rng.random::<f64>() < noise {
                        rng.random_range(0..spread)
                    } else {
                        t
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn similarity_matches_pair_counting() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<Vec<u32>> = (0..50)
        .map(|_| (0..12).map(|_| r.random_range(0..4)).collect())
        .collect();
    let s = similarity(&samples).unwrap();
    for i in 0..12 {
        assert_eq!(s.get(i, i), 1.0);
        for j in 0..12 {
            assert_eq!(s.get(i, j), s.get(j, i));
            assert!((s.get(i, j) - brute_similarity(&samples, i, j)).abs() < 1e-15);
        }
    }
    let same = vec![vec![0, 0, 1, 2, 2]; 4];
    let s = similarity(&same).unwrap();
    assert!(s.values().iter().all(|&v| v == 0.0 || v == 1.0));
}

#[test]
fn best_partition_examples() {
    let ones = SimilarityMatrix::from_values(4, vec![1.0; 16]).unwrap();
    assert_eq!(best_partition(&ones, 4).unwrap().partition.n_clusters(), 1);

    let s = similarity(&[vec![0, 0, 1, 1, 1, 2]]).unwrap();
    let best = best_partition(&s, 6).unwrap();
    assert_eq!(best.criterion, 0.0);
    assert_eq!(best.partition, p(&[0, 0, 1, 1, 1, 2]));
}

#[test]
fn best_partition_is_the_exhaustive_optimum_on_eight_points() {
    let candidates = all_partitions(8);
    assert_eq!(candidates.len(), 4140);
    for seed in 0..10 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<u32> = (0..8).map(|_| r.random_range(0..3)).collect();
        let s = similarity(&noisy_samples(&truth, 100, 0.2, 4, &mut r)).unwrap();
        let best = best_partition(&s, 8).unwrap();
        let optimum = candidates
            .iter()
            .map(|c| brute_criterion(&s, c))
            .fold(f64::INFINITY, f64::min);
        let labels = best.partition.labels();
        assert!((brute_criterion(&s, labels) - best.criterion).abs() < 1e-12);
        assert!((s.ls_criterion(labels) - best.criterion).abs() < 1e-12);
        assert!(
            best.criterion <= optimum + 1e-12,
            "seed {seed}: {} vs {optimum}",
            best.criterion
        );
    }
}

#[test]
fn best_partition_minimises_over_candidates() {
    for seed in 0..20 {
        let mut r = ChaCha8Rng::seed_from_u64(100 + seed);
        let samples: Vec<Vec<u32>> = (0..30)
            .map(|_| (0..10).map(|_| r.random_range(0..3)).collect())
            .collect();
        let s = similarity(&samples).unwrap();
        let best = best_partition(&s, 10).unwrap();
        assert_eq!(best.candidates.len(), 10);
        let min = best.candidates.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(best.criterion, min);
    }
}

#[test]
fn ari_examples() {
    assert_eq!(adjusted_rand(&p(&[1, 1, 2, 2]), &p(&[1, 2, 2, 2])).unwrap(), 0.0);
    assert!((adjusted_rand(&p(&[1, 1, 2, 2]), &p(&[1, 1, 2, 3])).unwrap() - 4.0 / 7.0).abs() < 1e-15);
    assert_eq!(adjusted_rand(&p(&[5, 5, 5]), &p(&[1, 1, 1])).unwrap(), 1.0);
    assert!(adjusted_rand(&p(&[1, 2]), &p(&[1, 2, 3])).is_err());
}

fn chain(allocations: Vec<Vec<u32>>, seconds: f64) -> ChainOutput {
    let stored = allocations.len();
    ChainOutput {
        family: PriorFamily::Sparse,
        allocations,
        alpha: (0..stored).map(|k| 0.5 + 0.01 * k as f64).collect(),
        instantiated: vec![3; stored],
        nonempty: vec![2; stored],
        seconds,
    }
}

#[test]
fn summarize_examples() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let truth = [0, 0, 0, 1, 1, 1, 2, 2];
    let a = chain(noisy_samples(&truth, 40, 0.1, 3, &mut r), 1.5);
    let rows = summarize(std::slice::from_ref(&a), None, 8, 64).unwrap();
    let own = rows[0].best.partition.clone();
    let rows = summarize(std::slice::from_ref(&a), Some(&own), 8, 64).unwrap();
    assert_eq!(rows[0].ari, Some(1.0));
    assert_eq!(rows[0].seconds, 1.5);

    let twice = summarize(&[a.clone(), a.clone()], Some(&own), 8, 64).unwrap();
    assert_eq!(twice[0], twice[1]);

    let chains: Vec<ChainOutput> = (0..7)
        .map(|k| {
            let t: Vec<u32> = (0..8).map(|i| (i % (k % 4 + 1)) as u32).collect();
            chain(vec![t; 5], 0.0)
        })
        .collect();
    let summaries = summarize(&chains, None, 8, 32).unwrap();
    let hist = cluster_count_histogram(&summaries);
    let mut manual = vec![0; 5];
    for c in &chains {
        manual[p(&c.allocations[0]).n_clusters()] += 1;
    }
    assert_eq!(hist, manual);
}

#[test]
fn pca_examples() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<[f64; 4]> = (0..20_000)
        .map(|_| {
            [
                standard_normal(&mut r),
                standard_normal(&mut r),
                standard_normal(&mut r),
                standard_normal(&mut r),
            ]
        })
        .collect();
    let data = FeatureMatrix::from_rows(&rows).unwrap();
    let pca = pca_project(&data, 4).unwrap();
    assert!((pca.explained.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    for f in &pca.explained {
        assert!((f / 0.25 - 1.0).abs() < 0.1, "{:?}", pca.explained);
    }
    assert_eq!(pca.coords.len(), 20_000 * 4);
    let two = pca_project(&data, 2).unwrap();
    assert!(two.explained.iter().sum::<f64>() <= 1.0);
    assert!(pca_project(&data, 5).is_err());
}

fn labels(n: usize, k: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..k, n)
}

fn pair() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (2usize..40).prop_flat_map(|n| (labels(n, 6), labels(n, 6)))
}

/// Applies a label bijection given as a permutation of `0..6`.
fn relabel(z: &[u32], perm: &[u32]) -> Vec<u32> {
    z.iter().map(|&l| perm[l as usize]).collect()
}

fn permutation() -> impl Strategy<Value = Vec<u32>> {
    Just((0..6).collect::<Vec<u32>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn ari_is_symmetric_and_bounded((a, b) in pair()) {
        let x = adjusted_rand(&p(&a), &p(&b)).unwrap();
        let y = adjusted_rand(&p(&b), &p(&a)).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!((-1.0..=1.0).contains(&x));
    }

    #[test]
    fn ari_ignores_label_names((a, b) in pair(), pa in permutation(), pb in permutation()) {
        let x = adjusted_rand(&p(&a), &p(&b)).unwrap();
        let y = adjusted_rand(&p(&relabel(&a, &pa)), &p(&relabel(&b, &pb))).unwrap();
        prop_assert!((x - y).abs() < 1e-15);
        prop_assert_eq!(adjusted_rand(&p(&a), &p(&relabel(&a, &pa))).unwrap(), 1.0);
    }

    #[test]
    fn ari_one_only_for_equal_partitions((a, b) in pair()) {
        let x = adjusted_rand(&p(&a), &p(&b)).unwrap();
        prop_assert_eq!(x == 1.0, p(&a) == p(&b), "ari {}", x);
    }

    #[test]
    fn similarity_ignores_relabeling(
        samples in (3usize..15).prop_flat_map(|n| prop::collection::vec(labels(n, 6), 1..10)),
        perms in prop::collection::vec(permutation(), 10),
    ) {
        let relabeled: Vec<Vec<u32>> = samples.iter().zip(&perms).map(|(z, q)| relabel(z, q)).collect();
        prop_assert_eq!(similarity(&samples).unwrap(), similarity(&relabeled).unwrap());
    }
}
