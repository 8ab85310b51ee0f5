//! Cross-module invariants: the folded-map identity, exposure bounds,
//! generator statistics, partition quality against brute-force optima,
//! estimator unbiasedness, and bootstrap coverage.

use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use clusterdesign::design::{sample_assignment, DesignSpec};
use clusterdesign::estimate::{dim_estimate, PropensityTable};
use clusterdesign::gen::{generate_sbm, SbmSpec};
use clusterdesign::graph::{
    compute_doses, compute_exposures, exposure_profile, fold_graph, Assignment, BipartiteGraph,
    NormalizationMode,
};
use clusterdesign::harness::{exact_bias_linear, run_experiment, ExperimentConfig, NamedDesign};
use clusterdesign::objective::Clustering;
use clusterdesign::outcome::LinearCoefficients;
use clusterdesign::partition::{balanced_partition, PartitionConfig, SymmetricGraph};
use clusterdesign::rng::stream_rng;

/// Random graph where every experimental unit has at least one edge, so the
/// normalized exposure is everywhere defined.
fn random_connected_graph(seed: u64, n: usize, m: usize) -> BipartiteGraph {
    let mut rng = stream_rng(seed, 0xfeed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        let forced = rng.random_range(0..m);
        for s in 0..m {
            if s == forced || rng.random_bool(0.25) {
                edges.push((i, s, rng.random_range(0.05..3.0)));
            }
        }
    }
    BipartiteGraph::new(n, m, edges).unwrap()
}

fn random_signs(seed: u64, n: usize) -> Assignment {
    let mut rng = stream_rng(seed, 0xface, 0);
    Assignment::from_signs(
        (0..n)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect(),
    )
    .unwrap()
}

#[test]
fn folded_map_equals_two_stage_computation() {
    // e = C z within 1e-12, for 100 random graphs and assignments, under
    // every normalization mode
    for seed in 0..100u64 {
        let g = random_connected_graph(seed, 20, 30);
        let a = random_signs(seed + 1000, 20);
        for mode in NormalizationMode::all() {
            let profile = exposure_profile(&g, &a, mode).unwrap();
            let folded = fold_graph(&g, mode);
            let e = folded.apply(&a.signs());
            for (i, (folded_e, staged_e)) in e.iter().zip(&profile.exposures).enumerate() {
                assert!(
                    (folded_e - staged_e).abs() < 1e-12,
                    "seed {seed} mode {} unit {i}: {folded_e} vs {staged_e}",
                    mode.code(),
                );
            }
        }
    }
}

#[test]
fn zero_cut_clustering_forces_exposure_equal_assignment() {
    // disjoint blocks: every cluster-respecting assignment gives e = z
    // exactly (not just within tolerance)
    let mut edges = Vec::new();
    let mut rng = stream_rng(9, 0xfeed, 1);
    let k = 3usize;
    for block in 0..k {
        for i in 0..4 {
            for s in 0..5 {
                if rng.random_bool(0.7) {
                    edges.push((block * 4 + i, block * 5 + s, rng.random_range(0.1..2.0)));
                }
            }
            // keep the block connected
            edges.push((block * 4 + i, block * 5 + (i % 5), 1.0));
        }
    }
    edges.sort_by_key(|&(i, s, _)| (i, s));
    edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    let g = BipartiteGraph::new(12, 15, edges).unwrap();
    for mask in 0..(1u32 << k) {
        let z: Vec<i8> = (0..12)
            .map(|i| if mask >> (i / 4) & 1 == 1 { 1 } else { -1 })
            .collect();
        let a = Assignment::from_signs(z.clone()).unwrap();
        let profile = exposure_profile(&g, &a, NormalizationMode::FULL).unwrap();
        for (i, (&e_i, &z_i)) in profile.exposures.iter().zip(&z).enumerate() {
            assert_eq!(e_i, f64::from(z_i), "unit {i} mask {mask}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fully_normalized_doses_and_exposures_are_bounded(seed in 0u64..5000) {
        let g = random_connected_graph(seed, 12, 9);
        let a = random_signs(seed.wrapping_add(77), 12);
        let doses = compute_doses(&g, &a, NormalizationMode::FULL).unwrap();
        for d in &doses {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(d));
        }
        let exposures = compute_exposures(&g, &doses, NormalizationMode::FULL).unwrap();
        for (i, e) in exposures.iter().enumerate() {
            let v = e.resolve(a.sign(i));
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn fully_normalized_folded_rows_are_stochastic(seed in 0u64..5000) {
        // rows sum to 1 whenever S_i > 0 and every neighbor has T_s > 0,
        // which positive weights guarantee
        let g = random_connected_graph(seed, 10, 8);
        let folded = fold_graph(&g, NormalizationMode::FULL);
        for i in 0..10 {
            prop_assert!((folded.row_sum(i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn folded_entries_are_nonnegative(seed in 0u64..5000) {
        let g = random_connected_graph(seed, 10, 8);
        for mode in NormalizationMode::all() {
            let folded = fold_graph(&g, mode);
            for (_, _, c) in folded.entries() {
                prop_assert!(c >= 0.0);
            }
        }
    }

    #[test]
    fn objective_h_nonnegative_and_zero_iff_no_cross_mass(seed in 0u64..5000) {
        let g = random_connected_graph(seed, 10, 8);
        let folded = fold_graph(&g, NormalizationMode::FULL);
        let mut rng = stream_rng(seed, 0x0b7ec7, 0);
        let labels: Vec<u32> = (0..10).map(|i| ((i as u64 + rng.random_range(0..2)) % 3) as u32).collect();
        if let Ok(c) = Clustering::new(labels.clone(), 3, f64::INFINITY) {
            let h = clusterdesign::objective::objective_h(&folded, &c).unwrap();
            prop_assert!(h >= 0.0);
            let has_cross = folded
                .entries()
                .any(|(i, j, v)| i != j && labels[i] != labels[j] && v > 0.0);
            prop_assert_eq!(h == 0.0, !has_cross, "h = {}", h);
        }
    }
}

#[test]
fn sbm_block_counts_pass_chi_square() {
    // per-seed goodness-of-fit of per-block edge counts against their
    // binomial expectations, at the 1e-4 level; fixed seeds make this
    // deterministic
    let groups = 4usize;
    let spec_for = |seed| SbmSpec {
        n_experimental: 80,
        n_interference: 80,
        n_groups: groups,
        p_in: 0.3,
        p_out: 0.05,
        seed,
    };
    let df = (groups * groups) as f64;
    let critical = ChiSquared::new(df).unwrap().inverse_cdf(1.0 - 1e-4);
    for seed in 0..20u64 {
        let (g, labels) = generate_sbm(&spec_for(seed)).unwrap();
        let mut counts = vec![vec![0usize; groups]; groups];
        for &(i, s, _) in g.edges() {
            counts[labels.experimental[i] as usize][labels.interference[s] as usize] += 1;
        }
        let pairs = (80 / groups) as f64 * (80 / groups) as f64;
        let mut stat = 0.0;
        for (ge, row) in counts.iter().enumerate() {
            for (gi, &obs) in row.iter().enumerate() {
                let p = if ge == gi { 0.3 } else { 0.05 };
                let mean = pairs * p;
                let var = pairs * p * (1.0 - p);
                stat += (obs as f64 - mean) * (obs as f64 - mean) / var;
            }
        }
        assert!(
            stat < critical,
            "seed {seed}: chi-square statistic {stat} exceeds critical {critical}"
        );
    }
}

#[test]
fn partition_close_to_exhaustive_optimum_on_eight_units() {
    // oracle: enumerate all 35 balanced bipartitions of 8 units
    let mut within = 0usize;
    let total = 100usize;
    for seed in 0..total as u64 {
        let mut rng = stream_rng(seed, 0xbeef, 0);
        let mut edges = Vec::new();
        for u in 0..8usize {
            for v in (u + 1)..8 {
                if rng.random_bool(0.6) {
                    edges.push((u, v, rng.random_range(0.0..1.0)));
                }
            }
        }
        let g = SymmetricGraph::new(8, &edges).unwrap();
        let mut best = f64::INFINITY;
        for mask in 0u32..256 {
            if mask.count_ones() != 4 || mask & 1 != 1 {
                continue; // fix unit 0's side to halve the enumeration
            }
            let labels: Vec<u32> = (0..8).map(|u| u32::from(mask >> u & 1 == 0)).collect();
            best = best.min(g.cut_weight(&labels));
        }
        let solved = balanced_partition(&g, &PartitionConfig::new(2).with_seed(seed)).unwrap();
        let cut = g.cut_weight(solved.labels());
        if cut <= 1.2 * best + 1e-12 {
            within += 1;
        }
    }
    assert!(
        within >= 95,
        "solver within 1.2x of optimum on only {within} of {total}"
    );
}

#[test]
fn dim_is_unbiased_without_interference() {
    // gamma = 0: E[dim] = tau under every design in the module
    let n = 12;
    let coef = LinearCoefficients::new(
        (0..n).map(|i| 0.3 * i as f64).collect(),
        (0..n).map(|i| 1.0 + 0.1 * i as f64).collect(),
        vec![0.0; n],
    )
    .unwrap();
    let tau = clusterdesign::outcome::true_tate(
        &clusterdesign::outcome::OutcomeModel::Linear(coef.clone()),
        n,
    )
    .unwrap();
    let g = random_connected_graph(5, n, 10);
    let labels: Vec<u32> = (0..n).map(|i| (i % 4) as u32).collect();
    let clustering = Clustering::new(labels, 4, 0.0).unwrap();
    let designs = [
        DesignSpec::balanced_cluster(clustering.clone(), 2, 31).unwrap(),
        DesignSpec::unit_bernoulli(n, 0.4, 32).unwrap(),
        DesignSpec::cluster_bernoulli(clustering, 0.5, 33).unwrap(),
    ];
    for spec in designs {
        let draws = 20_000;
        let mut acc = 0.0;
        let mut sq = 0.0;
        let mut used = 0usize;
        for d in 0..draws {
            let a = sample_assignment(&spec, d);
            let profile = exposure_profile(&g, &a, NormalizationMode::FULL).unwrap();
            let y = clusterdesign::outcome::simulate_linear(&coef, &a, &profile.exposures).unwrap();
            // Bernoulli designs can draw an empty arm; those draws are
            // undefined for the estimator and excluded
            if let Ok(est) = dim_estimate(&y, &a) {
                acc += est;
                sq += est * est;
                used += 1;
            }
        }
        let mean = acc / used as f64;
        let var = (sq / used as f64 - mean * mean).max(0.0);
        let se = (var / used as f64).sqrt();
        assert!(
            (mean - tau).abs() < 3.0 * se + 1e-9,
            "{}: mean {mean} vs tau {tau} (se {se})",
            spec.id()
        );
    }
}

#[test]
fn ips_with_exact_propensities_is_unbiased_by_enumeration() {
    // near-perfectly clustered graph with light cross edges; the band
    // model's pure set coincides with the full-exposure rule, so with
    // exact enumerated propensities the IPS expectation telescopes to tau
    let k = 4usize;
    let per = 3usize;
    let n = k * per;
    let mut edges = Vec::new();
    for block in 0..k {
        for i in 0..per {
            edges.push((block * per + i, block, 1.0));
        }
    }
    // light cross edges
    edges.push((0, 1, 0.05));
    edges.push((4, 2, 0.05));
    edges.push((8, 3, 0.05));
    let g = BipartiteGraph::new(n, k, edges).unwrap();
    let labels: Vec<u32> = (0..n).map(|i| (i / per) as u32).collect();
    let k_t = 2usize;
    let delta = 0.5;

    // enumerate all treated subsets once for the exact propensities
    let subsets: Vec<Vec<usize>> = {
        use itertools_free::combinations;
        combinations(k, k_t)
    };
    let mut hits_t = vec![0usize; n];
    let mut hits_c = vec![0usize; n];
    let mut profiles = Vec::new();
    for subset in &subsets {
        let z: Vec<i8> = labels
            .iter()
            .map(|&l| {
                if subset.contains(&(l as usize)) {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let a = Assignment::from_signs(z).unwrap();
        let profile = exposure_profile(&g, &a, NormalizationMode::FULL).unwrap();
        for i in 0..n {
            if (profile.exposures[i] - a.sign(i)).abs() < delta {
                if a.z()[i] == 1 {
                    hits_t[i] += 1;
                } else {
                    hits_c[i] += 1;
                }
            }
        }
        profiles.push((a, profile));
    }
    let m = subsets.len() as f64;
    let table = PropensityTable::new(
        hits_t.iter().map(|&h| h as f64 / m).collect(),
        hits_c.iter().map(|&h| h as f64 / m).collect(),
        subsets.len(),
        delta,
    )
    .unwrap();
    assert!(
        table
            .p_treated
            .iter()
            .chain(&table.p_control)
            .all(|&p| p > 0.0),
        "instance must keep every propensity positive"
    );

    // E[tau_ips] over the enumeration, with E[Y | z] = -z when pure, 0
    // when impure (impure units are never fully exposed here)
    let mut acc = 0.0;
    for (a, profile) in &profiles {
        let y: Vec<f64> = (0..n)
            .map(|i| {
                if (profile.exposures[i] - a.sign(i)).abs() < delta {
                    -a.sign(i)
                } else {
                    0.0
                }
            })
            .collect();
        let est = clusterdesign::estimate::ips_estimate(&y, a, &profile.exposures, &table).unwrap();
        assert_eq!(est.skipped, 0);
        acc += est.value;
    }
    let expectation = acc / m;
    assert!(
        (expectation - (-2.0)).abs() < 1e-10,
        "enumerated IPS expectation {expectation} should equal tau = -2"
    );
}

/// Tiny local helper: k-choose-r index subsets in lexicographic order.
mod itertools_free {
    pub fn combinations(k: usize, r: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..r).collect();
        loop {
            out.push(idx.clone());
            let mut i = r;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + k - r {
                    break;
                }
            }
            idx[i] += 1;
            for j in (i + 1)..r {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}

#[test]
fn bootstrap_intervals_cover_the_exact_bias() {
    // nominal 95% coverage, required at >= 90% over 200 replications
    let n = 16;
    let g = random_connected_graph(123, n, 12);
    let labels: Vec<u32> = (0..n).map(|i| (i % 4) as u32).collect();
    let clustering = Clustering::new(labels, 4, 0.0).unwrap();
    let folded = fold_graph(&g, NormalizationMode::FULL);
    let mut rng = stream_rng(55, 0xc0ffee, 0);
    let gamma: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let exact = exact_bias_linear(&folded, &clustering, &gamma, 4).unwrap();
    let coef = LinearCoefficients::new(vec![0.0; n], vec![1.0; n], gamma).unwrap();
    let model = clusterdesign::outcome::OutcomeModel::Linear(coef);

    let mut covered = 0usize;
    let reps = 200usize;
    for rep in 0..reps {
        let designs = vec![NamedDesign::new(
            "clustered",
            DesignSpec::balanced_cluster(clustering.clone(), 2, 10_000 + rep as u64).unwrap(),
        )];
        let cfg = ExperimentConfig::new(300, rep as u64);
        let report = &run_experiment(&g, &designs, &model, &cfg).unwrap()[0];
        if report.bias.ci_lo <= exact && exact <= report.bias.ci_hi {
            covered += 1;
        }
    }
    assert!(
        covered >= 180,
        "bootstrap CI covered the exact bias in only {covered} of {reps} replications"
    );
}
