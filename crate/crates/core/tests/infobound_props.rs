mod common;

use faultmem::infobound::{
    chain_mi, channel_counts, count_paths, es_bound, exact_mi, tolerance_feasible, Feasibility, Gate, GateFn,
    InfoBoundReport, LayeredCircuit, Wire,
};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force_mi, path_lengths, random_circuit};

#[test]
fn exact_mi_matches_pattern_by_pattern_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..60 {
        let c = random_circuit(&mut rng, 12);
        for eps in [0.0, 0.05, 0.2, 0.45] {
            let fast = exact_mi(&c, eps).unwrap();
            let slow = brute_force_mi(&c, eps);
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow} at {eps}");
        }
    }
}

#[test]
fn channel_counts_cover_every_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let c = random_circuit(&mut rng, 16);
        let counts = channel_counts(&c).unwrap();
        let g = c.gate_count();
        for x in 0..2 {
            for k in 0..=g {
                let total = counts.counts[x][0][k] + counts.counts[x][1][k];
                let binom = (0..k).fold(1u64, |acc, i| acc * (g - i) as u64 / (i + 1) as u64);
                assert_eq!(total, binom);
            }
        }
    }
}

#[test]
fn es_bound_equals_a_sum_over_enumerated_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let c = random_circuit(&mut rng, 20);
        let lengths = path_lengths(&c);
        assert_eq!(count_paths(&c), BigUint::from(lengths.len()));
        for eps in [0.0f64, 0.1, 0.3, 0.45, 0.5] {
            let direct: f64 = lengths.iter().map(|&l| (1.0 - 2.0 * eps).powi(2 * l as i32)).sum();
            let bound = es_bound(&c, eps).unwrap();
            assert!((bound - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }
}

#[test]
fn mutual_information_never_exceeds_the_path_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..80 {
        let c = random_circuit(&mut rng, 14);
        for eps in [0.1, 0.3, 0.45] {
            assert!(exact_mi(&c, eps).unwrap() <= es_bound(&c, eps).unwrap() + 1e-12);
        }
    }
}

#[test]
fn appending_a_noisy_gate_loses_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let c = random_circuit(&mut rng, 12);
        let mut layers = c.layers().to_vec();
        let last = layers.len() as u32 - 1;
        layers.push(vec![Gate { cell: None, func: GateFn::Threshold(1), wires: vec![Wire::Gate { layer: last, index: 0 }] }]);
        let longer = LayeredCircuit::new(layers).unwrap();
        for eps in [0.05, 0.25] {
            assert!(exact_mi(&longer, eps).unwrap() <= exact_mi(&c, eps).unwrap() + 1e-12);
        }
    }
}

#[test]
fn chains_match_their_closed_form_and_decay() {
    for eps in [0.01, 0.1, 0.3] {
        let mut prev = 1.0;
        for t in 1..=12 {
            let closed = chain_mi(t, eps).unwrap();
            assert!((exact_mi(&LayeredCircuit::chain(t).unwrap(), eps).unwrap() - closed).abs() < 1e-12);
            assert!(closed <= prev);
            prev = closed;
        }
    }
}

#[test]
fn feasibility_horizon_is_the_first_excluded_depth() {
    for (d, xi) in [(1, 0.3), (2, 0.2), (3, 0.1), (10, 0.05), (30, 0.09)] {
        for delta in [0.0, 0.1, 0.25, 0.4] {
            let Feasibility::ExcludedAt(t) = tolerance_feasible(d, xi, delta).unwrap() else {
                panic!("d = {d}, xi = {xi} should be excluded");
            };
            assert!(!InfoBoundReport::uniform(d, xi, delta, t).unwrap().feasible);
            if t > 1 {
                assert!(InfoBoundReport::uniform(d, xi, delta, t - 1).unwrap().feasible);
            }
        }
    }
    assert_eq!(tolerance_feasible(7, 0.2, 0.1).unwrap(), Feasibility::NotExcluded);
}
