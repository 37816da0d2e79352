mod common;

use std::sync::Arc;

use faultmem::engine::{
    estimate_error, exact_tree_marginal, run_replicate, Automaton, BoundaryPolicy, Configuration, Observed, SimPlan,
};
use faultmem::faults::{FaultModel, FaultRealization, FaultSpec};
use faultmem::lattice::{build_hyperbolic, build_toom, build_tree};
use faultmem::treeify::treeify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{forced_run, greedy_optimal_exhaustive, leq, monotone_coupling_exhaustive};

/// Steps every cell of the automaton with no pruning.
fn full_trajectory(auto: &Automaton, spec: &FaultSpec, policy: BoundaryPolicy, seed: u64, rep: u64, t: u32) -> Vec<Configuration> {
    let r = FaultRealization::new(seed, rep, spec);
    let mut c = Configuration::uniform(auto.cell_count(), spec.remembered(), 0);
    let mut out = vec![c.clone()];
    for _ in 0..t {
        c = auto.step(&c, &r, spec, policy).unwrap();
        out.push(c.clone());
    }
    out
}

#[test]
fn light_cone_pruning_matches_full_update() {
    let tree = build_tree(5, 4).unwrap();
    let hyper = build_hyperbolic(3, 7, 4).unwrap();
    let toom = build_toom(10, 10).unwrap();
    let cases = [
        (Automaton::majority(&tree).unwrap(), FaultSpec::new(0.1, 0.05, FaultModel::Adversarial, false).unwrap(), 3),
        (Automaton::majority(&hyper).unwrap(), FaultSpec::new(0.2, 0.0, FaultModel::PureProbabilistic, true).unwrap(), 4),
        (Automaton::majority(&toom).unwrap(), FaultSpec::new(0.05, 0.05, FaultModel::Adversarial, true).unwrap(), 7),
    ];
    for (auto, spec, horizon) in cases {
        let auto = Arc::new(auto);
        for policy in [BoundaryPolicy::ClampToError, BoundaryPolicy::ClampToA] {
            let plan = SimPlan::new(auto.clone(), spec, horizon, 20, Observed::Root, 9, policy).unwrap();
            for rep in 0..20 {
                let trace = run_replicate(&plan, rep);
                let full = full_trajectory(&auto, &spec, policy, 9, rep, horizon);
                for t in 0..=horizon {
                    let err = full[t as usize].get(auto.root()) != spec.remembered();
                    assert_eq!(trace.error(t, 0), err, "rep {rep} t {t}");
                }
            }
        }
    }
}

#[test]
fn monotone_rules_preserve_order_exhaustively() {
    let auto = Automaton::majority(&build_tree(3, 2).unwrap()).unwrap();
    assert_eq!(auto.cell_count(), 10);
    assert!(monotone_coupling_exhaustive(&auto, 2));
}

#[test]
fn greedy_adversary_dominates_every_strategy_exhaustively() {
    let auto = Automaton::majority(&build_tree(3, 2).unwrap()).unwrap();
    // 4 interior cells over 3 steps: 3^12 fault/strategy pairs per boundary value
    assert!(greedy_optimal_exhaustive(&auto, 3));
}

#[test]
fn greedy_adversary_dominates_sampled_strategies_on_toom() {
    let l = build_toom(5, 5).unwrap();
    let auto = Automaton::majority(&l).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let horizon = 6;
    for _ in 0..2000 {
        let faults: Vec<u64> = (0..horizon).map(|_| rng.gen::<u64>() & rng.gen::<u64>() & ((1 << 25) - 1)).collect();
        let greedy = forced_run(&auto, horizon, &faults, &faults, false);
        let forced: Vec<u64> = (0..horizon).map(|t| faults[t] & rng.gen::<u64>()).collect();
        let run = forced_run(&auto, horizon, &faults, &forced, false);
        for t in 0..horizon {
            assert!(leq(&run[t], &greedy[t]));
        }
    }
}

#[test]
fn majority_errors_are_symmetric_in_the_remembered_bit() {
    let lattices = [build_tree(5, 3).unwrap(), build_toom(8, 8).unwrap(), build_hyperbolic(3, 7, 3).unwrap()];
    for l in &lattices {
        let auto = Arc::new(Automaton::majority(l).unwrap());
        for model in [FaultModel::Adversarial, FaultModel::PureProbabilistic] {
            let plans: Vec<SimPlan> = [false, true]
                .into_iter()
                .map(|a| {
                    let spec = FaultSpec::new(0.15, 0.0, model, a).unwrap();
                    SimPlan::new(auto.clone(), spec, 5, 50, Observed::NonBoundary, 3, BoundaryPolicy::ClampToError).unwrap()
                })
                .collect();
            for rep in 0..50 {
                assert_eq!(run_replicate(&plans[0], rep).errors, run_replicate(&plans[1], rep).errors);
            }
        }
    }
}

#[test]
fn treeified_rules_err_wherever_the_source_does() {
    let lattices = [build_hyperbolic(3, 7, 4).unwrap(), build_hyperbolic(5, 4, 3).unwrap(), build_tree(4, 4).unwrap()];
    for l in &lattices {
        let rules = treeify(l, 0).unwrap();
        let source = Arc::new(Automaton::majority(l).unwrap());
        for a in [false, true] {
            let tree = Arc::new(Automaton::from_tree(&rules, a).unwrap());
            let spec = FaultSpec::new(0.08, 0.04, FaultModel::Adversarial, a).unwrap();
            let plan = |auto: &Arc<Automaton>| {
                SimPlan::new(auto.clone(), spec, 4, 40, Observed::NonBoundary, 11, BoundaryPolicy::ClampToError).unwrap()
            };
            let (ps, pt) = (plan(&source), plan(&tree));
            assert_eq!(ps.observed, pt.observed);
            let mut strict = 0;
            for rep in 0..40 {
                let (es, et) = (run_replicate(&ps, rep).errors, run_replicate(&pt, rep).errors);
                assert!(es.iter().zip(&et).all(|(s, t)| !s || *t));
                strict += es.iter().zip(&et).filter(|(s, t)| !**s && **t).count();
            }
            assert!(strict > 0, "tree rules should be strictly weaker somewhere");
        }
    }
}

#[test]
fn tree_estimates_agree_with_the_exact_recursion_across_seeds() {
    // a shell-1 cell of a treeified 5-regular tree has 4 children and
    // threshold 2 all the way down
    let l = build_tree(5, 5).unwrap();
    let rules = treeify(&l, 0).unwrap();
    assert_eq!((rules.out_degree[1], rules.threshold[1]), (4, 2));
    let horizon = 4;
    let (mut checks, mut misses) = (0u32, 0u32);
    for model in [FaultModel::Adversarial, FaultModel::PureProbabilistic] {
        let spec = FaultSpec::new(0.1, 0.0, model, false).unwrap();
        let exact = exact_tree_marginal(4, 2, &spec, horizon).unwrap();
        let auto = Arc::new(Automaton::from_tree(&rules, false).unwrap());
        for seed in 0..10 {
            let plan = SimPlan::new(auto.clone(), spec, horizon, 2000, Observed::Cells(vec![1]), seed, BoundaryPolicy::ClampToError)
                .unwrap();
            let est = estimate_error(&plan);
            for t in 1..=horizon {
                let (lo, hi) = est.wilson(t, 0);
                checks += 1;
                misses += u32::from(exact[t as usize] < lo || exact[t as usize] > hi);
            }
        }
    }
    let n = f64::from(checks);
    let allowed = 0.05 * n + 3.0 * (n * 0.05 * 0.95).sqrt();
    assert!(f64::from(misses) <= allowed, "{misses} of {checks} intervals missed");
}

#[test]
fn root_errors_at_successive_times_are_independent_on_a_tree() {
    // with children almost never wrong, the root's error at each step is its
    // own fault draw, so errors at t = 2 and t = 3 should be uncorrelated
    let rules = treeify(&build_tree(31, 3).unwrap(), 0).unwrap();
    let auto = Arc::new(Automaton::from_tree(&rules, false).unwrap());
    let spec = FaultSpec::new(0.1, 0.0, FaultModel::Adversarial, false).unwrap();
    let n = 20_000u64;
    let plan = SimPlan::new(auto, spec, 3, n, Observed::Root, 2024, BoundaryPolicy::ClampToError).unwrap();
    let (mut e2, mut e3, mut both) = (0u64, 0u64, 0u64);
    for rep in 0..n {
        let tr = run_replicate(&plan, rep);
        let (a, b) = (tr.error(2, 0), tr.error(3, 0));
        e2 += u64::from(a);
        e3 += u64::from(b);
        both += u64::from(a && b);
    }
    let nf = n as f64;
    let expected = (e2 as f64 / nf) * (e3 as f64 / nf);
    let sd = (expected * (1.0 - expected) / nf).sqrt();
    assert!((both as f64 / nf - expected).abs() < 4.0 * sd, "{both} joint errors, expected {:.1}", expected * nf);
}
