use qrst_core::config::SolverConfig;
use qrst_core::pqrst::{enumerate_permutations, pqrst, pqrst_with_plan, PermutationPlan, PlanMode};
use qrst_core::random::random_symmetric;
use qrst_core::spectra::residual_bound;
use qrst_core::tensor::{Permutation, SymTensor};

#[test]
fn plans_for_small_and_large_n() {
    let p = enumerate_permutations(1, 1, 0).unwrap();
    assert_eq!(p.perms, vec![Permutation::identity(1)]);
    let p = enumerate_permutations(3, 6, 0).unwrap();
    assert_eq!(p.mode, PlanMode::Exhaustive);
    let shown: Vec<String> = p.perms.iter().map(|q| q.to_string()).collect();
    assert_eq!(
        shown,
        ["1 2 3", "1 3 2", "2 1 3", "2 3 1", "3 1 2", "3 2 1"]
    );
    let a = enumerate_permutations(6, 20, 3).unwrap();
    assert_eq!(a.mode, PlanMode::Sampled);
    assert_eq!(a.perms.len(), 20);
    assert!(a.perms[0].is_identity());
    assert_eq!(a, enumerate_permutations(6, 20, 3).unwrap());
    assert!(enumerate_permutations(3, 0, 0).is_err());
}

#[test]
fn full_plan_finds_a_superset_of_any_prefix() {
    for seed in 0..5 {
        let a = random_symmetric(3, 4, seed).unwrap();
        let cfg = SolverConfig {
            max_iter: 2000,
            ..Default::default()
        };
        let full = enumerate_permutations(4, 24, 0).unwrap();
        let all = pqrst_with_plan(&a, full.clone(), &cfg, true).unwrap();
        for len in [1, 5, 12] {
            let sub = PermutationPlan {
                perms: full.perms[..len].to_vec(),
                mode: full.mode,
            };
            let part = pqrst_with_plan(&a, sub, &cfg, true).unwrap();
            for p in part.set.pairs() {
                assert!(
                    all.set.contains(p.lambda, &p.x),
                    "seed {seed}: pair {} lost in the full plan",
                    p.lambda
                );
            }
        }
    }
}

#[test]
fn permutations_do_not_change_matrix_eigenvalues() {
    for seed in 0..5 {
        let a = random_symmetric(2, 4, seed).unwrap();
        let cfg = SolverConfig {
            max_iter: 5000,
            ..Default::default()
        };
        let lambdas = |perm: Permutation| {
            let plan = PermutationPlan {
                perms: vec![perm],
                mode: PlanMode::Exhaustive,
            };
            let run = pqrst_with_plan(&a, plan, &cfg, true).unwrap();
            assert_eq!(run.converged_runs(), 4);
            let mut l: Vec<f64> = run.set.pairs().map(|p| p.lambda).collect();
            l.sort_by(f64::total_cmp);
            l
        };
        let base = lambdas(Permutation::identity(4));
        for perm in enumerate_permutations(4, 24, 0).unwrap().perms {
            let got = lambdas(perm.clone());
            assert_eq!(got.len(), base.len(), "seed {seed}, permutation {perm}");
            for (x, y) in got.iter().zip(&base) {
                assert!(
                    (x - y).abs() <= 1e-6 * y.abs().max(1.0),
                    "seed {seed}, permutation {perm}: {got:?} vs {base:?}"
                );
            }
        }
    }
}

#[test]
fn mapped_pairs_satisfy_the_bound_on_the_original_tensor() {
    let a = random_symmetric(3, 5, 11).unwrap();
    let cfg = SolverConfig {
        max_iter: 2000,
        perm_cap: 30,
        ..Default::default()
    };
    let run = pqrst(&a, &cfg, true).unwrap();
    assert!(!run.set.is_empty());
    let bound = residual_bound(&a, cfg.tol);
    assert!(run.set.pairs().all(|p| p.residual <= bound));
    assert_eq!(run.plan.perms.len(), 30);
}

#[test]
fn identity_tensor_gives_unit_pairs_for_every_permutation() {
    let e = SymTensor::identity(4, 3).unwrap();
    let run = pqrst(&e, &SolverConfig::default(), true).unwrap();
    assert_eq!(run.converged_runs(), 18);
    assert!(run
        .set
        .pairs()
        .all(|p| (p.lambda - 1.0).abs() < 1e-12 && p.residual <= 1e-10));
}

#[test]
fn labeling_tensor_shifted_and_unshifted() {
    let a = SymTensor::labeling(3, 3).unwrap();
    let cfg = SolverConfig {
        tol: 1e-13,
        max_iter: 5000,
        ..Default::default()
    };
    let shifted = pqrst(&a, &cfg, true).unwrap();
    // canonical form keeps the first component positive, so 0.4961 appears as −0.4961
    let mut l: Vec<f64> = shifted
        .set
        .pairs()
        .map(|p| (p.lambda.abs() * 1e4).round() / 1e4)
        .collect();
    l.sort_by(f64::total_cmp);
    assert_eq!(l, [0.1401, 0.1688, 0.4961, 30.4557]);
    let unshifted = pqrst(&a, &cfg, false).unwrap();
    assert!(unshifted
        .set
        .pairs()
        .any(|p| (p.lambda - 30.4557).abs() < 1e-3));
}
