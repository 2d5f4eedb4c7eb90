//! QRST over a family of permutation-preconditioned copies of the tensor.
//!
//! Each plan entry `P` gives `A_p = A_0 P^d`; a pair `(λ, v)` of `A_p` maps back
//! to `(λ, P v)` on `A_0`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::qrst::{qrst_slice, SliceDiagnostic, SliceOutcome, TraceRow};
use crate::random::rng_for;
use crate::spectra::{residual_bound, EigenSet, Eigenpair, Provenance, SolverId};
use crate::tensor::{Permutation, SymTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// All `n!` permutations, lexicographic.
    Exhaustive,
    /// A seeded sample without replacement; the identity is always first.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationPlan {
    pub perms: Vec<Permutation>,
    pub mode: PlanMode,
}

fn factorial_at_most(n: usize, cap: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k).filter(|&v| v <= cap))
}

fn lexicographic_permutations(n: usize) -> Vec<Permutation> {
    use itertools::Itertools;
    (0..n)
        .permutations(n)
        .map(|p| Permutation::new(p).expect("itertools yields permutations"))
        .collect()
}

/// All permutations of `0..n` when `n! ≤ cap`, otherwise `cap` distinct ones
/// sampled with `seed` (identity included).
pub fn enumerate_permutations(n: usize, cap: usize, seed: u64) -> Result<PermutationPlan> {
    if cap < 1 {
        return Err(Error::InvalidInput(
            "permutation cap must be at least 1".into(),
        ));
    }
    if factorial_at_most(n, cap).is_some() {
        return Ok(PermutationPlan {
            perms: lexicographic_permutations(n),
            mode: PlanMode::Exhaustive,
        });
    }
    let mut rng = rng_for(seed, 0);
    let identity = Permutation::identity(n);
    let mut seen = BTreeSet::from([identity.clone()]);
    let mut perms = vec![identity];
    let mut map: Vec<usize> = (0..n).collect();
    while perms.len() < cap {
        map.shuffle(&mut rng);
        let p = Permutation::new(map.clone())?;
        if seen.insert(p.clone()) {
            perms.push(p);
        }
    }
    Ok(PermutationPlan {
        perms,
        mode: PlanMode::Sampled,
    })
}

#[derive(Debug, Clone)]
pub struct PermutationRun {
    pub index: usize,
    pub permutation: Permutation,
    pub outcomes: Vec<SliceOutcome>,
}

#[derive(Debug, Clone)]
pub struct PqrstRun {
    pub set: EigenSet,
    pub plan: PermutationPlan,
    pub runs: Vec<PermutationRun>,
    pub diagnostics: Vec<SliceDiagnostic>,
}

impl PqrstRun {
    /// `(permutation index, row)` for every recorded step.
    pub fn traces(&self) -> impl Iterator<Item = (usize, &TraceRow)> {
        self.runs.iter().flat_map(|r| {
            r.outcomes
                .iter()
                .flat_map(move |o| o.trace.iter().map(move |t| (r.index, t)))
        })
    }

    /// Number of slice runs that converged to an accepted pair.
    pub fn converged_runs(&self) -> usize {
        self.set.total_occurrences()
    }

    pub fn slice_runs(&self) -> usize {
        self.runs.iter().map(|r| r.outcomes.len()).sum()
    }
}

/// PQRST with the plan from [`enumerate_permutations`]`(n, cfg.perm_cap, cfg.seed)`.
pub fn pqrst(a0: &SymTensor, cfg: &SolverConfig, shifted: bool) -> Result<PqrstRun> {
    let plan = enumerate_permutations(a0.dim(), cfg.perm_cap, cfg.seed)?;
    pqrst_with_plan(a0, plan, cfg, shifted)
}

pub fn pqrst_with_plan(
    a0: &SymTensor,
    plan: PermutationPlan,
    cfg: &SolverConfig,
    shifted: bool,
) -> Result<PqrstRun> {
    cfg.validate()?;
    let runs = plan
        .perms
        .par_iter()
        .enumerate()
        .map(|(index, perm)| {
            let ap = a0.apply_permutation(perm)?;
            let outcomes = (0..a0.dim())
                .map(|i| qrst_slice(&ap, i, cfg, shifted))
                .collect::<Result<Vec<_>>>()?;
            Ok(PermutationRun {
                index,
                permutation: perm.clone(),
                outcomes,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let bound = residual_bound(a0, cfg.tol);
    let mut set = EigenSet::new(a0.order(), cfg.tolerances);
    let mut diagnostics = Vec::new();
    for run in &runs {
        for o in &run.outcomes {
            let mapped = match &o.eigenpair {
                Some(p) => {
                    let x = run.permutation.apply_to_vector(&p.x);
                    let prov = Provenance {
                        solver: SolverId::Pqrst,
                        slice: Some(o.slice),
                        permutation: Some((run.index, run.permutation.clone())),
                        run: None,
                        iterations: o.iterations,
                    };
                    Some(Eigenpair::evaluate(a0, p.lambda, x, prov, &cfg.tolerances)?)
                }
                None => None,
            };
            match mapped {
                Some(p) if p.residual <= bound => {
                    set.insert(p);
                }
                other => diagnostics.push(SliceDiagnostic {
                    slice: o.slice + 1,
                    permutation: Some(run.index),
                    status: o.status,
                    iterations: o.iterations,
                    epsilon: o.epsilon,
                    rejected_residual: other.map(|p| p.residual),
                }),
            }
        }
    }
    Ok(PqrstRun {
        set,
        plan,
        runs,
        diagnostics,
    })
}
