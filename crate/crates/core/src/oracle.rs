//! Brute-force enumeration of real Z-eigenpairs for small tensors: many seeded
//! starts on the sphere, each polished by Riemannian Newton on
//! `F(x) = A x^{d−1} − (A x^d) x`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_complement, symmetric_matrix_eigen};
use crate::random::{start_vector, StartDistribution};
use crate::spectra::{EigenSet, Eigenpair, Provenance, SolverId, SpectraTolerances};
use crate::tensor::SymTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_starts: usize,
    /// Success iff `‖A x^{d−1} − λx‖ ≤ refine_tol · max(1, ‖A‖_F)`.
    pub refine_tol: f64,
    pub max_refine: usize,
    pub seed: u64,
    pub tolerances: SpectraTolerances,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_starts: 5000,
            refine_tol: 1e-12,
            max_refine: 100,
            seed: 0,
            tolerances: SpectraTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    /// The projected Hessian could not be inverted.
    SingularJacobian,
    NotConverged,
    NonFinite,
}

/// Relative size below which a projected-Hessian eigenvalue counts as zero.
const SINGULAR_REL: f64 = 1e-14;

/// Tangent-space Newton from `x0`, renormalizing after every step. Once the
/// residual is within tolerance the iteration keeps polishing until the
/// residual reaches rounding level (or `max_refine`) and returns the best
/// iterate; near degenerate roots Newton is only linear and the first accepted
/// iterate can sit well away from the root.
pub fn newton_refine(
    a: &SymTensor,
    x0: &DVector<f64>,
    cfg: &OracleConfig,
) -> Result<std::result::Result<Eigenpair, NewtonFailure>> {
    if x0.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start of length {} for dimension {}",
            x0.len(),
            a.dim()
        )));
    }
    let n = a.dim();
    let scale = a.frobenius_norm().max(1.0);
    let mut x = x0 / x0.norm();
    let mut best: Option<(DVector<f64>, f64, f64, usize)> = None;

    for step in 0..=cfg.max_refine {
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
        let g = a.contract_vector(x.as_slice())?;
        let lambda = g.dot(&x);
        let r = &g - &x * lambda;
        let rnorm = r.norm();
        let improves = match &best {
            Some((_, _, prev, _)) => rnorm < *prev,
            None => rnorm <= cfg.refine_tol * scale,
        };
        if improves {
            best = Some((x.clone(), lambda, rnorm, step));
        }
        if step == cfg.max_refine || n < 2 || rnorm <= f64::EPSILON * scale {
            break;
        }
        match newton_step(a, &x, lambda, &r, scale)? {
            Ok(next) => x = next,
            Err(f) if best.is_none() => return Ok(Err(f)),
            Err(_) => break,
        }
    }
    Ok(match best {
        Some((x, lambda, _, step)) => {
            let prov = Provenance::new(SolverId::Oracle, step);
            Ok(Eigenpair::evaluate(a, lambda, x, prov, &cfg.tolerances)?)
        }
        None if x.iter().any(|v| !v.is_finite()) => Err(NewtonFailure::NonFinite),
        None => Err(NewtonFailure::NotConverged),
    })
}

fn newton_step(
    a: &SymTensor,
    x: &DVector<f64>,
    lambda: f64,
    r: &DVector<f64>,
    scale: f64,
) -> Result<std::result::Result<DVector<f64>, NewtonFailure>> {
    let n = a.dim();
    let d = a.order() as f64;
    let u = orthonormal_complement(x);
    let mut h: DMatrix<f64> = a.contract_matrix(x.as_slice())? * (d - 1.0);
    for i in 0..n {
        h[(i, i)] -= lambda;
    }
    let ht = u.transpose() * h * &u;
    let ht = (&ht + ht.transpose()) * 0.5;
    let eig = symmetric_matrix_eigen(&ht)?;
    let hnorm = eig
        .values
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(scale);
    if eig.values.iter().any(|v| v.abs() <= SINGULAR_REL * hnorm) {
        return Ok(Err(NewtonFailure::SingularJacobian));
    }
    let rhs = -(u.transpose() * r);
    let coeffs = eig.vectors.transpose() * rhs;
    let scaled = DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().zip(eig.values.iter()).map(|(c, l)| c / l),
    );
    let next = x + &u * (&eig.vectors * scaled);
    let norm = next.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Ok(Err(NewtonFailure::NonFinite));
    }
    Ok(Ok(next / norm))
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub set: EigenSet,
    pub attempts: usize,
    pub failures: usize,
}

/// Refines `cfg.n_starts` seeded starts (uniform on the sphere) and dedups the
/// successes.
pub fn enumerate_eigenpairs(a: &SymTensor, cfg: &OracleConfig) -> Result<OracleRun> {
    if cfg.n_starts < 1 {
        return Err(Error::InvalidInput("n_starts must be at least 1".into()));
    }
    let results = (0..cfg.n_starts)
        .into_par_iter()
        .map(|r| {
            let x0 = start_vector(a.dim(), StartDistribution::Normal, cfg.seed, r);
            newton_refine(a, &x0, cfg).map(|res| {
                res.map(|mut p| {
                    p.provenance.run = Some(r);
                    p
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = EigenSet::new(a.order(), cfg.tolerances);
    let mut failures = 0;
    for res in results {
        match res {
            Ok(p) => {
                set.insert(p);
            }
            Err(_) => failures += 1,
        }
    }
    Ok(OracleRun {
        set,
        attempts: cfg.n_starts,
        failures,
    })
}
