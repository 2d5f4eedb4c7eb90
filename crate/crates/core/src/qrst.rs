//! Shifted QR iteration for symmetric tensors, one square slice at a time.
//!
//! For slice `i` each step factors `A_{k-1}(:,:,i,…,i) + s_{k-1} I = Q_k R_k`,
//! then sets `A_k = A_{k-1} Q_k^d` and accumulates `Q̄_k = Q̄_{k-1} Q_k`. The
//! iteration stops once the column `A_k e_i^{d-1}` is a multiple of `e_i`, at
//! which point `(A_k(i,…,i), Q̄_k e_i)` is an eigenpair of `A_0`.
//!
//! The shift is never removed again: `A_k` is produced by the similarity
//! transform alone.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{lambda_min, qr, symmetric_spectral_norm};
use crate::spectra::{residual_bound, EigenSet, Eigenpair, Provenance, SolverId};
use crate::tensor::SymTensor;

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// 1-based slice index.
    pub slice: usize,
    pub k: usize,
    /// Shift added to the slice factored at step `k` (0 for the initial row).
    pub shift: f64,
    /// Epsilon after step `k`.
    pub epsilon: f64,
    /// `λ_min` of the slice factored at step `k` (of `A_0`'s slice for `k = 0`).
    pub slice_lambda_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceStatus {
    Converged,
    MaxIterations,
    /// Non-finite values appeared.
    Diverged,
}

/// Factors of the last accepted step.
#[derive(Debug, Clone)]
pub struct LastStep {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub shift: f64,
    /// `Q̄_{k-1}`.
    pub qbar_prev: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SliceOutcome {
    /// 0-based.
    pub slice: usize,
    pub status: SliceStatus,
    /// Present iff `status == Converged`; residual is measured on `A_0`.
    pub eigenpair: Option<Eigenpair>,
    pub iterations: usize,
    pub epsilon: f64,
    pub qbar: DMatrix<f64>,
    /// Final `A_k`.
    pub tensor: SymTensor,
    pub last_step: Option<LastStep>,
    pub trace: Vec<TraceRow>,
}

impl SliceOutcome {
    pub fn converged(&self) -> bool {
        self.status == SliceStatus::Converged
    }
}

/// Everything one step produces, handed to observers.
pub struct IterationView<'a> {
    pub k: usize,
    /// 0-based slice index.
    pub slice_index: usize,
    /// `A_{k-1}(:,:,i,…,i)` before shifting.
    pub slice: &'a DMatrix<f64>,
    pub shift: f64,
    pub q: &'a DMatrix<f64>,
    pub r: &'a DMatrix<f64>,
    pub qbar_prev: &'a DMatrix<f64>,
    pub qbar: &'a DMatrix<f64>,
    pub previous: &'a SymTensor,
    pub current: &'a SymTensor,
    /// Largest entrywise asymmetry of the raw transform before re-symmetrization.
    pub asymmetry: f64,
    pub epsilon: f64,
}

/// `s = −λ_min(slice) + δ`, which makes `slice + s I` positive definite with
/// smallest eigenvalue `δ`.
pub fn heuristic_shift(slice: &DMatrix<f64>, delta: f64) -> Result<f64> {
    Ok(-lambda_min(slice)? + delta)
}

/// Off-`e_i` part of `A e_i^{d-1}` relative to the spectral norm of the slice
/// `A e_i^{d-2}`.
pub fn convergence_epsilon(a: &SymTensor, i: usize) -> Result<f64> {
    check_slice_index(a, i)?;
    let mut v = a.column(i);
    v[i] = 0.0;
    let denom = symmetric_spectral_norm(&a.slice(i))?.max(f64::EPSILON);
    Ok(v.norm() / denom)
}

fn check_slice_index(a: &SymTensor, i: usize) -> Result<()> {
    if i >= a.dim() {
        return Err(Error::OutOfRange(format!(
            "slice {} of a dimension-{} tensor",
            i + 1,
            a.dim()
        )));
    }
    if a.order() < 2 {
        return Err(Error::Unsupported("QRST needs order >= 2".into()));
    }
    Ok(())
}

/// Runs QRST on slice `i` (0-based).
pub fn qrst_slice(
    a0: &SymTensor,
    i: usize,
    cfg: &SolverConfig,
    shifted: bool,
) -> Result<SliceOutcome> {
    qrst_slice_observed(a0, i, cfg, shifted, |_| {})
}

/// [`qrst_slice`] with a callback invoked after every step.
pub fn qrst_slice_observed(
    a0: &SymTensor,
    i: usize,
    cfg: &SolverConfig,
    shifted: bool,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<SliceOutcome> {
    check_slice_index(a0, i)?;
    cfg.validate()?;
    let n = a0.dim();
    let mut a = a0.clone();
    let mut qbar = DMatrix::<f64>::identity(n, n);
    let mut eps = convergence_epsilon(&a, i)?;
    let mut trace = vec![TraceRow {
        slice: i + 1,
        k: 0,
        shift: 0.0,
        epsilon: eps,
        slice_lambda_min: lambda_min(&a.slice(i))?,
    }];
    let mut last_step = None;
    let mut k = 0;
    let mut status = SliceStatus::MaxIterations;

    loop {
        if !eps.is_finite() {
            status = SliceStatus::Diverged;
            break;
        }
        if eps <= cfg.tol {
            status = SliceStatus::Converged;
            break;
        }
        if k >= cfg.max_iter {
            break;
        }
        k += 1;

        let slice = a.slice(i);
        if slice.iter().any(|v| !v.is_finite()) {
            status = SliceStatus::Diverged;
            break;
        }
        let lmin = lambda_min(&slice)?;
        let shift = if shifted { -lmin + cfg.delta } else { 0.0 };
        let mut shifted_slice = slice.clone();
        for j in 0..n {
            shifted_slice[(j, j)] += shift;
        }
        let (q, r) = qr(&shifted_slice, cfg.qr_sign);
        let (next, asymmetry) = a.similarity_transform_reporting(&q)?;
        let qbar_next = &qbar * &q;
        eps = convergence_epsilon(&next, i).unwrap_or(f64::NAN);

        observer(&IterationView {
            k,
            slice_index: i,
            slice: &slice,
            shift,
            q: &q,
            r: &r,
            qbar_prev: &qbar,
            qbar: &qbar_next,
            previous: &a,
            current: &next,
            asymmetry,
            epsilon: eps,
        });
        trace.push(TraceRow {
            slice: i + 1,
            k,
            shift,
            epsilon: eps,
            slice_lambda_min: lmin,
        });

        last_step = Some(LastStep {
            q,
            r,
            shift,
            qbar_prev: std::mem::replace(&mut qbar, qbar_next),
        });
        a = next;
    }

    let eigenpair = if status == SliceStatus::Converged {
        let lambda = a.diagonal_entry(i);
        let x: DVector<f64> = qbar.column(i).into_owned();
        let mut prov = Provenance::new(SolverId::Qrst, k);
        prov.slice = Some(i);
        Some(Eigenpair::evaluate(a0, lambda, x, prov, &cfg.tolerances)?)
    } else {
        None
    };

    Ok(SliceOutcome {
        slice: i,
        status,
        eigenpair,
        iterations: k,
        epsilon: eps,
        qbar,
        tensor: a,
        last_step,
        trace,
    })
}

/// Why a slice run contributed no eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceDiagnostic {
    /// 1-based.
    pub slice: usize,
    /// Index into the permutation plan, for PQRST runs.
    pub permutation: Option<usize>,
    pub status: SliceStatus,
    pub iterations: usize,
    pub epsilon: f64,
    /// Set when the slice converged but the pair failed the residual bound on `A_0`.
    pub rejected_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct QrstRun {
    pub set: EigenSet,
    pub outcomes: Vec<SliceOutcome>,
    pub diagnostics: Vec<SliceDiagnostic>,
}

impl QrstRun {
    pub fn traces(&self) -> impl Iterator<Item = &TraceRow> {
        self.outcomes.iter().flat_map(|o| o.trace.iter())
    }
}

/// Runs every slice `i = 1..n` and merges the converged pairs.
pub fn qrst_all(a0: &SymTensor, cfg: &SolverConfig, shifted: bool) -> Result<QrstRun> {
    cfg.validate()?;
    let outcomes = (0..a0.dim())
        .into_par_iter()
        .map(|i| qrst_slice(a0, i, cfg, shifted))
        .collect::<Result<Vec<_>>>()?;

    let bound = residual_bound(a0, cfg.tol);
    let mut set = EigenSet::new(a0.order(), cfg.tolerances);
    let mut diagnostics = Vec::new();
    for o in &outcomes {
        match &o.eigenpair {
            Some(p) if p.residual <= bound => {
                set.insert(p.clone());
            }
            other => diagnostics.push(SliceDiagnostic {
                slice: o.slice + 1,
                permutation: None,
                status: o.status,
                iterations: o.iterations,
                epsilon: o.epsilon,
                rejected_residual: other.as_ref().map(|p| p.residual),
            }),
        }
    }
    Ok(QrstRun {
        set,
        outcomes,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_examples() {
        assert_eq!(heuristic_shift(&DMatrix::identity(3, 3), 1.0).unwrap(), 0.0);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 2.0]));
        assert!((heuristic_shift(&m, 1.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn epsilon_vanishes_on_eigenvectors() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 2.0, 5.0]));
        let a = SymTensor::from_matrix(&m).unwrap();
        for i in 0..3 {
            assert_eq!(convergence_epsilon(&a, i).unwrap(), 0.0);
        }
        let e = SymTensor::identity(4, 3).unwrap();
        assert_eq!(convergence_epsilon(&e, 1).unwrap(), 0.0);
        assert!(convergence_epsilon(&e, 3).is_err());
    }

    #[test]
    fn epsilon_on_labeling_tensor_by_hand() {
        // slice 1 = [[1,2,3],[2,4,5],[3,5,6]]; column 1 = (1,2,3)
        let a = SymTensor::labeling(3, 3).unwrap();
        let slice = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let spec = nalgebra::SymmetricEigen::new(slice)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m: f64, v: &f64| m.max(v.abs()));
        let expect = (2.0_f64 * 2.0 + 3.0 * 3.0).sqrt() / spec;
        assert!((convergence_epsilon(&a, 0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_tensor_converges_immediately() {
        let z = SymTensor::zeros(3, 3).unwrap();
        let run = qrst_all(&z, &SolverConfig::default(), true).unwrap();
        assert!(run
            .outcomes
            .iter()
            .all(|o| o.converged() && o.iterations == 0));
        assert!(run.set.pairs().all(|p| p.lambda == 0.0));
    }

    #[test]
    fn identity_tensor_gives_unit_eigenvalue() {
        let e = SymTensor::identity(4, 3).unwrap();
        for i in 0..3 {
            let o = qrst_slice(&e, i, &SolverConfig::default(), true).unwrap();
            let p = o.eigenpair.unwrap();
            assert!((p.lambda - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn slice_out_of_range() {
        let a = SymTensor::labeling(3, 2).unwrap();
        assert!(matches!(
            qrst_slice(&a, 2, &SolverConfig::default(), true),
            Err(Error::OutOfRange(_))
        ));
    }
}
