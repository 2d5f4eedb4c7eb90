//! Symmetric higher-order power methods: unshifted (S-HOPM), fixed shift
//! (SS-HOPM) and an adaptive-shift variant.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::lambda_min;
use crate::random::start_vector;
use crate::spectra::{residual, residual_bound, EigenSet, Eigenpair, Provenance, SolverId};
use crate::tensor::SymTensor;

/// `(d − 1) · Σ |a|` over all `n^d` positions.
pub fn conservative_shift(a: &SymTensor) -> f64 {
    (a.order() as f64 - 1.0) * a.abs_sum()
}

/// Smallest `α ≥ 0` with `d(d−1)·λ_min(A x^{d−2}) + d·α ≥ target`.
pub fn adaptive_shift(a: &SymTensor, x: &DVector<f64>, target: f64) -> Result<f64> {
    let d = a.order() as f64;
    let lmin = lambda_min(&a.contract_matrix(x.as_slice())?)?;
    Ok(((target - d * (d - 1.0) * lmin) / d).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMethod {
    /// `α = 0`.
    Unshifted,
    /// Fixed `α`; negative values run the concave iteration.
    Fixed(f64),
    Adaptive,
}

impl PowerMethod {
    pub fn solver_id(self) -> SolverId {
        match self {
            PowerMethod::Unshifted => SolverId::Shopm,
            PowerMethod::Fixed(_) => SolverId::Sshopm,
            PowerMethod::Adaptive => SolverId::SshopmAdaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTraceRow {
    pub run: usize,
    pub k: usize,
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerStatus {
    Converged,
    MaxIterations,
    Diverged,
    /// `λ` settled but the residual was still above the bound at `max_iter`.
    ResidualRejected,
}

#[derive(Debug, Clone)]
pub struct PowerOutcome {
    pub run: usize,
    pub status: PowerStatus,
    pub eigenpair: Option<Eigenpair>,
    pub lambda: f64,
    pub x: DVector<f64>,
    pub iterations: usize,
    pub trace: Vec<PowerTraceRow>,
}

impl PowerOutcome {
    pub fn converged(&self) -> bool {
        self.status == PowerStatus::Converged
    }
}

/// SS-HOPM with fixed shift `alpha` from `x0`.
pub fn sshopm(
    a: &SymTensor,
    x0: &DVector<f64>,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<PowerOutcome> {
    let method = if alpha == 0.0 {
        PowerMethod::Unshifted
    } else {
        PowerMethod::Fixed(alpha)
    };
    power_iterate(a, x0, method, cfg, 0)
}

/// SS-HOPM with the shift re-chosen at every step by [`adaptive_shift`].
pub fn sshopm_adaptive(
    a: &SymTensor,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<PowerOutcome> {
    power_iterate(a, x0, PowerMethod::Adaptive, cfg, 0)
}

/// Runs one power-method trajectory; `run` is recorded in provenance and trace.
pub fn power_iterate(
    a: &SymTensor,
    x0: &DVector<f64>,
    method: PowerMethod,
    cfg: &SolverConfig,
    run: usize,
) -> Result<PowerOutcome> {
    cfg.validate()?;
    if x0.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start of length {} for dimension {}",
            x0.len(),
            a.dim()
        )));
    }
    let norm = x0.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput(
            "start vector must be nonzero and finite".into(),
        ));
    }
    let mut x = x0 / norm;
    let mut lambda = a.contract_scalar(x.as_slice())?;
    let bound = residual_bound(a, cfg.tol);
    let mut trace = Vec::new();
    let mut status = PowerStatus::MaxIterations;
    let mut iterations = 0;
    let mut settled = false;

    for k in 1..=cfg.max_iter {
        let alpha = match method {
            PowerMethod::Unshifted => 0.0,
            PowerMethod::Fixed(alpha) => alpha,
            PowerMethod::Adaptive => adaptive_shift(a, &x, cfg.adaptive_target)?,
        };
        if k == 1 {
            trace.push(PowerTraceRow {
                run,
                k: 0,
                alpha,
                lambda,
            });
        }
        let mut y = a.contract_vector(x.as_slice())? + &x * alpha;
        if alpha < 0.0 {
            y = -y;
        }
        let ynorm = y.norm();
        iterations = k;
        if !(ynorm > 0.0) || !ynorm.is_finite() {
            status = PowerStatus::Diverged;
            break;
        }
        x = y / ynorm;
        let next = a.contract_scalar(x.as_slice())?;
        trace.push(PowerTraceRow {
            run,
            k,
            alpha,
            lambda: next,
        });
        if !next.is_finite() {
            status = PowerStatus::Diverged;
            break;
        }
        settled = (next - lambda).abs() <= cfg.lambda_tol;
        lambda = next;
        // A settled λ only certifies the residual to about sqrt(Δλ·|λ + α|);
        // keep going until the vector catches up.
        if settled && residual(a, lambda, &x)? <= bound {
            status = PowerStatus::Converged;
            break;
        }
    }
    if status == PowerStatus::MaxIterations && settled {
        status = PowerStatus::ResidualRejected;
    }

    let mut eigenpair = None;
    if status == PowerStatus::Converged {
        let mut prov = Provenance::new(method.solver_id(), iterations);
        prov.run = Some(run);
        eigenpair = Some(Eigenpair::evaluate(
            a,
            lambda,
            x.clone(),
            prov,
            &cfg.tolerances,
        )?);
    }
    Ok(PowerOutcome {
        run,
        status,
        eigenpair,
        lambda,
        x,
        iterations,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct PowerRun {
    pub set: EigenSet,
    pub outcomes: Vec<PowerOutcome>,
}

impl PowerRun {
    pub fn converged_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.converged()).count()
    }

    /// Median iteration count over converged runs.
    pub fn median_iterations(&self) -> f64 {
        let its: Vec<usize> = self
            .outcomes
            .iter()
            .filter(|o| o.converged())
            .map(|o| o.iterations)
            .collect();
        crate::spectra::median(&its)
    }

    pub fn traces(&self) -> impl Iterator<Item = &PowerTraceRow> {
        self.outcomes.iter().flat_map(|o| o.trace.iter())
    }
}

/// `restarts` independent runs from seeded starts (`cfg.start`, `cfg.seed`).
pub fn multistart(
    a: &SymTensor,
    method: PowerMethod,
    restarts: usize,
    cfg: &SolverConfig,
) -> Result<PowerRun> {
    let outcomes = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = start_vector(a.dim(), cfg.start, cfg.seed, r);
            power_iterate(a, &x0, method, cfg, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = EigenSet::new(a.order(), cfg.tolerances);
    for o in &outcomes {
        if let Some(p) = &o.eigenpair {
            set.insert(p.clone());
        }
    }
    Ok(PowerRun { set, outcomes })
}
