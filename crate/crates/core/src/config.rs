use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::QrSign;
use crate::random::StartDistribution;
use crate::spectra::SpectraTolerances;

/// Parameters shared by the QRST, PQRST and power-method solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// QRST convergence tolerance on the slice epsilon.
    pub tol: f64,
    pub max_iter: usize,
    /// `δ` in the slice shift `−λ_min + δ`.
    pub delta: f64,
    /// Fixed power-method shift. Negative values search for concave (minimum) pairs.
    pub alpha: f64,
    /// Convexity margin targeted by the adaptive power method.
    pub adaptive_target: f64,
    /// Power methods stop once `|λ_{k+1} − λ_k|` is at or below this.
    pub lambda_tol: f64,
    pub seed: u64,
    /// Largest permutation plan PQRST enumerates exhaustively.
    pub perm_cap: usize,
    pub qr_sign: QrSign,
    pub start: StartDistribution,
    pub tolerances: SpectraTolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 1000,
            delta: 1.0,
            alpha: 0.0,
            adaptive_target: 1e-2,
            lambda_tol: 1e-15,
            seed: 0,
            perm_cap: 120,
            qr_sign: QrSign::Householder,
            start: StartDistribution::Uniform,
            tolerances: SpectraTolerances::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("delta", self.delta),
            ("adaptive_target", self.adaptive_target),
            ("lambda_tol", self.lambda_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if self.perm_cap < 1 {
            return Err(Error::InvalidInput("perm_cap must be at least 1".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "alpha must be finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}
