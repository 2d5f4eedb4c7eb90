//! Eigenpair bookkeeping shared by every solver: residuals, stability of the
//! projected Hessian, the sign-canonical form and deduplication.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{orthonormal_complement, symmetric_matrix_eigen};
use crate::tensor::{Permutation, SymTensor};

/// Label derived from the inertia of the projected Hessian of the Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    PositivelyStable,
    NegativelyStable,
    Unstable,
    Undetermined,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::PositivelyStable => "positively stable",
            Stability::NegativelyStable => "negatively stable",
            Stability::Unstable => "unstable",
            Stability::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverId {
    Qrst,
    Pqrst,
    Shopm,
    Sshopm,
    SshopmAdaptive,
    Oracle,
}

impl SolverId {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverId::Qrst => "qrst",
            SolverId::Pqrst => "pqrst",
            SolverId::Shopm => "shopm",
            SolverId::Sshopm => "sshopm",
            SolverId::SshopmAdaptive => "sshopm-adaptive",
            SolverId::Oracle => "oracle",
        }
    }
}

/// Where an eigenpair came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub solver: SolverId,
    /// 0-based slice index for QRST runs.
    pub slice: Option<usize>,
    /// Index into the permutation plan, with the permutation itself.
    pub permutation: Option<(usize, Permutation)>,
    /// Restart index for power methods and the oracle.
    pub run: Option<usize>,
    pub iterations: usize,
}

impl Provenance {
    pub fn new(solver: SolverId, iterations: usize) -> Self {
        Self {
            solver,
            slice: None,
            permutation: None,
            run: None,
            iterations,
        }
    }
}

/// A real Z-eigenpair `A x^{d-1} = λ x`, `‖x‖ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub x: DVector<f64>,
    /// `‖A x^{d-1} − λ x‖₂`.
    pub residual: f64,
    pub stability: Stability,
    pub provenance: Provenance,
}

impl Eigenpair {
    /// Evaluates residual and stability of `(lambda, x)` on `a`.
    pub fn evaluate(
        a: &SymTensor,
        lambda: f64,
        x: DVector<f64>,
        provenance: Provenance,
        tol: &SpectraTolerances,
    ) -> Result<Self> {
        let res = residual(a, lambda, &x)?;
        let stability = classify_stability(a, lambda, &x, res, tol)?;
        Ok(Self {
            lambda,
            x,
            residual: res,
            stability,
            provenance,
        })
    }
}

/// Thresholds for stability classification and deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectraTolerances {
    /// Projected-Hessian eigenvalues within `θ = stability_rel · max(1, ‖A‖_F)` of
    /// zero make the label undetermined.
    pub stability_rel: f64,
    /// Pairs with residual above `classify_residual_rel · max(1, ‖A‖_F)` are not classified.
    pub classify_residual_rel: f64,
    /// Merge when `|λ₁ − λ₂| ≤ dedup_lambda_rel · max(1, |λ₁|)` ...
    pub dedup_lambda_rel: f64,
    /// ... and `‖x₁ − x₂‖₂ ≤ dedup_vector`.
    pub dedup_vector: f64,
    /// Components at or below this magnitude are skipped when fixing the sign.
    pub canonical_zero: f64,
}

impl Default for SpectraTolerances {
    fn default() -> Self {
        Self {
            stability_rel: 1e-8,
            classify_residual_rel: 1e-6,
            dedup_lambda_rel: 1e-6,
            dedup_vector: 1e-4,
            canonical_zero: 1e-10,
        }
    }
}

/// `‖A x^{d-1} − λ x‖₂`.
pub fn residual(a: &SymTensor, lambda: f64, x: &DVector<f64>) -> Result<f64> {
    let v = a.contract_vector(x.as_slice())?;
    Ok((v - x * lambda).norm())
}

/// Residual bound every emitted pair must meet at solver tolerance `tau`.
pub fn residual_bound(a: &SymTensor, tau: f64) -> f64 {
    (1e-8_f64).max(10.0 * tau) * a.frobenius_norm().max(1.0)
}

/// Inertia of `C = Uᵀ((d−1)·A x^{d−2} − λI)U` on the complement of `x`.
///
/// For odd order the Lemma-2.1 partner `(−λ, −x)` negates `C`; labels are
/// therefore read off the representative with `λ ≥ 0` (or, for `λ ≈ 0`, the
/// one whose leading nonzero component is positive), which makes the label a
/// property of the pair class.
pub fn classify_stability(
    a: &SymTensor,
    lambda: f64,
    x: &DVector<f64>,
    residual: f64,
    tol: &SpectraTolerances,
) -> Result<Stability> {
    let n = a.dim();
    let d = a.order();
    let scale = a.frobenius_norm().max(1.0);
    if n < 2 || d < 2 || !(residual <= tol.classify_residual_rel * scale) {
        return Ok(Stability::Undetermined);
    }
    let theta = tol.stability_rel * scale;

    let (lambda, x) = if d % 2 == 1 {
        let flip = if lambda.abs() > theta {
            lambda < 0.0
        } else {
            leading_sign(x, tol.canonical_zero) < 0.0
        };
        if flip {
            (-lambda, -x)
        } else {
            (lambda, x.clone())
        }
    } else {
        (lambda, x.clone())
    };

    let u = orthonormal_complement(&x);
    let mut h = a.contract_matrix(x.as_slice())? * (d as f64 - 1.0);
    for i in 0..n {
        h[(i, i)] -= lambda;
    }
    let c = u.transpose() * h * &u;
    let c = (&c + c.transpose()) * 0.5;
    let eig = symmetric_matrix_eigen(&c)?;
    let vals = eig.values.as_slice();
    if vals.iter().any(|v| v.abs() <= theta) {
        Ok(Stability::Undetermined)
    } else if vals.iter().all(|&v| v < 0.0) {
        Ok(Stability::NegativelyStable)
    } else if vals.iter().all(|&v| v > 0.0) {
        Ok(Stability::PositivelyStable)
    } else {
        Ok(Stability::Unstable)
    }
}

fn leading_sign(x: &DVector<f64>, zero: f64) -> f64 {
    x.iter()
        .find(|v| v.abs() > zero)
        .map_or(1.0, |v| v.signum())
}

/// Sign-canonical representative: the first component of magnitude above
/// `zero` is made positive; for odd order `λ` flips together with `x`.
pub fn canonical_form(
    lambda: f64,
    x: &DVector<f64>,
    order: usize,
    zero: f64,
) -> (f64, DVector<f64>) {
    if leading_sign(x, zero) < 0.0 {
        let lambda = if order % 2 == 1 { -lambda } else { lambda };
        (lambda, -x)
    } else {
        (lambda, x.clone())
    }
}

/// Canonicalizes `pair` (see [`canonical_form`]); residual, stability and
/// provenance are carried over unchanged.
pub fn canonicalize(pair: &Eigenpair, order: usize) -> Eigenpair {
    let (lambda, x) = canonical_form(
        pair.lambda,
        &pair.x,
        order,
        SpectraTolerances::default().canonical_zero,
    );
    Eigenpair {
        lambda,
        x,
        ..pair.clone()
    }
}

/// Whether two eigenpairs are the same up to the Lemma-2.1 pairing and the
/// dedup tolerances.
pub fn equivalent(
    a: (f64, &DVector<f64>),
    b: (f64, &DVector<f64>),
    order: usize,
    tol: &SpectraTolerances,
) -> bool {
    let close = |l1: f64, x1: &DVector<f64>, l2: f64, x2: &DVector<f64>| {
        (l1 - l2).abs() <= tol.dedup_lambda_rel * l1.abs().max(1.0)
            && (x1 - x2).norm() <= tol.dedup_vector
    };
    if a.1.len() != b.1.len() {
        return false;
    }
    let partner_lambda = if order % 2 == 1 { -b.0 } else { b.0 };
    close(a.0, a.1, b.0, b.1) || close(a.0, a.1, partner_lambda, &-b.1)
}

/// One distinct eigenpair with the number of runs that converged to it.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEntry {
    pub pair: Eigenpair,
    pub occurrences: usize,
    /// Iteration count of every run merged into this entry, in merge order.
    pub iterations: Vec<usize>,
}

impl EigenEntry {
    pub fn median_iterations(&self) -> f64 {
        median(&self.iterations)
    }
}

pub fn median(values: &[usize]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) as f64 / 2.0
    } else {
        v[mid] as f64
    }
}

/// Distinct eigenpairs of one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    order: usize,
    tol: SpectraTolerances,
    entries: Vec<EigenEntry>,
}

impl EigenSet {
    pub fn new(order: usize, tol: SpectraTolerances) -> Self {
        Self {
            order,
            tol,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[EigenEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_occurrences(&self) -> usize {
        self.entries.iter().map(|e| e.occurrences).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &Eigenpair> {
        self.entries.iter().map(|e| &e.pair)
    }

    /// Adds one converged run. Returns the index of the entry it landed in.
    pub fn insert(&mut self, pair: Eigenpair) -> usize {
        let iterations = pair.provenance.iterations;
        self.insert_entry(EigenEntry {
            pair,
            occurrences: 1,
            iterations: vec![iterations],
        })
    }

    fn insert_entry(&mut self, entry: EigenEntry) -> usize {
        let pair = canonicalize(&entry.pair, self.order);
        let order = self.order;
        let tol = self.tol;
        if let Some(pos) = self.entries.iter().position(|e| {
            equivalent(
                (e.pair.lambda, &e.pair.x),
                (pair.lambda, &pair.x),
                order,
                &tol,
            )
        }) {
            let existing = &mut self.entries[pos];
            existing.occurrences += entry.occurrences;
            existing.iterations.extend(entry.iterations);
            if pair.residual < existing.pair.residual {
                existing.pair = pair;
            }
            pos
        } else {
            self.entries.push(EigenEntry { pair, ..entry });
            self.entries.len() - 1
        }
    }

    /// Merges another set into this one, accumulating occurrences.
    pub fn merge(&mut self, other: EigenSet) {
        for e in other.entries {
            self.insert_entry(e);
        }
    }

    /// Whether some member is equivalent to `(lambda, x)`.
    pub fn contains(&self, lambda: f64, x: &DVector<f64>) -> bool {
        self.find(lambda, x).is_some()
    }

    pub fn find(&self, lambda: f64, x: &DVector<f64>) -> Option<&EigenEntry> {
        self.entries.iter().find(|e| {
            equivalent(
                (e.pair.lambda, &e.pair.x),
                (lambda, x),
                self.order,
                &self.tol,
            )
        })
    }

    /// Entries ordered by decreasing eigenvalue (ties by vector components).
    pub fn sorted_by_lambda_desc(&self) -> Vec<&EigenEntry> {
        let mut v: Vec<&EigenEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| {
            b.pair.lambda.total_cmp(&a.pair.lambda).then_with(|| {
                a.pair
                    .x
                    .iter()
                    .zip(b.pair.x.iter())
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        v
    }
}

/// Canonicalizes and merges `pairs`.
pub fn dedup(
    pairs: impl IntoIterator<Item = Eigenpair>,
    order: usize,
    tol: &SpectraTolerances,
) -> EigenSet {
    let mut set = EigenSet::new(order, *tol);
    for p in pairs {
        set.insert(p);
    }
    set
}
