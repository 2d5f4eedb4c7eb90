//! Seeded property checks shared by the property tests and the acceptance
//! target. Each check draws its inputs from `seed` and returns a description
//! of the first violated relation.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use qrst_core::config::SolverConfig;
use qrst_core::linalg::{orthonormal_complement, QrSign};
use qrst_core::oracle::{newton_refine, OracleConfig};
use qrst_core::qrst::{qrst_slice_observed, SliceStatus};
use qrst_core::random::{
    random_orthogonal, random_symmetric, random_unit_vector, rng_for, StartDistribution,
};
use qrst_core::spectra::residual;
use qrst_core::tensor::{canonical_indices, unique_entry_count, DenseTensor, SymTensor};

pub type Check = Result<(), String>;

pub fn ensure(ok: bool, what: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

/// `‖a − b‖_∞ / max(1, ‖b‖_∞)` over equal-length slices.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_tensor<R: Rng>(rng: &mut R, dims: Vec<usize>) -> DenseTensor {
    let len = dims.iter().product();
    DenseTensor::new(
        dims,
        (0..len)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
    .unwrap()
}

/// Order in `2..=4`, dimension in `2..=5`, drawn from `seed`.
pub fn shape(seed: u64) -> (usize, usize) {
    let mut rng = rng_for(seed, 1000);
    (rng.random_range(2..=4), rng.random_range(2..=5))
}

/// Mode products on distinct modes commute; on one mode they compose.
pub fn mode_product_laws(seed: u64) -> Check {
    let mut rng = rng_for(seed, 1);
    let d = rng.random_range(2..=4);
    let dims: Vec<usize> = (0..d).map(|_| rng.random_range(1..=5)).collect();
    let a = gaussian_tensor(&mut rng, dims.clone());
    let m = rng.random_range(0..d);
    let n = (m + rng.random_range(1..d)) % d;
    let (pu, pv, pw) = (
        rng.random_range(1..=4),
        rng.random_range(1..=4),
        rng.random_range(1..=4),
    );
    let u = gaussian_matrix(&mut rng, pu, dims[m]);
    let v = gaussian_matrix(&mut rng, pv, dims[n]);

    let lhs = a
        .kmode_product(&u, m)
        .unwrap()
        .kmode_product(&v, n)
        .unwrap();
    let rhs = a
        .kmode_product(&v, n)
        .unwrap()
        .kmode_product(&u, m)
        .unwrap();
    ensure(
        lhs.dims() == rhs.dims() && rel_diff(lhs.values(), rhs.values()) <= 1e-12,
        || format!("distinct modes {m},{n} do not commute (seed {seed})"),
    )?;

    let w = gaussian_matrix(&mut rng, pw, pu);
    let lhs = a
        .kmode_product(&u, m)
        .unwrap()
        .kmode_product(&w, m)
        .unwrap();
    let rhs = a.kmode_product(&(&w * &u), m).unwrap();
    ensure(
        lhs.dims() == rhs.dims() && rel_diff(lhs.values(), rhs.values()) <= 1e-12,
        || format!("same-mode products do not compose (seed {seed})"),
    )
}

/// For matrices, `A ×_1 B ×_2 C = B A Cᵀ`.
pub fn matrix_mode_products(seed: u64) -> Check {
    let mut rng = rng_for(seed, 2);
    let (r, c) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let (p, q) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let a = gaussian_matrix(&mut rng, r, c);
    let b = gaussian_matrix(&mut rng, p, r);
    let cm = gaussian_matrix(&mut rng, q, c);
    let t = DenseTensor::from_matrix(&a)
        .kmode_product(&b, 0)
        .unwrap()
        .kmode_product(&cm, 1)
        .unwrap();
    let expect = &b * &a * cm.transpose();
    ensure(
        rel_diff(t.to_matrix().unwrap().as_slice(), expect.as_slice()) <= 1e-12,
        || format!("A x1 B x2 C differs from B A C^T (seed {seed})"),
    )
}

/// `A x^m` against an explicit sum over every index, and
/// `(A x^1) x^{m−1} = A x^m`.
pub fn contraction(seed: u64) -> Check {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let mut rng = rng_for(seed, 3);
    let x: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let m = rng.random_range(1..=d);

    let got = a.contract(&x, m).unwrap();
    let keep = d - m;
    let mut expect = vec![0.0; n.pow(keep as u32)];
    let mut idx = vec![0usize; d];
    for off in 0..n.pow(d as u32) {
        let mut rem = off;
        for slot in idx.iter_mut() {
            *slot = rem % n;
            rem /= n;
        }
        let w: f64 = idx[keep..].iter().map(|&i| x[i]).product();
        let out = idx[..keep].iter().rev().fold(0, |acc, &i| acc * n + i);
        expect[out] += w * a.get(&idx);
    }
    ensure(rel_diff(got.values(), &expect) <= 1e-12, || {
        format!("A x^{m} differs from the explicit sum (seed {seed})")
    })?;

    let once = a.contract(&x, 1).unwrap();
    let sym =
        SymTensor::from_dense(&once, 1e-12).map_err(|e| format!("A x is not symmetric: {e}"))?;
    let twice = sym.contract(&x, m - 1).unwrap();
    ensure(rel_diff(twice.values(), got.values()) <= 1e-12, || {
        format!("(A x) x^{} differs from A x^{m} (seed {seed})", m - 1)
    })
}

/// `E x^{d−1} = x` on the sphere and `(A + αE) x^{d−1} = (λ + α) x` for
/// eigenpairs of `A`.
pub fn identity_tensor(seed: u64) -> Check {
    let mut rng = rng_for(seed, 4);
    let d = [2, 4, 6][rng.random_range(0..3)];
    let n = rng.random_range(2..=4);
    let e = SymTensor::identity(d, n).unwrap();
    let x = random_unit_vector(&mut rng, n, StartDistribution::Normal);
    let ex = e.contract_vector(x.as_slice()).unwrap();
    ensure((&ex - &x).norm() <= 1e-12, || {
        format!("E x^(d-1) != x for d={d}, n={n} (seed {seed})")
    })?;

    let a = random_symmetric(d, n, seed).unwrap();
    let alpha: f64 = rng.sample(StandardNormal);
    let shifted = a.add_scaled(&e, alpha).unwrap();
    let Some((lambda, v)) = some_eigenpair(&a, seed) else {
        return Ok(());
    };
    let r = residual(&shifted, lambda + alpha, &v).unwrap();
    let r0 = residual(&a, lambda, &v).unwrap();
    ensure(r <= r0 + 1e-10 * a.frobenius_norm().max(1.0), || {
        format!("A + alpha E does not shift the eigenvalue by alpha (seed {seed})")
    })
}

/// An eigenpair of `a` from a seeded Newton start, if one converges.
pub fn some_eigenpair(a: &SymTensor, seed: u64) -> Option<(f64, DVector<f64>)> {
    let cfg = OracleConfig::default();
    (0..20).find_map(|k| {
        let x0 = random_unit_vector(
            &mut rng_for(seed, 100 + k),
            a.dim(),
            StartDistribution::Normal,
        );
        newton_refine(a, &x0, &cfg)
            .unwrap()
            .ok()
            .map(|p| (p.lambda, p.x))
    })
}

/// Similarity transforms by orthogonal `Q` keep the Frobenius norm, come out
/// nearly symmetric before re-symmetrization, and are undone by `Qᵀ`.
pub fn similarity(seed: u64) -> Check {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let q = random_orthogonal(&mut rng_for(seed, 5), n);
    let scale = a.frobenius_norm();
    let (b, asym) = a.similarity_transform_reporting(&q).unwrap();
    ensure(asym <= 1e-10 * scale, || {
        format!("raw asymmetry {asym:e} (seed {seed})")
    })?;
    ensure((b.frobenius_norm() - scale).abs() <= 1e-10 * scale, || {
        format!(
            "Frobenius norm {} -> {} (seed {seed})",
            scale,
            b.frobenius_norm()
        )
    })?;
    let back = b.similarity_transform(&q.transpose()).unwrap();
    ensure(rel_diff(back.values(), a.values()) <= 1e-10, || {
        format!("(A Q^d) (Q^T)^d != A (seed {seed})")
    })
}

/// `(λ, x)` eigenpair implies `((−1)^d λ, −x)` eigenpair.
pub fn lemma_sign_pairing(seed: u64) -> Check {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let Some((lambda, x)) = some_eigenpair(&a, seed) else {
        return Ok(());
    };
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    let r = residual(&a, lambda, &x).unwrap();
    let rp = residual(&a, sign * lambda, &(-&x)).unwrap();
    ensure(
        (rp - r).abs() <= 1e-12 * a.frobenius_norm().max(1.0),
        || format!("partner residual {rp:e} vs {r:e} (seed {seed})"),
    )
}

/// An eigenpair `(λ, y)` of `A Q^d` maps to `(λ, Q y)` on `A`; checked both
/// for a Newton eigenpair of `A Q^d` and for `(λ, e_1)` when `Q` carries an
/// eigenvector of `A` in its first column.
pub fn lemma_similarity(seed: u64) -> Check {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let q = random_orthogonal(&mut rng_for(seed, 6), n);
    let b = a.similarity_transform(&q).unwrap();
    let slack = 1e-10 * a.frobenius_norm().max(1.0);
    if let Some((lambda, y)) = some_eigenpair(&b, seed) {
        let rb = residual(&b, lambda, &y).unwrap();
        let ra = residual(&a, lambda, &(&q * &y)).unwrap();
        ensure(ra <= rb + slack, || {
            format!("mapped residual {ra:e} > {rb:e} (seed {seed})")
        })?;
    }
    if let Some((lambda, x)) = some_eigenpair(&a, seed) {
        let mut basis = DMatrix::zeros(n, n);
        basis.set_column(0, &x);
        basis
            .columns_mut(1, n - 1)
            .copy_from(&orthonormal_complement(&x));
        let c = a.similarity_transform(&basis).unwrap();
        let e1 = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let rc = residual(&c, lambda, &e1).unwrap();
        let ra = residual(&a, lambda, &x).unwrap();
        ensure(rc <= ra + slack, || {
            format!("(lambda, e_1) residual {rc:e} on A Q^d (seed {seed})")
        })?;
    }
    Ok(())
}

/// `from_unique_entries(unique_entries(A)) = A` bit for bit, and the entries
/// are read in canonical order.
pub fn unique_entries_round_trip(seed: u64) -> Check {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let entries = a.unique_entries();
    ensure(entries.len() == unique_entry_count(d, n), || {
        "wrong unique-entry count".into()
    })?;
    for (c, v) in canonical_indices(d, n).iter().zip(&entries) {
        ensure(a.get(&c.indices).to_bits() == v.to_bits(), || {
            format!("entry {:?} out of order", c.indices)
        })?;
    }
    let back = SymTensor::from_unique_entries(d, n, &entries).unwrap();
    ensure(
        back.values()
            .iter()
            .zip(a.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()),
        || format!("round trip is not bit-exact (seed {seed})"),
    )
}

/// Largest violation of each per-step relation over one QRST slice run.
#[derive(Debug, Default, Clone, Copy)]
pub struct IterationErrors {
    pub steps: usize,
    /// `‖Q̄_k R_k − (A_0 q̄_{i,k−1}^{d−2} + s I) Q̄_{k−1}‖_F / ‖A_0‖_F`.
    pub orthogonal_iteration: f64,
    /// `‖Q̄_kᵀ Q̄_k − I‖_F`.
    pub orthogonality: f64,
    /// `‖A_k − A_0 Q̄_k^d‖_∞ / ‖A_0‖_F`.
    pub accumulated_transform: f64,
    /// Largest raw asymmetry of a transform relative to `‖A_0‖_F`.
    pub asymmetry: f64,
    /// `‖q̄_{1,k} r_{11,k} − (A_0 q̄_{1,k−1}^{d−2}) q̄_{1,k−1}‖ / ‖A_0‖_F` (slice 1, unshifted).
    pub first_column: f64,
}

/// Runs slice `i` with the given settings and measures every per-step relation.
pub fn iteration_errors(
    a0: &SymTensor,
    i: usize,
    cfg: &SolverConfig,
    shifted: bool,
) -> IterationErrors {
    let scale = a0.frobenius_norm().max(1.0);
    let n = a0.dim();
    let mut e = IterationErrors::default();
    qrst_slice_observed(a0, i, cfg, shifted, |v| {
        e.steps += 1;
        let qi_prev = v.qbar_prev.column(i).into_owned();
        let mut m = a0.contract_matrix(qi_prev.as_slice()).unwrap();
        for j in 0..n {
            m[(j, j)] += v.shift;
        }
        let lhs = v.qbar * v.r;
        e.orthogonal_iteration = e
            .orthogonal_iteration
            .max((lhs - &m * v.qbar_prev).norm() / scale);
        let eye = DMatrix::<f64>::identity(n, n);
        e.orthogonality = e
            .orthogonality
            .max((v.qbar.transpose() * v.qbar - eye).norm());
        let direct = a0.similarity_transform(v.qbar).unwrap();
        e.accumulated_transform = e.accumulated_transform.max(
            direct
                .values()
                .iter()
                .zip(v.current.values())
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
                / scale,
        );
        e.asymmetry = e.asymmetry.max(v.asymmetry / scale);
        if i == 0 && v.shift == 0.0 {
            let q1 = v.qbar.column(0) * v.r[(0, 0)];
            let s = &m * &qi_prev;
            e.first_column = e.first_column.max((q1 - s).norm() / scale);
        }
    })
    .unwrap();
    e
}

/// Off-diagonal mass of row and column `i` of the last `R`, relative to
/// `‖R‖_F`, and the local eigen-relation
/// `‖(A_0 q̄_{i,k−1}^{d−2}) q̄_{i,k−1} − (r_ii q̄_{i,k} − s q̄_{i,k−1})‖ / ‖A_0‖_F`
/// for a converged slice. Householder QR may flip `q̄_i` between steps, so
/// both columns appear.
pub fn converged_slice_errors(a0: &SymTensor, i: usize, cfg: &SolverConfig) -> Option<(f64, f64)> {
    let out = qrst_slice_observed(a0, i, cfg, true, |_| {}).unwrap();
    if out.status != SliceStatus::Converged {
        return None;
    }
    let step = out.last_step?;
    let r = &step.r;
    let n = a0.dim();
    let off: f64 = (0..n)
        .filter(|&j| j != i)
        .map(|j| r[(i, j)].powi(2) + r[(j, i)].powi(2))
        .sum::<f64>()
        .sqrt();
    let prev = step.qbar_prev.column(i).into_owned();
    let next = out.qbar.column(i).into_owned();
    let m = a0.contract_matrix(prev.as_slice()).unwrap();
    let local = (&m * &prev - (&next * r[(i, i)] - &prev * step.shift)).norm()
        / a0.frobenius_norm().max(1.0);
    Some((off / r.norm(), local))
}

/// Per-step relations of one random slice run, for both QR conventions.
pub fn qrst_iteration_invariants(seed: u64) -> Check {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let i = (seed as usize) % n;
    for sign in [QrSign::Householder, QrSign::NonNegativeDiagonal] {
        for shifted in [true, false] {
            let cfg = SolverConfig {
                max_iter: 60,
                qr_sign: sign,
                ..Default::default()
            };
            let e = iteration_errors(&a, i, &cfg, shifted);
            let ctx = || {
                format!(
                    "d={d} n={n} slice {} {sign:?} shifted={shifted} (seed {seed})",
                    i + 1
                )
            };
            ensure(e.orthogonal_iteration <= 1e-8, || {
                format!(
                    "orthogonal iteration {:e}, {}",
                    e.orthogonal_iteration,
                    ctx()
                )
            })?;
            ensure(e.orthogonality <= 1e-10, || {
                format!("Qbar orthogonality {:e}, {}", e.orthogonality, ctx())
            })?;
            ensure(e.accumulated_transform <= 1e-9, || {
                format!("A_k vs A_0 Qbar^d {:e}, {}", e.accumulated_transform, ctx())
            })?;
            ensure(e.asymmetry <= 1e-10, || {
                format!("asymmetry {:e}, {}", e.asymmetry, ctx())
            })?;
            if sign == QrSign::NonNegativeDiagonal {
                ensure(e.first_column <= 1e-8, || {
                    format!("first column vs S-HOPM {:e}, {}", e.first_column, ctx())
                })?;
            }
        }
    }
    Ok(())
}

/// Row/column-`i` diagonality of `R` and the local eigen-relation at
/// convergence; slices that do not converge within the budget are skipped.
pub fn qrst_convergence_invariants(seed: u64) -> Result<bool, String> {
    let (d, n) = shape(seed);
    let a = random_symmetric(d, n, seed).unwrap();
    let i = (seed as usize) % n;
    let cfg = SolverConfig {
        max_iter: 2000,
        ..Default::default()
    };
    let Some((off, local)) = converged_slice_errors(&a, i, &cfg) else {
        return Ok(false);
    };
    ensure(off <= 100.0 * cfg.tol, || {
        format!(
            "row/column {} of R off-diagonal {off:e} (seed {seed})",
            i + 1
        )
    })?;
    ensure(local <= 100.0 * cfg.tol, || {
        format!("local eigen-relation {local:e} (seed {seed})")
    })?;
    Ok(true)
}
