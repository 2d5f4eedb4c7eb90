//! Dense tensor storage and the multilinear kernels the solvers are built on.
//!
//! Values are stored flat with the first index varying fastest, so the offset
//! of the (0-based) index `(i_1, …, i_d)` is `Σ_k i_k · Π_{j<k} n_j`. The Rust
//! API is 0-based throughout; file formats and printed tables are 1-based.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// General dense multiway array.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "tensor dims must be positive, got {dims:?}"
            )));
        }
        let len: usize = dims.iter().product();
        if values.len() != len {
            return Err(Error::InvalidInput(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Self {
            dims,
            values: vec![0.0; len],
        }
    }

    /// Order-0 tensor holding a single value.
    pub fn scalar(value: f64) -> Self {
        Self {
            dims: Vec::new(),
            values: vec![value],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of an order-0 tensor (or the single entry of any 1-element tensor).
    pub fn as_scalar(&self) -> Option<f64> {
        (self.values.len() == 1).then(|| self.values[0])
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        let mut stride = 1;
        let mut off = 0;
        for (&i, &n) in index.iter().zip(&self.dims) {
            debug_assert!(i < n);
            off += i * stride;
            stride *= n;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    /// `self ×_k u`: multiplies the `p x n_k` matrix `u` onto mode `k` (0-based).
    pub fn kmode_product(&self, u: &DMatrix<f64>, k: usize) -> Result<DenseTensor> {
        if k >= self.order() {
            return Err(Error::OutOfRange(format!(
                "mode {k} for an order-{} tensor",
                self.order()
            )));
        }
        let nk = self.dims[k];
        if u.ncols() != nk {
            return Err(Error::DimensionMismatch(format!(
                "mode-{k} product needs a matrix with {nk} columns, got {}",
                u.ncols()
            )));
        }
        let p = u.nrows();
        let inner: usize = self.dims[..k].iter().product();
        let outer: usize = self.dims[k + 1..].iter().product();
        let mut dims = self.dims.clone();
        dims[k] = p;
        let mut out = vec![0.0; inner * p * outer];
        for b in 0..outer {
            let src = &self.values[b * inner * nk..(b + 1) * inner * nk];
            let dst = &mut out[b * inner * p..(b + 1) * inner * p];
            for j in 0..p {
                let row = &mut dst[j * inner..(j + 1) * inner];
                for ik in 0..nk {
                    let w = u[(j, ik)];
                    if w == 0.0 {
                        continue;
                    }
                    let col = &src[ik * inner..(ik + 1) * inner];
                    for (r, &c) in row.iter_mut().zip(col) {
                        *r += w * c;
                    }
                }
            }
        }
        Ok(DenseTensor { dims, values: out })
    }

    /// `⟨A, B⟩ = vec(A)ᵀ vec(B)`.
    pub fn inner_product(&self, other: &DenseTensor) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Interprets an order-2 tensor as a matrix (`(i, j)` → row `i`, column `j`).
    pub fn to_matrix(&self) -> Option<DMatrix<f64>> {
        (self.order() == 2)
            .then(|| DMatrix::from_column_slice(self.dims[0], self.dims[1], &self.values))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dims: vec![m.nrows(), m.ncols()],
            values: m.as_slice().to_vec(),
        }
    }
}

/// A nondecreasing index tuple with the number of distinct tuples it stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalIndex {
    /// 0-based, nondecreasing.
    pub indices: Vec<usize>,
    pub multiplicity: u64,
}

/// Number of unique entries of an order-`order`, dimension-`dim` symmetric tensor.
pub fn unique_entry_count(order: usize, dim: usize) -> usize {
    binomial(dim + order - 1, order)
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Canonical indices in lexicographic order.
pub fn canonical_indices(order: usize, dim: usize) -> Vec<CanonicalIndex> {
    (0..dim)
        .combinations_with_replacement(order)
        .map(|indices| {
            let denom: u64 = indices
                .iter()
                .dedup_with_count()
                .map(|(c, _)| factorial(c))
                .product();
            CanonicalIndex {
                multiplicity: factorial(order) / denom,
                indices,
            }
        })
        .collect()
}

/// Flat-position ↔ canonical-class bookkeeping for one `(order, dim)` pair.
#[derive(Debug)]
struct Layout {
    canonical: Vec<CanonicalIndex>,
    /// Canonical class of every flat position.
    class_of: Vec<u32>,
    /// Flat offset of each canonical (sorted) tuple.
    representative: Vec<usize>,
}

impl Layout {
    fn build(order: usize, dim: usize) -> Self {
        let canonical = canonical_indices(order, dim);
        let lookup: HashMap<&[usize], u32> = canonical
            .iter()
            .enumerate()
            .map(|(c, ci)| (ci.indices.as_slice(), c as u32))
            .collect();
        let len = dim.pow(order as u32);
        let mut class_of = Vec::with_capacity(len);
        let mut idx = vec![0usize; order];
        let mut sorted = vec![0usize; order];
        for _ in 0..len {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            class_of.push(lookup[sorted.as_slice()]);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < dim {
                    break;
                }
                *slot = 0;
            }
        }
        let representative = canonical
            .iter()
            .map(|ci| ci.indices.iter().rev().fold(0, |acc, &i| acc * dim + i))
            .collect();
        Self {
            canonical,
            class_of,
            representative,
        }
    }

    fn get(order: usize, dim: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((order, dim))
            .or_insert_with(|| Arc::new(Layout::build(order, dim)))
            .clone()
    }
}

/// A permutation of `0..n`; `map[j]` is the image of `j`.
///
/// As a matrix it is `P` with `P e_j = e_{map[j]}`, so `A P^d` relabels
/// `A(i_1, …, i_d)` as `A(map[i_1], …, map[i_d])`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidInput(format!(
                    "{map:?} is not a permutation of 0..{n}"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (j, &m) in self.0.iter().enumerate() {
            inv[m] = j;
        }
        Self(inv)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.0.len();
        let mut p = DMatrix::zeros(n, n);
        for (j, &m) in self.0.iter().enumerate() {
            p[(m, j)] = 1.0;
        }
        p
    }

    /// `P v`.
    pub fn apply_to_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (j, &m) in self.0.iter().enumerate() {
            out[m] = v[j];
        }
        out
    }
}

impl fmt::Display for Permutation {
    /// 1-based, space separated, e.g. `2 3 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            self.0.iter().map(|m| (m + 1).to_string()).join(" ")
        )
    }
}

/// Dense symmetric tensor in `S^[order, dim]`.
///
/// Every constructor writes one value per canonical class to all of its
/// positions, so permuted entries are bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    values: Vec<f64>,
}

impl SymTensor {
    fn check_shape(order: usize, dim: usize) -> Result<()> {
        if order < 1 || dim < 1 {
            return Err(Error::InvalidInput(format!(
                "order and dim must be positive, got order={order}, dim={dim}"
            )));
        }
        Ok(())
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Self::check_shape(order, dim)?;
        Ok(Self {
            order,
            dim,
            values: vec![0.0; dim.pow(order as u32)],
        })
    }

    /// Builds the tensor from its unique entries listed in lexicographic
    /// canonical-index order.
    pub fn from_unique_entries(order: usize, dim: usize, entries: &[f64]) -> Result<Self> {
        Self::check_shape(order, dim)?;
        let expected = unique_entry_count(order, dim);
        if entries.len() != expected {
            return Err(Error::InvalidInput(format!(
                "unique_entries: expected {expected} entries for order {order}, dim {dim}, got {}",
                entries.len()
            )));
        }
        let layout = Layout::get(order, dim);
        let values = layout
            .class_of
            .iter()
            .map(|&c| entries[c as usize])
            .collect();
        Ok(Self { order, dim, values })
    }

    /// Unique entries in lexicographic canonical-index order.
    pub fn unique_entries(&self) -> Vec<f64> {
        let layout = Layout::get(self.order, self.dim);
        layout
            .representative
            .iter()
            .map(|&off| self.values[off])
            .collect()
    }

    /// Averages every canonical class of a cubical dense tensor.
    pub fn symmetrize(t: &DenseTensor) -> Result<Self> {
        Ok(Self::symmetrize_reporting(t)?.0)
    }

    /// Like [`SymTensor::symmetrize`], also returning the largest deviation of an
    /// input entry from its class mean.
    pub fn symmetrize_reporting(t: &DenseTensor) -> Result<(Self, f64)> {
        let order = t.order();
        let dim = *t
            .dims()
            .first()
            .ok_or_else(|| Error::InvalidInput("order-0 tensor is not symmetrizable".into()))?;
        if t.dims().iter().any(|&d| d != dim) {
            return Err(Error::InvalidInput(format!(
                "symmetric tensors need equal dims, got {:?}",
                t.dims()
            )));
        }
        let layout = Layout::get(order, dim);
        let classes = layout.canonical.len();
        let mut sum = vec![0.0; classes];
        let mut uniform = vec![true; classes];
        for (off, &c) in layout.class_of.iter().enumerate() {
            let c = c as usize;
            let v = t.values[off];
            sum[c] += v;
            if v.to_bits() != t.values[layout.representative[c]].to_bits() {
                uniform[c] = false;
            }
        }
        let class_value: Vec<f64> = (0..classes)
            .map(|c| {
                if uniform[c] {
                    t.values[layout.representative[c]]
                } else {
                    sum[c] / layout.canonical[c].multiplicity as f64
                }
            })
            .collect();
        let mut asym = 0.0_f64;
        let values = layout
            .class_of
            .iter()
            .zip(&t.values)
            .map(|(&c, &v)| {
                let m = class_value[c as usize];
                asym = asym.max((v - m).abs());
                m
            })
            .collect();
        Ok((Self { order, dim, values }, asym))
    }

    /// Accepts a dense array if it is symmetric within `rel_tol · ‖t‖_F`, then
    /// symmetrizes it exactly.
    pub fn from_dense(t: &DenseTensor, rel_tol: f64) -> Result<Self> {
        let (s, asym) = Self::symmetrize_reporting(t)?;
        let tol = rel_tol * t.frobenius_norm();
        if asym > tol {
            return Err(Error::NotSymmetric {
                asymmetry: asym,
                tolerance: tol,
            });
        }
        Ok(s)
    }

    /// Even-order identity tensor `E` with `E x^{d-1} = x` for every unit `x`.
    pub fn identity(order: usize, dim: usize) -> Result<Self> {
        Self::check_shape(order, dim)?;
        if !order.is_multiple_of(2) {
            return Err(Error::Unsupported(format!(
                "no identity tensor exists for odd order {order}"
            )));
        }
        let len = dim.pow(order as u32);
        let mut t = DenseTensor::zeros(vec![dim; order]);
        let mut idx = vec![0usize; order];
        for off in 0..len {
            let mut rem = off;
            for slot in idx.iter_mut() {
                *slot = rem % dim;
                rem /= dim;
            }
            if idx.chunks(2).all(|p| p[0] == p[1]) {
                t.values[off] = 1.0;
            }
        }
        Self::symmetrize(&t)
    }

    /// Tensor whose unique entries are `1, 2, …` in lexicographic canonical order.
    pub fn labeling(order: usize, dim: usize) -> Result<Self> {
        Self::check_shape(order, dim)?;
        let entries: Vec<f64> = (1..=unique_entry_count(order, dim))
            .map(|v| v as f64)
            .collect();
        Self::from_unique_entries(order, dim, &entries)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        Self::from_dense(&DenseTensor::from_matrix(m), 1e-12)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> DenseTensor {
        DenseTensor {
            dims: vec![self.dim; self.order],
            values: self.values.clone(),
        }
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.order);
        let off = index.iter().rev().fold(0, |acc, &i| acc * self.dim + i);
        self.values[off]
    }

    /// `A(i, i, …, i)`.
    pub fn diagonal_entry(&self, i: usize) -> f64 {
        let stride: usize = (0..self.order).map(|k| self.dim.pow(k as u32)).sum();
        self.values[i * stride]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `Σ |a|` over all `n^d` positions.
    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn inner_product(&self, other: &SymTensor) -> Result<f64> {
        self.to_dense().inner_product(&other.to_dense())
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, other: &SymTensor, alpha: f64) -> Result<SymTensor> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "S[{},{}] + S[{},{}]",
                self.order, self.dim, other.order, other.dim
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(SymTensor {
            order: self.order,
            dim: self.dim,
            values,
        })
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a dimension-{} tensor",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Contracts the last mode with `x` on a flat buffer of `order` modes.
    fn contract_last(values: &[f64], dim: usize, x: &[f64]) -> Vec<f64> {
        let block = values.len() / dim;
        let mut out = vec![0.0; block];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(&values[j * block..(j + 1) * block]) {
                *o += xj * v;
            }
        }
        out
    }

    /// `A x^m`: multiplies `xᵀ` onto the last `m` modes and squeezes them.
    /// `m = d` yields an order-0 tensor.
    pub fn contract(&self, x: &[f64], m: usize) -> Result<DenseTensor> {
        self.check_vector(x)?;
        if m > self.order {
            return Err(Error::OutOfRange(format!(
                "contraction count {m} exceeds order {}",
                self.order
            )));
        }
        let mut vals = std::borrow::Cow::Borrowed(self.values.as_slice());
        for _ in 0..m {
            vals = std::borrow::Cow::Owned(Self::contract_last(&vals, self.dim, x));
        }
        Ok(DenseTensor {
            dims: vec![self.dim; self.order - m],
            values: vals.into_owned(),
        })
    }

    /// `A x^{d-2}` as an `n x n` matrix (requires `d ≥ 2`).
    pub fn contract_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if self.order < 2 {
            return Err(Error::Unsupported(
                "matrix contraction needs order >= 2".into(),
            ));
        }
        let t = self.contract(x, self.order - 2)?;
        Ok(DMatrix::from_column_slice(self.dim, self.dim, t.values()))
    }

    /// `A x^{d-1}`.
    pub fn contract_vector(&self, x: &[f64]) -> Result<DVector<f64>> {
        let t = self.contract(x, self.order - 1)?;
        Ok(DVector::from_vec(t.into_values()))
    }

    /// `A x^d`.
    pub fn contract_scalar(&self, x: &[f64]) -> Result<f64> {
        let t = self.contract(x, self.order)?;
        Ok(t.values()[0])
    }

    /// The square slice `A(:, :, i, …, i) = A e_i^{d-2}`.
    pub fn slice(&self, i: usize) -> DMatrix<f64> {
        let n2 = self.dim * self.dim;
        let off = if self.order > 2 {
            let stride: usize = (2..self.order).map(|k| self.dim.pow(k as u32)).sum();
            i * stride
        } else {
            0
        };
        DMatrix::from_column_slice(self.dim, self.dim, &self.values[off..off + n2])
    }

    /// The column `A(:, i, …, i) = A e_i^{d-1}`.
    pub fn column(&self, i: usize) -> DVector<f64> {
        let stride: usize = (1..self.order).map(|k| self.dim.pow(k as u32)).sum();
        let off = i * stride;
        DVector::from_column_slice(&self.values[off..off + self.dim])
    }

    /// `A Q^d = A ×_1 Qᵀ ×_2 Qᵀ ⋯ ×_d Qᵀ`, re-symmetrized.
    pub fn similarity_transform(&self, q: &DMatrix<f64>) -> Result<SymTensor> {
        Ok(self.similarity_transform_reporting(q)?.0)
    }

    /// Like [`SymTensor::similarity_transform`], also returning the largest
    /// entrywise asymmetry of the raw product before re-symmetrization.
    pub fn similarity_transform_reporting(&self, q: &DMatrix<f64>) -> Result<(SymTensor, f64)> {
        if q.nrows() != self.dim || q.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "similarity transform of a dimension-{} tensor by a {}x{} matrix",
                self.dim,
                q.nrows(),
                q.ncols()
            )));
        }
        let qt = q.transpose();
        let mut t = self.to_dense();
        for k in 0..self.order {
            t = t.kmode_product(&qt, k)?;
        }
        SymTensor::symmetrize_reporting(&t)
    }

    /// `A P^d` for a permutation matrix, by index relabeling (no arithmetic).
    pub fn apply_permutation(&self, perm: &Permutation) -> Result<SymTensor> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for a dimension-{} tensor",
                perm.len(),
                self.dim
            )));
        }
        let map = perm.as_slice();
        let mut idx = vec![0usize; self.order];
        let values = (0..self.values.len())
            .map(|off| {
                let mut rem = off;
                for slot in idx.iter_mut() {
                    *slot = map[rem % self.dim];
                    rem /= self.dim;
                }
                self.values[idx.iter().rev().fold(0, |acc, &i| acc * self.dim + i)]
            })
            .collect();
        Ok(SymTensor {
            order: self.order,
            dim: self.dim,
            values,
        })
    }
}
