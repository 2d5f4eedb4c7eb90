//! Seeded generators. Every restart or draw gets its own ChaCha stream so
//! results do not depend on scheduling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{qr, QrSign};
use crate::tensor::{unique_entry_count, SymTensor};

/// Distribution of random starting vectors (normalized after drawing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StartDistribution {
    /// Componentwise uniform on `[0, 1]`.
    #[default]
    Uniform,
    /// Componentwise uniform on `[−1, 1]`.
    UniformSymmetric,
    /// Standard normal, i.e. uniform on the sphere.
    Normal,
}

/// Generator for stream `stream` of seed `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, n: usize, dist: StartDistribution) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| match dist {
            StartDistribution::Uniform => rng.random_range(0.0..=1.0),
            StartDistribution::UniformSymmetric => rng.random_range(-1.0..=1.0),
            StartDistribution::Normal => rng.sample::<f64, _>(StandardNormal),
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Start vector for restart `index`.
pub fn start_vector(n: usize, dist: StartDistribution, seed: u64, index: usize) -> DVector<f64> {
    random_unit_vector(&mut rng_for(seed, index as u64), n, dist)
}

/// Symmetric tensor with standard-normal unique entries.
pub fn random_symmetric(order: usize, dim: usize, seed: u64) -> Result<SymTensor> {
    let mut rng = rng_for(seed, 0);
    let entries: Vec<f64> = (0..unique_entry_count(order, dim))
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    SymTensor::from_unique_entries(order, dim, &entries)
}

/// Random orthogonal matrix (Q factor of a Gaussian matrix, nonnegative-R convention).
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    qr(&g, QrSign::NonNegativeDiagonal).0
}
