//! Real Z-eigenpairs of real symmetric tensors.
//!
//! The crate provides dense symmetric tensor storage with the multilinear
//! kernels ([`tensor`]), eigenpair bookkeeping ([`spectra`]), the shifted QR
//! iteration for symmetric tensors ([`qrst`]) and its permuted variant
//! ([`pqrst`]), shifted higher-order power methods ([`hopm`]), a multistart
//! Newton enumerator used as ground truth on small problems ([`oracle`]),
//! file formats ([`io`]) and the Example-1 reproduction harness
//! ([`reproduce`]).

pub mod config;
pub mod error;
pub mod hopm;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pqrst;
pub mod qrst;
pub mod random;
pub mod reproduce;
pub mod spectra;
pub mod tensor;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use spectra::{EigenSet, Eigenpair, Stability};
pub use tensor::{DenseTensor, Permutation, SymTensor};
