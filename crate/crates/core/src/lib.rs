//! Desk-scale laboratory for shallow-depth linear-optical circuits.
//!
//! The crate is `no_std` and only needs an allocator. It provides:
//!
//! * dense complex linear algebra, Haar sampling and 2×2 eigendecomposition ([`linalg`]),
//! * butterfly / inverse butterfly / Kaleidoscope gate layouts ([`architecture`]),
//! * Beneš routing of permutations and grid-circuit embeddings ([`routing`]),
//! * permanents, hafnians and exact output probabilities ([`probability`]),
//! * exact samplers, random ensembles and collision statistics ([`sampling`]),
//! * the Cayley path, its denominator polynomial and the interpolation pipeline ([`cayley`]),
//! * stochastic photon loss ([`noise`]) and squeezed-state embeddings ([`gbs`]).
//!
//! IO, CLI and file formats live in the companion `bosonlab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod architecture;
pub mod cayley;
pub mod error;
pub mod exact;
pub mod fock;
pub mod gbs;
pub mod interp;
pub mod linalg;
pub mod noise;
pub mod probability;
pub mod rng;
pub mod routing;
pub mod sampling;

pub use architecture::{ArchLabel, Architecture, Circuit, GatePlacement};
pub use error::{Error, Result};
pub use linalg::{CMatrix, ComplexUnitary, Eigen2, Gate2};
pub use probability::{GbsParams, OutcomeConfig};
pub use rng::RngHandle;
pub use routing::Permutation;

pub use num_complex::Complex64;
