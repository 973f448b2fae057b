//! Critical site percolation on the triangular lattice.

pub mod arms;
pub mod ghtool;
pub mod harness;
pub mod lattice;
pub mod measures;
pub mod metrics;
pub mod normalizer;
pub mod percolation;
pub mod resistance;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use lattice::{Annulus, LatticeBox, Side, TriCoord};
pub use percolation::{Color, Configuration};

/// Scalar used for production resistance, walk and metric computations.
pub type Real = f64;
/// Exact scalar for oracle computations in tests.
pub type Exact = num_rational::BigRational;
