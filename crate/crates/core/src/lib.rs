//! Sticky random Kakeya sets in the M-adic model.
//!
//! Directions come from a finite-depth Cantor construction pushed through a
//! curve, tubes are rooted at the cubes of an M-adic grid, and the slope of
//! each tube is chosen by a sticky random map driven by fair coin flips on
//! the edges of the M-adic tree.

pub mod cantor;
pub mod config_prob;
pub mod error;
pub mod percolation;
pub mod poss;
pub mod scalar;
pub mod sticky;
pub mod tree;
pub mod tube;
pub mod union;

pub use num_rational::BigRational;

pub use cantor::{CantorSpec, Direction, DirectionCurve, DirectionSet, Selector};
pub use error::{KakeyaError, Result};
pub use scalar::Scalar;
pub use tree::Vertex;

/// Exact rational scalar.
pub type Exact = BigRational;
/// Double precision tube.
pub type TubeF64 = tube::Tube<f64>;
/// Exact tube.
pub type TubeExact = tube::Tube<Exact>;
/// Single precision tube.
pub type TubeF32 = tube::Tube<f32>;
