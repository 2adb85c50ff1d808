//! Constrained equilibrium measures of the Ginibre rate functional.
//!
//! The minimizer of `ℐ[μ] = −∬ log|x−y| dμ dμ + ∫ |x|² dμ` under the
//! constraint `μ(Ū) ≥ p` is computed through its potential `H`, which solves
//! an obstacle problem with a piecewise quadratic obstacle carrying two
//! constants `c₁ > c₂`. The crate solves that problem on a grid, calibrates the
//! constants, splits the resulting measure into its area and boundary parts and
//! checks the structural properties of the minimizer.
//!
//! Every numerical module is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the solver tolerances assume.

pub mod app;
pub mod error;
pub mod extraction;
pub mod geometry;
pub mod grid;
pub mod halfspace;
pub mod obstacle;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point<f64>;
pub type Region = geometry::Region<f64>;
pub type BoundarySample = geometry::BoundarySample<f64>;
pub type Grid2D = grid::Grid2D<f64>;
pub type ScalarField = grid::ScalarField<f64>;
pub type DiscreteMeasure = potential::DiscreteMeasure<f64>;
pub type ObstacleSpec = obstacle::ObstacleSpec<f64>;
pub type VISolveResult = obstacle::VISolveResult<f64>;
pub type Calibration = obstacle::Calibration<f64>;
pub type ExtractedMeasure = extraction::ExtractedMeasure<f64>;
pub type SimplexMeasure = oracle::SimplexMeasure<f64>;
pub use extraction::PropertyReport;
