//! Spacelike graphs of prescribed mean curvature in Minkowski 3-space with
//! a conelike isolated singularity.
//!
//! The pipeline: a nowhere-vanishing periodic height function `A(u)`
//! defines a limit null curve; [`solver::march`] integrates the conformal
//! Cauchy problem off that curve; [`analysis`] recovers the Gauss map,
//! curvature and the canonical height function from a surface patch; and
//! [`graph`] rebuilds the Euclidean graph `z = z(x, y)` and checks the
//! mean curvature equation on it.

pub mod analysis;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod graph;
pub mod lorentz;
pub mod radial;
pub mod solver;
pub mod spectral;
pub mod stencil;

pub use curvature::{CurvatureKind, PrescribedCurvature};
pub use error::{Error, Result};
pub use lorentz::{CausalClass, LVec3};
pub use solver::{march, Cone, NullCurveSpec, SolverConfig, SurfacePatch};
pub use spectral::PeriodicField;
