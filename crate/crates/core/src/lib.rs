//! Manifold-valued ROF / Mosolov denoising.
//!
//! Discrete total-variation energies for maps from 1-D and 2-D grids into a
//! Riemannian target (flat space, spheres, hyperbolic space, SPD matrices),
//! a preconditioned Riemannian descent solver with `eps / sigma / delta`
//! continuation, exact and brute-force oracles, and executable checks of the
//! structural properties of the model (range invariance under the ball
//! retraction, geodesic convexity on non-positively curved targets,
//! ellipticity of the regularized system, Lipschitz stability).
//!
//! Everything numerical is generic over [`Real`] (`f32` / `f64`); the `*64`
//! aliases below fix `f64`, which is what the CLI and file formats use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod domain;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use domain::{lipschitz_constant, Edge, Field, Grid, GridKind, RhoPreset};
pub use energy::{el_residual, energy, riemannian_gradient, EnergyBreakdown, EnergyParams};
pub use error::{Error, Result};
pub use geometry::{barycenter, geodesic_homotopy, mollify, retract_into_ball, Kernel, WeightedPoints};
pub use manifold::{comparison, Comparison, Manifold, ManifoldKind, Point, Tangent};
pub use oracle::{brute_force_small, taut_string_1d, OracleResult};
pub use scalar::Real;
pub use solver::{continuation, default_schedule, minimize, SolveConfig, SolveFlags, SolveReport, Stage};
pub use verify::{CaseMargin, StudyReport};

pub type Manifold64 = Manifold<f64>;
pub type Point64 = Point<f64>;
pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type EnergyParams64 = EnergyParams<f64>;
