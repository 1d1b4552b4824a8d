//! Discrete conformal factors with prescribed negative curvature.
//!
//! Given a closed triangulated surface of genus ≥ 2 with edge lengths `l` and
//! a negative background curvature κ per face, find the vertex function `u`
//! for which every vertex has zero angle defect on the rescaled surface
//! `u*l`. The curvature map is the gradient of a locally strictly convex
//! energy, so the solution is unique and Newton's method with the explicit
//! Hessian `D − Δ_η` finds it quickly.

pub mod calculus;
pub mod error;
pub mod geometry;
pub mod io;
pub mod jacobian;
pub mod linalg;
pub mod mesh;
mod par;
pub mod solver;
pub mod surfaces;

pub use error::{Error, Result};
pub use geometry::{ConformalFactor, EdgeLengths, FaceCurvature, VertexCurvature};
pub use mesh::{load_mesh, validate_topology, write_mesh, MeshFile, SurfaceMesh, TopologyReport};
pub use solver::{continuation_solve, newton_solve, ContinuationConfig, SolveConfig, SolveResult};

#[cfg(test)]
pub(crate) const TETRA_FIXTURE: &str = "DCPM 1
v 4
e 0 0 1 1.0
e 1 0 2 1.0
e 2 0 3 1.0
e 3 1 2 1.0
e 4 1 3 1.0
e 5 2 3 1.0
f 0 +0 +3 -1
f 1 +1 +5 -2
f 2 +2 -4 -0
f 3 -3 +4 -5
";
