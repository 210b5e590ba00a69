//! Numerical kernels: root finding, cube completion, quad propagation, rank and quadrature.

pub mod cube;
pub mod propagate;
pub mod quadrature;
pub mod rank;
pub mod root;

use thiserror::Error;

use crate::forms::FormError;
use crate::lattice::{CubeLabel, LatticeError};
use crate::models::ModelError;

pub use cube::{
    complete_cube, corner_jacobian, general_corner_jacobian, solve_targets, solve_with_octahedron,
    AssembledCorners, CatalogCorners, CornerSystem, CubeEquation, CubeSolution, ScanConfig,
};
pub use propagate::{propagate_box, propagate_quad, AxesData, BoxSolution, QuadCube};
pub use root::{root_1d, RootConfig, RootError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("no admissible root for {target} from {equation}")]
    NoRoot { equation: String, target: CubeLabel },
    #[error("cannot order the equations: {0}")]
    Plan(String),
    #[error("corner residual at {label} is {residual:e} after completion")]
    Inconsistent { label: CubeLabel, residual: f64 },
    #[error("singular face solve at {at}: {reason}")]
    Singular { at: String, reason: String },
    #[error("invalid input: {0}")]
    Input(String),
}
