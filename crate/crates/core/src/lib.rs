//! Least-squares Petrov–Galerkin discretizations of three Friedrichs-type
//! systems (stationary advection, a Robin-type elliptic first-order system,
//! and the 1D acoustic wave equation in space–time), together with the
//! machinery that certifies their inf-sup constants, stability bounds and
//! integration-by-parts identities.
//!
//! The test space of every formulation is a tuple of weighted L² spaces, so
//! the supremum over test functions is a weighted residual norm. Minimizing
//! that norm over a conforming finite-element space gives an SPD system whose
//! smallest generalized eigenvalue against the solution-norm Gram matrix is
//! the squared discrete inf-sup constant.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advection;
pub mod assembly;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod fracnorm;
pub mod mesh;
pub mod problem;
pub mod quad_basis;
pub mod solver;
pub mod verify;
pub mod wave;

pub use error::{Error, ErrorKind, Result};
pub use expr::{Expr, Point};
pub use mesh::{BoundaryFacet, BoundaryTag, Rect, StructuredMesh2D};
pub use problem::{Problem, ProblemKind};
pub use quad_basis::{FeFunction, FeSpace, QuadRule};
pub use solver::{CsrMatrix, EigResult, SymMatrix};
