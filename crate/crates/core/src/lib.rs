//! Plane-strain finite-element solver for elastic bodies whose moduli depend
//! linearly on density, with Newton iteration, crack-tip post-processing and
//! a manufactured-solution convergence check.

// `!(x <= tol)` rejects NaN on purpose; element loops index several arrays
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod postproc;
pub mod runner;
pub mod solver;
pub mod verify;
pub mod vtk;

pub use error::{Error, Result};
