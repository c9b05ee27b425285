//! Constructive exact discretization at desk scale.
//!
//! Every measure is a finite point/weight list, so every existence statement
//! this crate realizes (non-negative quadrature, positive functional
//! discretization, even-`p` Marcinkiewicz–Zygmund equalities, Parseval
//! scaling of finite frames) can be checked to floating-point precision.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
mod linalg;
mod scalar;

pub mod caratheodory;
pub mod cones;
pub mod dopt;
pub mod frames;
pub mod measures;
pub mod mz;
pub mod systems;
pub mod tchakaloff;
pub mod widths;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, MomentVector, PointList};
pub use scalar::{Field, Scalar, C64};
pub use systems::{EvaluationMatrix, FunctionSystem};
pub use tchakaloff::{QuadratureRule, WeightClass, Weights};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default relative threshold below which a reduced weight counts as zero.
pub const DEFAULT_WEIGHT_TOL: f64 = 1e-12;
/// Default relative feasibility tolerance for cone membership.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;
