//! Isogeometric solver for insoluble surfactant spreading on thin liquid films.

// negated comparisons reject NaN; index loops mirror the quadrature formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod bspline;
pub mod config;
pub mod domain;
pub mod error;
pub mod linsolve;
pub mod model;
pub mod output;
pub mod postprocess;
pub mod runner;
pub mod scenarios;
pub mod timestepping;
pub mod verify;

pub use error::{Error, Result};
