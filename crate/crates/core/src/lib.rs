// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod metrics;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod stein;
pub mod support;

pub use density::{Density, Family, PearsonSpec, Side};
pub use error::{Result, SteinError};
pub use metrics::{Estimate, Kappa2Estimate, KappaEstimate};
pub use quadrature::{QuadResult, QuadratureSpec, Transform};
pub use report::{BoundReport, CheckKind};
pub use solver::{Observable, ObservableSpec, SteinSolution};
pub use stein::{SteinValue, TestFunction};
pub use support::Support;
