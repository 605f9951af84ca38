//! Rapid state preparation of a continuously monitored qubit by Markovian
//! feedback: closed-form curves, numerical oracles and threshold analysis.

// Guards such as `!(x > 0.0)` are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod analytic;
pub mod engines;
pub mod error;
pub mod io;
pub mod model;
pub mod special;
pub mod validation;

pub use analytic::Curve;
pub use engines::{EnsembleSummary, SmeConfig, TrajectoryRecord};
pub use error::{Result, RspError};
pub use model::{
    BenchmarkConvention, BlochVector, DensityOperator, FeedbackLaw, Scenario, ScenarioParams,
};
