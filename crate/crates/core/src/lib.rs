//! Modelling of nonlinear dynamic systems with the discrete Urysohn
//! operator, and streaming identification of the operator from observed
//! input/output signals.
//!
//! The crate is organised around the identified object itself
//! ([`UrysohnModel`]): [`identify`] estimates it online by Kaczmarz-style
//! projections, [`analysis`] verifies structural claims (system rank,
//! non-uniqueness, minimum-norm convergence, describability, model-family
//! classification) and [`sim`] provides the nonlinear spring-mass benchmark
//! plant with its control generators and error metrics.

// Validation comparisons are written negated (`!(x > 0.0)`) so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod identify;
pub mod io;
pub mod model;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    flatten_multi_input, flatten_series, load_model, model_from_json, model_to_json,
    quantize_uniform, save_model, InterpolationStencil, ModelFile, UrysohnModel,
};
pub use series::{Prediction, SignalSeries};
