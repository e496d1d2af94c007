//! Multivariate quantum reservoir computing.
//!
//! Two driven, dissipative reservoirs (a spin network and a network of
//! coupled oscillators), three ways of spreading a multivariate input over
//! their nodes, and the measures used to compare them: mixing memory
//! capacity, forecasting error on the Lorenz system, and entanglement and
//! squeezing of the reservoir state.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cv;
pub mod dv;
pub mod encoding;
mod error;
pub mod hyperopt;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod props;
pub mod readout;
pub mod reservoir;
pub mod table;
pub mod tasks;

pub use encoding::{EncodingMethod, EncodingSpec};
pub use error::{Error, Result};
pub use reservoir::{AnyReservoir, Hyperparams, Reservoir, ReservoirSpec, SystemKind};
pub use table::Table;
