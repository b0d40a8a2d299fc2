//! Periodic checkpointing under failures, with and without a fault predictor.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: platform, cost and predictor parameters, event-rate algebra,
//!   and the admissible period interval.
//! * [`analysis`]: closed-form waste expressions and optimal periods
//!   (Young, Daly, RFO, exact Exponential optimum, prediction-aware periods).
//! * [`tracegen`]: synthetic and log-based failure traces, prediction
//!   labeling, false-prediction streams, and the trace CSV format.
//! * [`simulator`]: discrete-event execution of a job under a checkpointing
//!   policy against a trace.
//! * [`search`]: brute-force search for the best fixed period.
//! * [`harness`]: experiment configuration, sweeps and CSV output.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod model;
pub mod search;
pub mod simulator;
pub mod tracegen;

pub use error::{Error, Result};
