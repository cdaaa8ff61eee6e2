//! Semantics-aware timely source coding.
//!
//! Builds optimal real codeword lengths for status-update systems under
//! nonlinear age penalties, realizes them as canonical prefix codes, and
//! validates the analytic formulas with a bufferless discrete-event
//! simulator and parameter-sweep harness.

pub mod codec;
pub mod error;
pub mod experiments;
pub mod lambertw;
pub mod optimizer;
pub mod probability;
pub mod simulator;
pub mod timeliness;
pub mod validate;

pub use error::{Error, Result};
pub use lambertw::lambert_w0;
pub use optimizer::{solve, CodewordSolution};
pub use probability::{SourcePmf, TruncatedSource};
pub use simulator::{SimConfig, SimStats};
pub use timeliness::{PenaltyCase, PenaltyConfig, QuadraticForm};
