//! Exact arithmetic and numerics for the geometric side of a hybrid trace
//! formula over Hilbert modular groups of real quadratic fields.

pub mod error;
pub mod interval;
pub mod qfield;
pub mod relorder;
pub mod forms;
pub mod ledger;
pub mod transforms;
pub mod stats;
pub mod traceform;

pub use error::{HtlError, Result};
