//! Class activation maps for a 1D CNN over semantically structured inputs
//! (packet bytes, fixed-layout feature tables), their per-class aggregation
//! into a two-indicator global explanation, and histogram drill-down.

pub mod aggregate;
pub mod cam;
pub mod dataset;
mod error;
pub mod glyph;
pub mod nn;
pub mod session;

pub use error::{Error, Result};
