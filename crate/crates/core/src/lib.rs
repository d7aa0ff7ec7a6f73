//! Room-acoustics measurement analysis: impulse responses from sweeps,
//! octave-band decay parameters, indirect-method STI, ambient noise levels
//! and treatment sizing against usage targets.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod compliance;
pub mod decay;
pub mod noise;
pub mod sentinel;
pub mod signal;
pub mod sti;
pub mod synth;

pub use error::{Error, Result};
