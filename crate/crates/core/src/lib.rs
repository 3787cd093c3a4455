//! Simulated prosthetic vision engine.

// `!(x > 0.0)` is used on purpose throughout validation: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod frames;
pub mod gaze;
pub mod pipeline;
pub mod raster;
pub mod retina;
pub mod rng;
pub mod temporal;
pub mod townsim;
