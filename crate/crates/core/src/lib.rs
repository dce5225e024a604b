//! Software emulation of phase-change-memory (PCM) crossbar arrays.
//!
//! The crate models a single PCM device as a programmed conductance that
//! decays by a power law and is read through a multiplicative 1/f noise
//! process. Devices are organised into crossbars that evaluate analog
//! matrix-vector products with chunked tree accumulation, and an adaptation
//! layer maps a two-layer perceptron onto one crossbar so that inference can
//! be replayed at arbitrary emulated times.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. With `std` it uses `rustfft` for the inverse transforms and
//! `rayon` to spread crossbar columns across worker threads; results do not
//! depend on the worker count.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod cell;
pub mod crossbar;
pub mod drift;
mod error;
mod fft;
pub mod fit;
pub mod inference;
pub mod mapping;
mod math;
pub mod matrix;
pub mod noise;
mod reduce;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Microsiemens × volts → amperes.
pub const MICRO: f64 = 1e-6;
