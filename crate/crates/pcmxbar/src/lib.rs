//! Host-side tooling around `pcmxbar-core`: MNIST ingestion, binary and CSV
//! file formats, run configuration, a reference trainer and the `pcmxbar`
//! command-line tool.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binfmt;
pub mod cli;
pub mod config;
pub mod error;
pub mod idx;
pub mod model;
pub mod tracestore;
pub mod train;
