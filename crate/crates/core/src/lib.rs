//! Random geometric graphs and 2-dimensional complexes on the unit sphere.
//!
//! The crate samples `n` uniform points on S^{d-1}, joins pairs whose inner
//! product clears a threshold `tau`, fills in triangles, and measures the
//! spectra of the resulting links and 1-skeleton. Supporting modules
//! simulate cap walks and spherical Brownian motion, enumerate closed-walk
//! shapes for trace-method counting, and analyze the shell-conditioned
//! expected adjacency of a link.

// `!(x > 0.0)` style guards are deliberate: NaN must be rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capwalk;
pub mod complex;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod shell;
pub mod spectral;
pub mod sphere;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
