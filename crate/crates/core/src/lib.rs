//! Compressive acquisition and analysis of grayscale images.
//!
//! Images are transformed with a periodized Daubechies wavelet transform,
//! measured by a seeded binary sensing operator, and then either classified
//! directly from the measurements or recovered by basis pursuit.
//!
//! The crate is `no_std` with `alloc`; file formats, the experiment pipeline
//! and the CLI live in the `hushcam` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classify;
pub mod dataset;
mod error;
pub mod image;
mod math;
pub mod matrix;
pub mod recover;
pub mod rng;
pub mod sensing;
pub mod wavelet;

pub use error::{Error, Result};
pub use image::{preprocess, Image};
pub use matrix::Matrix;
