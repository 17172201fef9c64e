//! Meshfree simulation core: converts two-phase grayscale micrographs into a
//! reproducing-kernel discretization via SVM classification and simulates
//! coupled bulk brittle fracture (strain-driven phase field) and interfacial
//! decohesion (smeared exponential cohesive zone) under quasi-static loading.
//!
//! The crate is `no_std`-compatible (with `alloc`); all file IO, configuration
//! and export formats live in the companion `imrk` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod discretization;
pub mod imaging;
pub mod material;
pub mod math;
pub mod rk;
pub mod score;
pub mod svm;

pub use error::{Error, Result};
