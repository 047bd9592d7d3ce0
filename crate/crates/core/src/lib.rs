//! Distributional similarity testing for planar random sets observed as
//! binary images.
//!
//! The pipeline: decode an image ([`imagery`]), extract connected
//! components, summarize each component by its perimeter/area ratio and the
//! histogram of disc occupancy values along its boundary ([`descriptors`]),
//! then compare two samples of such descriptors with N-distance permutation
//! tests run jointly over both channels ([`permtest`], [`ndist`]). Seeded
//! simulators for several random-set models live in [`models`].
//!
//! All randomness flows from explicit seeds through counter-indexed RNG
//! streams ([`rng`]), so every result is reproducible regardless of thread
//! count.

pub mod descriptors;
pub mod error;
pub mod imagery;
pub mod models;
pub mod ndist;
pub mod permtest;
pub mod rng;

pub use error::{Error, Result};
