//! Gromov-Wasserstein and sliced Gromov-Wasserstein distances, a small
//! reverse-mode differentiation engine, and an adversarial + SGW
//! domain-adaptation trainer built on top of them.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and
//! the command-line front end live in the `slicegw` companion crate.
//!
//! Module map:
//!
//! - [`geometry`]: point clouds, squared-Euclidean cost matrices, random
//!   projection directions.
//! - [`ot`]: the GW objective, an exhaustive permutation oracle, the
//!   sorted 1D solver, SGW and a sliced-Wasserstein baseline.
//! - [`autodiff`]: tensors, a tape-style graph, losses and optimizers.
//! - [`model`]: the extractor / classifier / discriminator bundle.
//! - [`data`]: labeled datasets and synthetic shifted-Gaussian tasks.
//! - [`adapt`]: the training step, evaluation and epoch loop.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adapt;
pub mod autodiff;
pub mod data;
mod error;
pub mod geometry;
pub mod model;
pub mod ot;
pub mod rng;

pub use error::{Error, Result};
