//! Relation-discovery GANs on two-dimensional Gaussian-mixture domains.
//!
//! This crate holds the pure numerical parts: a small reverse-mode gradient
//! engine for sequential MLPs, the toy domains, the three model variants
//! (standard GAN, GAN with reconstruction, DiscoGAN), the training loop and
//! the mode-coverage metrics. It builds without `std`; file formats and the
//! command line live in the `disco` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod domains;
mod error;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod numgrad;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::Rng;
