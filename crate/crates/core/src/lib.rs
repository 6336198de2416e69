//! Numerical core of the chaosae toolkit.
//!
//! Integrates the Rössler, Lorenz63 and Lorenz96 flows, turns a single
//! coordinate into normalized sliding windows, trains a sparse dense
//! autoencoder on those windows, counts the active latent nodes, and
//! estimates largest Lyapunov exponents from raw and reconstructed series.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `chaosae` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod datapipe;
pub mod dynamics;
mod error;
pub mod latent;
pub mod lyapunov;
mod math;
mod matrix;
pub mod nn;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
