//! Numerical core for conformalized quantum-orthogonal DeepONet ensembles.
//!
//! Everything here is `no_std` (with `alloc`): exact unary-subspace simulation of
//! RBS circuits, a brute-force full-register simulator used as an oracle and as the
//! substrate of the noise engine, angle-parameterized orthogonal networks with an
//! analytic backward pass, DeepONet training, ensemble execution (independent,
//! hybrid, superposed), split-conformal calibration, and synthetic benchmark
//! generation. IO, configuration and the command line live in the `cqdon` crate.
#![no_std]

extern crate alloc;

pub mod conformal;
pub mod data;
pub mod datagen;
pub mod ensemble;
mod error;
pub mod fullstate;
pub mod linalg;
pub mod noise;
pub mod operator;
pub mod qonn;
pub mod rng;
pub mod unary;

pub use error::{Error, Result};
