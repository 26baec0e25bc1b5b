//! Generalized asymptotic equipartition toolkit for lossy compression and
//! approximate pattern matching.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: alphabets, distributions, distortion measures, seeded sources.
//! * [`ratefn`]: log-MGFs, the dual root λ*, R₁(P,Q,D), Blahut–Arimoto R(D).
//! * [`ballprob`]: exact and Monte Carlo distortion-ball probabilities.
//! * [`codec`]: Elias-delta bitstreams, random and universal codebooks.
//! * [`matching`]: waiting times, match lengths and lattice searches.
//! * [`experiment`], [`stats`], [`config`]: the experiment runner behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod model;
pub mod ratefn;
pub mod ballprob;
pub mod codec;
pub mod matching;
pub mod stats;
pub mod config;
pub mod experiment;

pub use error::{Error, Result};
