//! Model-free adaptive vibration suppression of a cantilever beam.
//!
//! The crate is organised bottom-up:
//!
//! * [`beam_model`] builds the lumped-parameter cantilever (mass, stiffness
//!   and Rayleigh damping matrices, state space, sensor maps).
//! * [`rcac`] is the retrospective cost adaptive controller with its
//!   recursive least-squares coefficient update.
//! * [`filters`] holds the signal-conditioning filters that turn the sampled
//!   error into the performance variable.
//! * [`simulation`] runs the sampled-data loop: RK4 between controller ticks,
//!   zero-order-hold actuation and synchronous sampling.
//! * [`experiments`] computes attenuation metrics and spectra, runs sweeps and
//!   writes CSV output.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam_model;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod rcac;
pub mod simulation;

pub use error::{Error, Result};
