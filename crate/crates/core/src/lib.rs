//! Extremum seeking through a distributed wave actuator.
//!
//! The plant input is the spatial integral of a wave-equation state driven
//! at one boundary. A backstepping boundary controller, fed by
//! demodulated gradient and Hessian estimates, steers that input to the
//! optimizer of an unknown quadratic map.

pub mod backstepping;
pub mod config;
pub mod controller;
pub mod error;
pub mod io;
pub mod probing;
pub mod simulation;
pub mod static_map;
pub mod sweep;
pub mod verify;
pub mod wave_field;

pub use error::{Error, Result};
