//! Link-level building blocks for a NOMA-assisted OTFS integrated sensing and
//! communication link between a UAV and a pair of ground users.
//!
//! The crate is organised along the signal path: delay-Doppler framing
//! ([`dd_signal`]), planar-array steering ([`array`]), the multipath channel
//! ([`channel`]), radar parameter extraction ([`sensing`]), user motion
//! ([`motion`]) and the two-user power allocator ([`noma`]).

pub mod array;
pub mod channel;
pub mod dd_signal;
pub mod error;
pub mod motion;
pub mod noma;
pub mod sensing;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
