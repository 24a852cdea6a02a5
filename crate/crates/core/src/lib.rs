//! Simulator for the two-user binary fading interference channel with local
//! delayed channel state at the transmitters.

pub mod channel;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod multicast;
pub mod protocol;
pub mod regions;

pub use error::{Error, Result};
