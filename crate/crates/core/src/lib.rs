//! Joint optimization of the element positions and load reactances of a
//! three-dimensional reconfigurable intelligent surface (RIS) made of thin
//! half-wave dipoles, under a mutual-impedance channel model.
//!
//! The modules build on each other: [`specfun`] and [`impedance`] evaluate
//! dipole impedances, [`channel`] turns them into the end-to-end channel,
//! [`config_opt`] and [`shape_opt`] optimize loads and positions, and
//! [`baseline`] and [`analysis`] provide the comparison scheme and the
//! post-processing used by the [`cli`].

pub mod analysis;
pub mod baseline;
pub mod channel;
pub mod cli;
pub mod config_opt;
pub mod error;
pub mod geometry;
pub mod impedance;
pub mod io;
pub mod scenario;
pub mod shape_opt;
pub mod specfun;

pub use error::{Error, Result};
