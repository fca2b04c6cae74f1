//! Stochastic thermodynamics of a driven optical cavity under continuous
//! homodyne measurement: estimate-process simulation, work statistics,
//! Crooks-ratio fits, entropy production and Fisher-information bounds.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod figures;
pub mod io;
pub mod model;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};
