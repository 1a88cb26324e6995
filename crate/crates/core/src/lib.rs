//! Brownian motion in Weyl chambers: exact laws, simulation and related special functions.

pub mod acceptance;
pub mod chamber;
pub mod cli;
pub mod error;
pub mod expsum;
pub mod gmc;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod quad;
pub mod roots;
pub mod sim;
pub mod special;
pub mod stats;
pub mod toda;
pub mod whittaker;

pub use error::{Error, Result};
