//! Small-deviation rate functions and Chung-type LIL norming functions for
//! Lévy processes, with a Monte Carlo harness that checks them.

pub mod conditions;
pub mod config;
pub mod error;
pub mod io;
pub mod measure;
pub mod model;
pub mod quadrature;
pub mod norming;
pub mod rate;
pub mod rng;
pub mod simulate;
pub mod theta;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use model::LevyModel;
