pub mod cli;
pub mod envs;
pub mod error;
pub mod experts;
pub mod io;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
