pub mod attention;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod models;
pub mod pzono;
pub mod reach;
pub mod sim;

pub use error::{Error, Result};
