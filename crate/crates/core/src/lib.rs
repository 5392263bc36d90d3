pub mod error;
pub mod field;
pub mod geometry;
pub mod width;
pub mod builder;
pub mod analysis;
pub mod acceptance;
pub mod cli;

pub use error::{Error, Result};
