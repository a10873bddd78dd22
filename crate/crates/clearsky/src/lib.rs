//! File formats, embedded reference data, table caching, image output and
//! the command-line front end around `clearsky-core`.

pub mod cache;
pub mod cli;
pub mod data;
pub mod error;
pub mod formats;
pub mod image;
pub mod registry;
pub mod report;
pub mod tables;
pub mod text;

pub use error::{AppError, AppResult};
