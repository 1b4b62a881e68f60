pub mod cli;
pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
pub mod profile;
pub mod saddle;
pub mod spectrum;
pub mod stationary;
pub mod validate;
mod tridiag;

pub use error::{Error, Result};
pub use grid::Grid;
pub use profile::Profile;
