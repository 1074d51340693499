pub mod error;
pub mod filtering;
pub mod geometry;
pub mod grid;
pub mod kernel;

pub use error::{Error, Result};
pub mod analysis;
pub mod case;
pub mod config;
pub mod io;
pub mod poisson;
pub mod sfs;
pub mod solver;
pub mod studies;
pub mod surface;
