pub mod analysis;
pub mod assembly;
pub mod error;
pub mod femspace;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod refspace;
pub mod solver;

pub use error::{Error, Result};
