pub mod error;
pub mod haar;
pub mod lattice;
pub mod laurent;
pub mod lp;
pub mod projection;
pub mod report;
pub mod repr;
mod scaled;
pub mod scaling;
pub mod spectrum;
pub mod torus;

pub use error::{Error, Result};
