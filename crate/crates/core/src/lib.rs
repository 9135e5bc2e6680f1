pub mod complex;
pub mod curve;
pub mod doc;
pub mod error;
pub mod fan;
pub mod fixtures;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod surface;

pub use error::{Error, Result};
