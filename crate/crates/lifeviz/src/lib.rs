pub mod error;
pub mod gradcheck;
pub mod life;
pub mod tensor;

pub use error::{Error, Result};
pub mod metric;
pub mod model;
pub mod train;
pub mod harness;
