pub mod encoder;
pub mod error;
pub mod matrix;
pub mod objective;
pub mod pools;
pub mod search;
pub mod sim;

pub use error::{Error, Result};
pub use matrix::Matrix;
