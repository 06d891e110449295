pub mod error;
pub mod euclid;
pub mod instance;
pub mod lab;
pub mod metric;
pub mod supnorm;
pub mod tree;
pub mod vector;

pub use error::{Error, Result};
