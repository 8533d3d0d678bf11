pub mod error;
pub mod hilbert;
pub mod model;
pub mod dynamics;
pub mod network;
pub mod detection;
pub mod protocol;
pub mod analysis;
pub mod validate;

pub use error::{Error, Result};
