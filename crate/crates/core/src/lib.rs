pub mod error;
pub mod linalg;
pub mod su2;

pub use error::{Error, Result};
pub mod decoherence;
pub mod grid;
pub mod invariant;
pub mod model;
pub mod oracle;
pub mod phase;
