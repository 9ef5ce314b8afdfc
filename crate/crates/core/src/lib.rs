pub mod catalog;
pub mod compiler;
pub mod error;
pub mod kernel;
pub mod normalizer;
mod layer;
pub mod parser;
pub mod router;

pub use error::{Error, ErrorClass, Result};
pub use layer::{LayerOptions, SirLayer, StatementResult};
