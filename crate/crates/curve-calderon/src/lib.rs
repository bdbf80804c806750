pub mod data;
pub mod error;
pub mod estimates;
pub mod forward;
pub mod geometry;
pub mod inverse;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod report;
pub mod scenario;
pub mod stencil;

pub use error::{Error, Result};
