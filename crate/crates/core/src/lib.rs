pub mod error;
pub mod geometry;
pub mod grassmann;
pub mod group_u;
pub mod linalg;
pub mod matrix_io;
pub mod oracle;
pub mod sample;
pub mod stiefel;
pub mod trials;
pub mod two_norm_space;

pub use error::{Error, Result};
