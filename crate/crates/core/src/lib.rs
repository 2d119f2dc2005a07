pub mod blender;
pub mod bump;
pub mod cover;
pub mod error;
pub mod fiber;
pub mod globalization;
pub mod grassmann;
pub mod linalg;
pub mod pipeline;
pub mod serde_mat;
pub mod skew;
pub mod symplectic;

pub use error::{Error, Result};
