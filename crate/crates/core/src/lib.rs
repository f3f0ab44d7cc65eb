//! Maximum-entropy product distributions over the vertices of combinatorial
//! polytopes, and approximate counting through entropy maximization.

pub mod counter;
pub mod counting;
pub mod dual;
pub mod ellipsoid;
pub mod error;
pub mod family;
pub mod linalg;
pub mod sampler;
pub mod solver;

pub use error::{Error, Result};
