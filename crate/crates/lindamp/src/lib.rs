//! Numerical laboratory for linear inviscid damping of monotone shear flows
//! in a periodic channel.

pub mod analysis;
pub mod checks;
pub mod density;
pub mod error;
pub mod flow;
pub mod green;
pub mod grid;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod singularity;
pub mod stream;

pub use error::{Error, Result};
