pub mod asymptotics;
pub mod birman_schwinger;
pub mod error;
pub mod friedrichs;
pub mod gauss;
pub mod lattice;
pub mod oracle;
mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
