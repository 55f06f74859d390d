//! Models of a distributed sensor network built from multipass Mach-Zehnder
//! interferometers fed by a shared squeezed vacuum and local coherent light.

pub mod error;
pub mod fock;
pub mod fsutil;
pub mod gaussian;
pub mod laws;
pub mod minimize;
pub mod network;
pub mod optimizer;
pub mod scenario;
pub mod trace;
pub mod units;
pub mod verify;

pub use error::{read_json, Error, Result};
pub use gaussian::{GaussianState, Quadrature};
