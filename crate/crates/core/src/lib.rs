//! Multi-photon stimulated Raman transitions between Zeeman sublevels of a
//! metastable fine-structure manifold.
//!
//! Units: ħ = 1, every frequency and energy is an angular frequency in rad/s,
//! times are in seconds, powers in watts and lengths in metres. Conversion to
//! Hz happens only at I/O boundaries.

pub mod calibrate;
pub mod dynamics;
pub mod error;
pub mod kv;
pub mod linalg;
pub mod manifold;
pub mod noise;
pub mod pathways;
pub mod presets;
pub mod stark;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
