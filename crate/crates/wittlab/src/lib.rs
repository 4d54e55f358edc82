//! Numerical laboratory for Witten Laplacians and Morse gradient flows on
//! model surfaces.

pub mod critical;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod morse;
pub mod resonance;
pub mod whitney;
pub mod witten;
pub mod wkb;

pub use error::{Error, Result};
