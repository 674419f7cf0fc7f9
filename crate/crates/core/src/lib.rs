//! Effective conductivity of a square-lattice composite with imperfect
//! (Kapitza-type) interface contact, computed by a periodic boundary-integral
//! solver, together with the dilute-limit coefficient and the tooling to
//! check the `εⁿ` scaling numerically.

pub mod cli_io;
pub mod effective;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod oracles;
pub mod potentials;
pub mod special;
pub mod transmission;

pub use error::{Error, Result};
