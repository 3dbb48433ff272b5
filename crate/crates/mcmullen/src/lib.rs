//! Numerical toolkit for the one-parameter family
//!
//! ```text
//!     f_lambda(z) = z^n + lambda / z^n,      n >= 3,  lambda != 0,
//! ```
//!
//! covering both the dynamical plane (escape basin, trap component around the
//! origin, Boettcher coordinate, external/internal rays, cut rays) and the
//! parameter plane (escape-level classification, uniformizations of the escape
//! regions, parameter rays, cusp solving, Sierpinski hole census, hyperbolic
//! component boundaries).
//!
//! The crate is organized so that everything numeric funnels through a small
//! number of carefully tested primitives: orbit iteration with a sound escape
//! radius ([`map`]), exact rational angle arithmetic ([`angle`]), and a
//! branch-tracked logarithm of the Boettcher coordinate ([`boettcher`]).

pub mod angle;
pub mod boettcher;
pub mod classify;
pub mod cutray;
pub mod error;
pub mod map;
pub mod param;
pub mod ray;
pub mod verify;

mod zpoly;

pub use error::{Error, Result};
pub use map::MapParams;
