//! Numerical laboratory for relative Reshetikhin–Turaev invariants of p/q
//! fillings of the figure-eight knot, the cone geometry of the filled
//! manifolds, and the Poisson/Fourier route to their asymptotics.

pub mod bigc;
pub mod cfrac;
pub mod error;
pub mod fourier;
pub mod geom;
pub mod qinv;
pub mod quad;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use specfun::{PrecisionMode, C64};
