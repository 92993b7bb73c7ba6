//! Quantum Lévy processes on *-bialgebras: noncommutative polynomial
//! algebras, bialgebra structures, finite-dimensional subcoalgebras and
//! convolution semigroups, Schürmann triples, Gram engines for the
//! convolution-product approximation, and a truncated Fock-space realization.

pub mod acceptance;
pub mod bialg;
pub mod constructions;
pub mod error;
pub mod fock;
pub mod gns;
pub mod gram;
pub mod linalg;
pub mod lincomb;
pub mod ncpoly;
pub mod partition;
pub mod subcoalg;

pub use error::{Error, Result};
pub use lincomb::{c64, LinComb, C64};

/// Version of the library, as recorded in experiment summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
