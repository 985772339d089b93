//! Heat-kernel cochains on finite-dimensional spectral triples.
//!
//! The crate evaluates simplex expectations of heat-kernel regularized
//! operator products, builds the JLO cocycle from them, pairs it with
//! involutions (series and Gauss–Hermite forms), and sweeps deformation
//! families to check homotopy invariance. Split structures with a
//! distinguished derivation `d1 = [Q1, ·]` are supported alongside.
//!
//! Everything is dense and double precision; dimensions of a few dozen are
//! the intended scale. With the default `parallel` feature, tuple sums,
//! Monte-Carlo loops and quadrature nodes run on rayon; results are
//! reduced in a fixed order so both builds agree bit for bit.

pub mod acceptance;
pub mod cochain;
pub mod error;
pub mod exec;
pub mod expectations;
pub mod fixtures;
pub mod homotopy;
pub mod jlo;
pub mod linalg;
pub mod quadrature;
pub mod split;
pub mod triple;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
