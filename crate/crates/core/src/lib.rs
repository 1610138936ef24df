//! Lattice sums with certified truncation, and the lattice-shape questions
//! they answer.
//!
//! - [`lattice`], [`shells`]: lattices, duals, point enumeration by shells.
//! - [`special`]: theta and Epstein zeta functions.
//! - [`llog`]: the lattice logarithm, periodic sequences and two-lattice energies.
//! - [`eta`]: the Casimir integral `Delta_m`, the deformed eta function and the
//!   classical Dedekind eta.
//! - [`optimize`]: scans and local searches over two-dimensional shapes and
//!   one-dimensional periodic configurations.
//! - [`cli`]: the `lattc` command line.
//!
//! ```
//! use lattc::lattice::Lattice;
//! use lattc::llog::{log_lattice, LogArgument};
//!
//! let x = LogArgument::new(0.3).unwrap();
//! let v = log_lattice(&Lattice::integer(1), x, 1e-12).unwrap();
//! assert!((v.value - 0.3f64.ln()).abs() < 1e-10);
//! ```
//!
//! The guide in `book/` walks through each module; its snippets run as
//! doc-tests of this crate.

pub mod cli;
pub mod error;
pub mod eta;
pub mod lattice;
pub mod llog;
pub mod optimize;
pub mod quadrature;
pub mod sequence;
pub mod shells;
pub mod special;
pub mod sums;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/theta-zeta.md")]
    mod theta_zeta {}
    #[doc = include_str!("../../../book/src/logarithm.md")]
    mod logarithm {}
    #[doc = include_str!("../../../book/src/eta.md")]
    mod eta {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/observations.md")]
    mod observations {}
}
