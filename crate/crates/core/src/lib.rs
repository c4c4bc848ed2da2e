//! Exact-diagonalization Green's functions for a finite sample coupled to
//! finite thermal leads, together with the discrete Volterra operator algebra
//! needed to build self-energies and the current formulas built on top.
//!
//! Mode order is frozen crate-wide: sample sites first, then the sites of
//! lead 1, lead 2, and so on.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod fock;
pub mod greens;
pub mod linalg;
pub mod model;
pub mod selfenergy;
pub mod states;
pub mod transport;
pub mod volterra;

pub use error::{NegfError, Result};
pub use linalg::{CMatrix, CVector, C64};
