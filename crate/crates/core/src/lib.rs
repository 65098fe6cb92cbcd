//! Computational toolkit for three-term translation-invariant equations
//! `T1 a1 + T2 a2 + T3 a3 = 0` over finite abelian groups, with automorphism
//! coefficients.
//!
//! The crate provides exact group and character arithmetic, FFT-backed
//! Fourier analysis, Bohr-set algebra, solution counting, a desk-scale
//! density-increment engine, and the lattice embedding used to transfer
//! integer-matrix equations on `Z^d` (including similar-triangle problems)
//! into finite groups.

pub mod bohr;
pub mod counting;
pub mod endo;
pub mod error;
pub mod fourier;
pub mod group;
pub mod increment;
pub mod lattice;
pub mod search;

pub use error::{Error, Result};
