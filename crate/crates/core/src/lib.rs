//! Banach-algebra unit balls in `C^k`: Pick bodies, Schur-ideal perps,
//! generated and hyperconvex balls, von Neumann inequality checks, and the
//! piecewise-rational envelope of a countable Schur ideal.

pub mod cli;
pub mod error;
pub mod generated;
pub mod matrix;
pub mod mobius;
pub mod nonsmooth;
pub mod oracle;
pub mod point;
pub mod schur;
pub mod vnn;

pub use error::{BallError, Result};
pub use matrix::{ComplexMatrix, HermitianMatrix};
pub use oracle::{BallOracle, Family, Membership};
pub use point::{c64, Point, C64};
