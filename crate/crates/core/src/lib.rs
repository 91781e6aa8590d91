//! Genus-zero super Riemann surface moduli, computationally.
//!
//! The crate is organised bottom-up:
//!
//! - [`grassmann`]: arithmetic in the complexified Grassmann algebra `Λ_s`.
//! - [`superlinalg`]: graded matrices over `Λ_s`, translation actions and
//!   the standard rank form.
//! - [`superconf`]: points of `ℙ^{1|1}`, the group `SpGL(2|1)` and the
//!   three-point solver.
//! - [`trees`]: stable labeled trees.
//! - [`moduli`]: nodal supercurves, equivalence, dimension formulas,
//!   stable-map bookkeeping and the Gromov convergence checker.
//! - [`geodesics`]: super geodesics with `Λ_s`-valued state.

#![allow(clippy::needless_range_loop)]

pub mod geodesics;
pub mod grassmann;
pub mod moduli;
pub mod superconf;
pub mod superlinalg;
pub mod trees;

pub use grassmann::{Complex, GrassmannError, GrassmannNumber, Parity, SDim};
