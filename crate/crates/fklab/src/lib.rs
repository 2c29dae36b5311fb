//! Numerical laboratory for generalized Frenkel-Kontorova models on
//! d-dimensional lattices: hull functions, the Percival Lagrangian and its
//! minimization over the monotone cone, a variational destruction criterion
//! for invariant tori, and finite-box lattice cross-checks.
//!
//! The model family of interest is a sum of nearest-neighbor springs and a
//! periodic on-site bump of height 1/n supported on a ball of radius
//! n^{-1/r}. Minimizing hulls stay continuous for r > 1 and develop gaps
//! (torus destruction) for r < 1; the `criterion` module quantifies the
//! competition between potential gain and transport cost that decides this.

pub mod accept;
pub mod cli;
pub mod criterion;
pub mod error;
pub mod hull;
pub mod lattice;
pub mod model;
pub mod percival;

pub use error::{Error, Result};
pub use hull::HullFunction;
pub use model::{Model, Potential, RotationVector};
pub use percival::{minimize_percival, percival_value, MinimizeParams, MinimizeResult};
