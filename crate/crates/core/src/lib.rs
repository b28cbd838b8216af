//! Differentiation of optimization problem solutions through their optimality
//! conditions.
//!
//! A solution `x*(θ)` is characterized as a root of a mapping `F(x, θ)` (or a
//! fixed point of `T(x, θ)`). Its Jacobian solves the linear system
//! `A J = B` with `A = -∂₁F` and `B = ∂₂F`. Both operators are only ever
//! accessed through Jacobian-vector products obtained by forward-mode dual
//! numbers, so the systems are solved with matrix-free Krylov methods.
//!
//! Module map:
//!
//! - [`linalg`]: dense storage, [`linalg::LinearMap`] and the Krylov solvers.
//! - [`autodiff`]: the [`autodiff::Scalar`] abstraction, dual numbers, JVPs/VJPs.
//! - [`implicit`]: root problems, Jacobian estimates and hypergradients.
//! - [`conditions`]: the catalog of optimality conditions.
//! - [`operators`]: projections, proximity operators and mirror maps.
//! - [`solvers`]: inner solvers, unrolled differentiation and the bi-level driver.
//! - [`bounds`]: Jacobian-error bounds and the closed-form ridge oracle.

pub mod autodiff;
pub mod bounds;
pub mod conditions;
mod error;
pub mod implicit;
pub mod linalg;
pub mod operators;
pub mod solvers;

pub use error::{Error, Result};
