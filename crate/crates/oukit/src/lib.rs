//! Numerical toolkit for complex Ornstein-Uhlenbeck systems
//!
//! This crate evaluates the explicit heat-kernel matrix of the operator
//!
//! ```text
//! [L v](x) = A Δv(x) + <Sx, ∇v(x)> - B v(x),    x ∈ ℝ^d,  d ≥ 2,
//! ```
//!
//! for simultaneously diagonalizable `A, B ∈ ℂ^{N×N}` with `Re σ(A) > 0` and a
//! skew-symmetric drift matrix `S ∈ ℝ^{d×d}`. On top of the kernel it provides
//!
//! * the associated semigroup `T(t)` and resolvent `R(λ)` applied by quadrature,
//! * every bound constant `C1..C8` together with the growth pair `(M, ω)`,
//! * weight-function families of exponential growth rate with their axioms as
//!   executable checks, and weighted `L^p` / sup norms on grid functions,
//! * verification suites that test the kernel identities, moment formulas,
//!   semigroup laws, boundedness and resolvent estimates numerically and emit
//!   machine-readable pass/fail records.
//!
//! Start with [`linalg::validate_system`] to build an [`linalg::OUSystem`], then
//! use the [`kernel`] and [`semigroup`] modules, or run a whole suite through
//! [`suites`]. A narrative guide with runnable examples lives in the `book/`
//! directory of the repository; its chapters double as doc-tests here.

// index-heavy numerics: parallel-array loops and NaN-rejecting `!(x > y)`
// comparisons are deliberate throughout
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod quad;
pub mod report;
pub mod semigroup;
pub mod special;
pub mod suites;
pub mod weights;

mod dense;
mod guide;

pub use error::{Error, Result};
pub use linalg::{OUSystem, SpectralQuantities};
