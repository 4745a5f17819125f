//! Relativistic Enskog equation for a hard-sphere gas near vacuum.
//!
//! The crate evaluates the relativistic Enskog collision operator in the
//! free-streaming ("sharp") frame `f#(t, x, p) = f(t, x + t p/p0, p)` and
//! builds the global mild solution by Picard iteration of
//!
//! ```text
//! J(f#)(t) = f0 + ∫_0^t Q(f)#(τ) dτ
//! ```
//!
//! in the weighted supremum norm `sup |f#| / m(x, p)`.
//!
//! Layout:
//!
//! - [`kinematics`]: elastic two-body collision geometry (invariants, S+², post-collision momenta).
//! - [`kernel`]: collision kernel `B`, weight `m`, geometric factor `Y`.
//! - [`lattice`]: truncated 6-D grid, multilinear interpolation, quadrature rules, norm, I/O.
//! - [`operator`]: gain/loss operators, space density, collision-frequency functionals, Monte Carlo estimator.
//! - [`solver`]: the map `J`, Picard iteration, smallness threshold, contraction and positivity checks.
//! - [`hypotheses`]: measured kernel constant `K` and the vacuity check for the older smallness conditions.
//! - [`config`] / [`cli`]: scenario files and the `enskog` command line tool.
//!
//! Runnable walkthroughs live in `examples/` (`cargo run --release --example <name>`).

pub mod cli;
pub mod config;
pub mod error;
pub mod hypotheses;
pub mod kernel;
pub mod kinematics;
pub mod lattice;
pub mod operator;
pub mod solver;

pub use error::{Error, Result};
pub use kinematics::{Momentum3, Vec3};
