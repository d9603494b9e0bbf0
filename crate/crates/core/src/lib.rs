//! Euler-type solver for Volterra integro-differential equations
//!
//! ```text
//! y⁽ⁿ⁾(x) = f(x, y) + ∫_{x₀}^{x} K dt,    n ∈ {1, 2, 3}
//! ```
//!
//! with Richardson-extrapolated error control. The integral is approximated
//! by the composite trapezium rule on the solver's own nodes, so a single
//! fixed-step grid yields a first-order solution; five nested grids combine
//! into solutions of order up to five, and the order-3 result drives a
//! stepsize rule that meets a requested tolerance.
//!
//! ```
//! use vide::problem::builtin;
//! use vide::richardson::{solve_tolerance, ErrorMode, ToleranceOptions};
//!
//! let spec = builtin(7).unwrap(); // y' = 3x² − x⁴/3 + ∫ x t² dt, y = x³
//! let (solution, report) =
//!     solve_tolerance(&spec, 1e-6, ErrorMode::Absolute, &ToleranceOptions::default()).unwrap();
//! let end = solution.grid.steps;
//! assert!((solution.values[0][end] - 1.0).abs() < 1e-6);
//! assert!(report.error_estimate <= 1e-6);
//! ```
//!
//! Modules:
//! - [`expr`]: expression language for problem definitions
//! - [`problem`]: problem model, file format, built-in catalog
//! - [`solver`]: single-grid stepper
//! - [`richardson`]: extrapolation and tolerance control
//! - [`transform`]: mapping arbitrary intervals onto `[0, 1]`

pub mod expr;
pub mod problem;
pub mod richardson;
pub mod solver;
pub mod sum;
pub mod transform;

pub use problem::{builtin, load, ProblemSpec};
pub use richardson::{solve_tolerance, ErrorMode, ToleranceOptions, ToleranceReport};
pub use solver::{solve_grid, Grid, Solution, Trajectory};

// The guide's code listings run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/stepper.md")]
    mod stepper {}
    #[doc = include_str!("../../../book/src/richardson.md")]
    mod richardson {}
    #[doc = include_str!("../../../book/src/intervals.md")]
    mod intervals {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
