//! Filter line-search sequential adaptive cubic regularization for
//! equality-constrained nonlinear programs
//!
//! ```text
//! minimize f(x)  subject to  c(x) = 0,   c: Rⁿ → Rᵐ, m ≤ n.
//! ```
//!
//! Each iteration splits the step into a normal part that solves the
//! linearized constraints and a tangential part from a cubic model in the
//! null space of the Jacobian. A backtracking line search accepts trial
//! points through a filter on `(‖c‖, ℓ)`, where `ℓ = f − λᵀc`.

pub mod cli;
pub mod cubic_subproblem;
pub mod driver;
pub mod filter;
pub mod kernels;
pub mod line_search;
pub mod problem;
pub mod restoration;
pub mod testlib;

pub use driver::{solve, HessianStrategy, SolveStatus, SolverConfig, SolverReport};
pub use filter::Filter;
pub use problem::{check_derivatives, EvalCounters, Matrix, ProblemDef, Vector};
pub use testlib::{get_problem, reference_stats, TestProblem};
