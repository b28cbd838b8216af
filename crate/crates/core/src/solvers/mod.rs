//! Inner solvers, the unrolling baseline and the bi-level outer loop.
//!
//! Inner solvers run a fixed iteration budget and record every iterate.

mod inner;
mod outer;
mod root;
mod unroll;

pub use inner::{
    block_coordinate_descent, gradient_descent, mirror_descent, proximal_gradient, SolverTrace,
    StepRule, StepSchedule,
};
pub use outer::{outer_descent, total_hypergradient, BilevelProblem, OuterConfig, OuterTrace};
pub use root::bisection_root;
pub use unroll::{unrolled_jacobian, unrolled_jacobian_path};
