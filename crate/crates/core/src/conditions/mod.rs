//! Constructors turning objectives, constraints and operators into root or
//! fixed-point problems.
//!
//! Parameter vectors of composite conditions are concatenations: the
//! objective's parameters come first, followed by those of the operator.

mod conic;
mod fixed_point;
mod kkt;
mod smooth;

pub use conic::{conic_residual, Cone, ConeSpec, ConicMap};
pub use fixed_point::{
    block_prox_fp, mirror_descent_fp, projected_gradient_fp, proximal_gradient_fp, BlockProxMap,
    MirrorDescentMap, ProxBlock, ProxGradMap,
};
pub(crate) use fixed_point::check_partition;
pub use kkt::{
    kkt_condition, qp_kkt, qp_solve_dense, ConstraintFns, KktMap, KktPoint, NoConstraints,
    QpData, QpEq, QpIneq, QpObjective,
};
pub use smooth::{
    gradient_descent_fp, newton_fp, stationary_condition, GradientStepMap, NewtonMap,
    StationaryMap,
};
pub(crate) use smooth::positive_step;
