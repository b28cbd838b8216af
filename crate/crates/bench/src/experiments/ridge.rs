//! Jacobian precision along a gradient-descent run on ridge regression.
//!
//! For every iterate `x_t` the table compares three quantities against the
//! closed-form Jacobian `∂x*(θ)`: the implicit estimate `J(x_t, θ)`, the
//! derivative of the iterate itself (unrolling), and the error bound
//! `(β/α + γR/α²)‖x_t − x*‖`. Matrix errors are Frobenius norms.

use idiff::bounds::{ridge_closed_form, ridge_constants, theorem1_bound, RidgeProblemData};
use idiff::conditions::{gradient_descent_fp, stationary_condition, GradientStepMap};
use idiff::implicit::jacobian_estimate_dense;
use idiff::linalg::{distance, sym_max_eigenvalue, DenseMatrix, DenseVector};
use idiff::solvers::{gradient_descent, unrolled_jacobian_path, StepRule};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use super::{Phases, RunOutput};
use crate::config::{Condition, ExperimentConfig};
use crate::error::BenchResult;
use crate::rng::{stream, stream_rng};
use crate::table::CsvTable;

pub const COLUMNS: [&str; 5] = [
    "t",
    "iterate_error",
    "implicit_jac_error",
    "unrolled_jac_error",
    "theorem1_bound",
];

/// `Φ` with `N(0, 1/m)` entries, `y ~ N(0, I)` and `θᵢ ~ U[0.5, 1.5]`.
pub fn ridge_instance(seed: u64, m: usize, p: usize) -> RidgeProblemData {
    let mut design = stream_rng(seed, stream::DESIGN);
    let scale = 1.0 / (m as f64).sqrt();
    let phi = DenseMatrix::from_fn(m, p, |_, _| scale * design.sample::<f64, _>(StandardNormal));
    let mut targets = stream_rng(seed, stream::TARGETS);
    let y: DenseVector = (0..m).map(|_| targets.sample::<f64, _>(StandardNormal)).collect();
    let mut reg = stream_rng(seed, stream::REGULARIZATION);
    let theta: DenseVector = (0..p).map(|_| reg.random_range(0.5..1.5)).collect();
    RidgeProblemData::new(phi, y, theta).expect("positive regularization")
}

/// Step `1/L` with `L = 2λ_max(ΦᵀΦ + diag θ)`.
pub fn ridge_step(data: &RidgeProblemData) -> BenchResult<f64> {
    let d = data.dim();
    let lmax = sym_max_eigenvalue(&data.half_hessian(), 1e-12, 100 * d.max(10))?;
    Ok(0.5 / lmax)
}

pub fn exp_ridge_precision(cfg: &ExperimentConfig) -> BenchResult<RunOutput> {
    let mut phases = Phases::default();
    let data = ridge_instance(cfg.seed, cfg.dims.m, cfg.dims.p);
    let theta = data.theta.clone();
    let budget = cfg.inner_iters;
    let (x_star, j_star) = phases.time("closed_form", || ridge_closed_form(&data))?;
    let constants = ridge_constants(&data)?;
    let eta = ridge_step(&data)?;
    let x0 = vec![0.0; data.dim()];
    let obj = data.objective();
    let (_, trace) = phases.time("inner_solve", || {
        gradient_descent(&obj, &theta, &x0, budget, StepRule::Fixed(eta))
    })?;
    let unrolled = phases.time("unrolled", || {
        unrolled_jacobian_path(&GradientStepMap { f: obj.clone(), eta }, &theta, &x0, budget)
    })?;
    let implicit: Vec<DenseMatrix> = phases.time("implicit", || -> BenchResult<_> {
        let estimate = |x: &[f64]| -> BenchResult<DenseMatrix> {
            Ok(match cfg.condition {
                Condition::PgFp => jacobian_estimate_dense(
                    &gradient_descent_fp(obj.clone(), eta)?.to_root(),
                    x,
                    &theta,
                )?,
                _ => jacobian_estimate_dense(&stationary_condition(obj.clone())?, x, &theta)?,
            })
        };
        (1..=budget).map(|t| estimate(&trace.iterates[t])).collect()
    })?;
    let mut table = CsvTable::new(COLUMNS);
    for t in 1..=budget {
        let err = distance(&trace.iterates[t], &x_star);
        table.push(vec![
            t as f64,
            err,
            implicit[t - 1].sub(&j_star)?.frobenius_norm(),
            unrolled[t - 1].sub(&j_star)?.frobenius_norm(),
            theorem1_bound(&constants, err)?.value,
        ])?;
    }
    let mut out = RunOutput::new(table, phases);
    out.meta.insert("step_size".into(), json!(eta));
    out.meta.insert(
        "bound_constants".into(),
        json!({
            "alpha": constants.alpha,
            "beta": constants.beta,
            "gamma": constants.gamma,
            "R": constants.r,
        }),
    );
    out.meta.insert("matrix_norm".into(), json!("frobenius"));
    Ok(out)
}
