use crate::autodiff::{ops, ScalarFn2};
use crate::conditions::{check_partition, positive_step, ProxBlock};
use crate::error::{check_len, Error, Result};
use crate::linalg::{distance, DenseVector};
use crate::operators::{BregmanProjOperator, MirrorMap, ProxOperator};

const ARMIJO_SIGMA: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Iterates and objective values of an inner solver run; index 0 holds the
/// starting point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub iterates: Vec<DenseVector>,
    pub objective: Vec<f64>,
}

impl SolverTrace {
    fn start(x0: &[f64], value: f64) -> Self {
        Self {
            iterates: vec![DenseVector::from_vec(x0.to_vec())],
            objective: vec![value],
        }
    }

    fn push(&mut self, x: &[f64], value: f64) {
        self.iterates.push(DenseVector::from_vec(x.to_vec()));
        self.objective.push(value);
    }

    /// Number of iterations performed.
    pub fn len(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `‖x_t − x*‖` for every recorded iterate.
    pub fn errors_to(&self, reference: &[f64]) -> Vec<f64> {
        self.iterates.iter().map(|x| distance(x, reference)).collect()
    }

    /// Keeps every `every`-th record plus the last one.
    pub fn thinned(&self, every: usize) -> Self {
        let every = every.max(1);
        let last = self.iterates.len().saturating_sub(1);
        let keep = |i: &usize| i % every == 0 || *i == last;
        Self {
            iterates: (0..self.iterates.len())
                .filter(keep)
                .map(|i| self.iterates[i].clone())
                .collect(),
            objective: (0..self.objective.len())
                .filter(keep)
                .map(|i| self.objective[i])
                .collect(),
        }
    }

    fn fail(self, what: &'static str) -> Error {
        Error::Diverged {
            what,
            iteration: self.len() + 1,
            trace: Box::new(self),
        }
    }
}

fn finite(x: &[f64], value: f64) -> bool {
    value.is_finite() && x.iter().all(|v| v.is_finite())
}

/// Step-size rule of [`gradient_descent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Halve from 1 until the Armijo condition with `σ = 1e-4` holds.
    Backtracking,
}

/// Gradient descent on `f(·, θ)` for a fixed number of steps.
pub fn gradient_descent<F: ScalarFn2>(
    f: &F,
    theta: &[f64],
    x0: &[f64],
    steps: usize,
    rule: StepRule,
) -> Result<(DenseVector, SolverTrace)> {
    check_len("gradient descent start", f.dim_x(), x0.len())?;
    check_len("gradient descent parameters", f.dim_theta(), theta.len())?;
    if let StepRule::Fixed(eta) = rule {
        positive_step(eta)?;
    }
    f.check_domain(x0, theta)?;
    let mut x = x0.to_vec();
    let mut fx = f.value(&x, theta);
    let mut trace = SolverTrace::start(&x, fx);
    if !finite(&x, fx) {
        return Err(trace.fail("gradient descent"));
    }
    for _ in 0..steps {
        let g = f.gradient(&x, theta);
        match rule {
            StepRule::Fixed(eta) => {
                x = ops::step(&x, eta, &g);
                fx = f.value(&x, theta);
            }
            StepRule::Backtracking => {
                let gg = ops::sq_norm(&g);
                let mut eta = 1.0;
                for _ in 0..MAX_HALVINGS {
                    let trial = ops::step(&x, eta, &g);
                    let ft = f.value(&trial, theta);
                    if ft <= fx - ARMIJO_SIGMA * eta * gg {
                        x = trial;
                        fx = ft;
                        break;
                    }
                    eta *= 0.5;
                }
            }
        }
        trace.push(&x, fx);
        if !finite(&x, fx) {
            return Err(trace.fail("gradient descent"));
        }
    }
    Ok((DenseVector::from_vec(x), trace))
}

/// ISTA, or FISTA when `accelerated`, on `f(·, θ_f) + g(·, θ_g)` with
/// `θ = [θ_f, θ_g]`.
pub fn proximal_gradient<F: ScalarFn2, P: ProxOperator>(
    f: &F,
    prox: &P,
    theta: &[f64],
    x0: &[f64],
    steps: usize,
    eta: f64,
    accelerated: bool,
) -> Result<(DenseVector, SolverTrace)> {
    positive_step(eta)?;
    check_len("proximal gradient start", f.dim_x(), x0.len())?;
    check_len(
        "proximal gradient parameters",
        f.dim_theta() + prox.dim_theta(),
        theta.len(),
    )?;
    let (tf, tg) = theta.split_at(f.dim_theta());
    prox.check(x0.len(), tg)?;
    f.check_domain(x0, tf)?;
    let objective = |x: &[f64]| f.value(x, tf) + prox.penalty(x, tg);
    let mut x = x0.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut trace = SolverTrace::start(&x, objective(&x));
    for _ in 0..steps {
        let point = if accelerated { &y } else { &x };
        let next = prox.prox(&ops::step(point, eta, &f.gradient(point, tf)), tg, eta);
        if accelerated {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let w = (t - 1.0) / t_next;
            y = next.iter().zip(&x).map(|(n, o)| n + w * (n - o)).collect();
            t = t_next;
        }
        x = next;
        let value = objective(&x);
        trace.push(&x, value);
        if !finite(&x, value) {
            return Err(trace.fail("proximal gradient"));
        }
    }
    Ok((DenseVector::from_vec(x), trace))
}

/// Step-size schedule of [`mirror_descent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η_t = η₀ / √(t + 1)` for `t = 0, 1, …`.
    InvSqrt(f64),
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InvSqrt(eta) => eta / ((t + 1) as f64).sqrt(),
        }
    }

    fn initial(&self) -> f64 {
        self.at(0)
    }
}

/// Mirror descent `x ← proj^φ_C(∇φ(x) − η_t∇₁f(x, θ_f), θ_C)` with
/// `θ = [θ_f, θ_C]`.
pub fn mirror_descent<F: ScalarFn2, B: BregmanProjOperator>(
    f: &F,
    mirror: MirrorMap,
    bproj: &B,
    theta: &[f64],
    x0: &[f64],
    steps: usize,
    schedule: StepSchedule,
) -> Result<(DenseVector, SolverTrace)> {
    positive_step(schedule.initial())?;
    check_len("mirror descent start", f.dim_x(), x0.len())?;
    check_len(
        "mirror descent parameters",
        f.dim_theta() + bproj.dim_theta(),
        theta.len(),
    )?;
    let (tf, tc) = theta.split_at(f.dim_theta());
    mirror.check_domain(x0)?;
    bproj.check(x0.len(), tc)?;
    f.check_domain(x0, tf)?;
    let mut x = x0.to_vec();
    let mut trace = SolverTrace::start(&x, f.value(&x, tf));
    for t in 0..steps {
        let y = ops::step(&mirror.grad(&x), schedule.at(t), &f.gradient(&x, tf));
        x = bproj.project(&y, tc);
        if matches!(mirror, MirrorMap::Kl) {
            // Softmax underflow is lifted to the smallest positive normal.
            for v in x.iter_mut().filter(|v| **v == 0.0) {
                *v = f64::MIN_POSITIVE;
            }
        }
        let value = f.value(&x, tf);
        trace.push(&x, value);
        if !finite(&x, value) {
            return Err(trace.fail("mirror descent"));
        }
        mirror.check_domain(&x)?;
    }
    Ok((DenseVector::from_vec(x), trace))
}

/// Cyclic block proximal-gradient sweeps; each block update uses the
/// gradient at the current iterate. `θ = [θ_f, θ_g]`, `θ_g` shared.
pub fn block_coordinate_descent<F: ScalarFn2, P: ProxOperator>(
    f: &F,
    blocks: &[ProxBlock<P>],
    theta: &[f64],
    x0: &[f64],
    sweeps: usize,
) -> Result<(DenseVector, SolverTrace)> {
    check_len("block coordinate descent start", f.dim_x(), x0.len())?;
    check_partition(blocks.iter().map(|b| &b.range), x0.len())?;
    let dim_g = blocks.first().map_or(0, |b| b.prox.dim_theta());
    check_len(
        "block coordinate descent parameters",
        f.dim_theta() + dim_g,
        theta.len(),
    )?;
    let (tf, tg) = theta.split_at(f.dim_theta());
    for b in blocks {
        positive_step(b.eta)?;
        b.prox.check(b.range.len(), tg)?;
    }
    f.check_domain(x0, tf)?;
    let objective = |x: &[f64]| {
        f.value(x, tf)
            + blocks
                .iter()
                .map(|b| b.prox.penalty(&x[b.range.clone()], tg))
                .sum::<f64>()
    };
    let mut x = x0.to_vec();
    let mut trace = SolverTrace::start(&x, objective(&x));
    for _ in 0..sweeps {
        for b in blocks {
            let r = b.range.clone();
            let g = f.gradient(&x, tf);
            let y = ops::step(&x[r.clone()], b.eta, &g[r.clone()]);
            let updated = b.prox.prox(&y, tg, b.eta);
            x[r].copy_from_slice(&updated);
        }
        let value = objective(&x);
        trace.push(&x, value);
        if !finite(&x, value) {
            return Err(trace.fail("block coordinate descent"));
        }
    }
    Ok((DenseVector::from_vec(x), trace))
}
