use crate::autodiff::DiffFn2;
use crate::error::{check_len, Error, Result};
use crate::implicit::{hypergradient, ImplicitConfig, RootProblem};
use crate::linalg::DenseVector;

/// A bi-level problem `min_θ L(x*(θ), θ)` whose inner solution is a root of
/// [`BilevelProblem::condition`].
pub trait BilevelProblem {
    type Map: DiffFn2;

    fn condition(&self) -> &RootProblem<Self::Map>;

    /// Approximate inner solution at `θ`, optionally warm-started.
    fn solve_inner(&self, theta: &[f64], warm_start: Option<&[f64]>) -> Result<DenseVector>;

    /// `(L(x, θ), ∂ₓL, ∂_θL)`.
    fn outer(&self, x: &[f64], theta: &[f64]) -> (f64, DenseVector, DenseVector);
}

/// Heavy-ball outer loop settings.
#[derive(Debug, Clone, Copy)]
pub struct OuterConfig {
    pub step: f64,
    pub momentum: f64,
    pub iterations: usize,
    pub implicit: ImplicitConfig,
}

impl OuterConfig {
    /// Momentum 0.9 and default implicit settings.
    pub fn new(step: f64, iterations: usize) -> Self {
        Self {
            step,
            momentum: 0.9,
            iterations,
            implicit: ImplicitConfig::default(),
        }
    }

    pub fn with_momentum(mut self, momentum: f64) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "outer step must be positive, got {}",
                self.step
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        self.implicit.validate()
    }
}

/// Outer iterates; entry `k` belongs to step `k`, with `k = 0` the start and
/// `k = iterations` the final parameters.
#[derive(Debug, Clone, Default)]
pub struct OuterTrace {
    pub thetas: Vec<DenseVector>,
    pub losses: Vec<f64>,
    pub hypergradients: Vec<DenseVector>,
    pub inner_solutions: Vec<DenseVector>,
}

impl OuterTrace {
    pub fn final_theta(&self) -> &DenseVector {
        self.thetas.last().expect("trace holds the starting point")
    }
}

/// Total derivative `∂_θL + Jᵀ∂ₓL` at `θ` with the inner solution `x`.
pub fn total_hypergradient<P: BilevelProblem>(
    problem: &P,
    x: &[f64],
    theta: &[f64],
    cfg: &ImplicitConfig,
) -> Result<(f64, DenseVector)> {
    let (loss, gx, gt) = problem.outer(x, theta);
    let implicit = hypergradient(problem.condition(), x, theta, &gx, cfg)?;
    check_len("outer parameter gradient", implicit.len(), gt.len())?;
    Ok((loss, implicit.add(&gt)))
}

/// Heavy-ball descent on `θ` with implicit hypergradients; each step solves
/// the inner problem warm-started from the previous solution.
pub fn outer_descent<P: BilevelProblem>(
    problem: &P,
    theta0: &[f64],
    cfg: &OuterConfig,
) -> Result<OuterTrace> {
    cfg.validate()?;
    check_len("outer start", problem.condition().dim_theta(), theta0.len())?;
    let mut theta = theta0.to_vec();
    let mut velocity = vec![0.0; theta.len()];
    let mut warm: Option<DenseVector> = None;
    let mut trace = OuterTrace::default();
    for step in 0..=cfg.iterations {
        let wrap = |e: Error| Error::OuterStep {
            step,
            source: Box::new(e),
        };
        let x = problem.solve_inner(&theta, warm.as_deref()).map_err(wrap)?;
        let (loss, grad) = total_hypergradient(problem, &x, &theta, &cfg.implicit).map_err(wrap)?;
        if !loss.is_finite() || !grad.is_finite() {
            return Err(wrap(Error::NonFinite("outer loss or hypergradient")));
        }
        trace.thetas.push(DenseVector::from_vec(theta.clone()));
        trace.losses.push(loss);
        trace.hypergradients.push(grad.clone());
        trace.inner_solutions.push(x.clone());
        if step < cfg.iterations {
            for ((v, t), g) in velocity.iter_mut().zip(theta.iter_mut()).zip(grad.iter()) {
                *v = cfg.momentum * *v - cfg.step * g;
                *t += *v;
            }
        }
        warm = Some(x);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{ops, Scalar, ScalarFn2};
    use crate::conditions::{stationary_condition, StationaryMap};

    /// Inner `½‖x − θ‖²`, outer `½‖x − a‖²`.
    struct Toy {
        rp: RootProblem<StationaryMap<Dist>>,
        a: Vec<f64>,
    }

    struct Dist(usize);

    impl ScalarFn2 for Dist {
        fn dim_x(&self) -> usize {
            self.0
        }
        fn dim_theta(&self) -> usize {
            self.0
        }
        fn value<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
            ops::sq_norm(&ops::sub(x, t)) * 0.5
        }
    }

    impl Toy {
        fn new(a: Vec<f64>) -> Self {
            Self {
                rp: stationary_condition(Dist(a.len())).unwrap(),
                a,
            }
        }
    }

    impl BilevelProblem for Toy {
        type Map = StationaryMap<Dist>;

        fn condition(&self) -> &RootProblem<Self::Map> {
            &self.rp
        }

        fn solve_inner(&self, theta: &[f64], _warm: Option<&[f64]>) -> Result<DenseVector> {
            Ok(DenseVector::from_vec(theta.to_vec()))
        }

        fn outer(&self, x: &[f64], theta: &[f64]) -> (f64, DenseVector, DenseVector) {
            let r = DenseVector::from_vec(x.to_vec()).sub(&self.a);
            (0.5 * r.dot(&r), r, DenseVector::zeros(theta.len()))
        }
    }

    #[test]
    fn converges_to_analytic_optimum() {
        let a = vec![1.5, -0.5];
        let trace = outer_descent(&Toy::new(a.clone()), &[0.0, 0.0], &OuterConfig::new(0.1, 300)).unwrap();
        assert!(crate::linalg::distance(trace.final_theta(), &a) < 1e-4);
        assert_eq!(trace.losses.len(), 301);
    }

    #[test]
    fn zero_gradient_keeps_theta() {
        let a = vec![1.5, -0.5];
        let trace = outer_descent(&Toy::new(a.clone()), &a, &OuterConfig::new(0.1, 5)).unwrap();
        assert!(trace.thetas.iter().all(|t| t.as_slice() == a.as_slice()));
    }

    #[test]
    fn rejects_bad_config() {
        let toy = Toy::new(vec![1.0]);
        assert!(outer_descent(&toy, &[0.0], &OuterConfig::new(0.0, 1)).is_err());
        assert!(outer_descent(&toy, &[0.0], &OuterConfig::new(0.1, 1).with_momentum(1.0)).is_err());
    }
}
