//! Matrix-free Krylov solvers.
//!
//! Every solver starts from `x = 0` and stops when the relative residual
//! `‖op(x) - rhs‖ / max(1, ‖rhs‖)` drops below `tol`. Non-convergence is never
//! an error: the report carries `converged = false` and the caller decides
//! whether to fall back (see [`normal_cg_solve`]).

use std::time::Instant;

use super::dense::{axpy, dot, norm, DenseVector};
use super::linear_map::LinearMap;
use super::SolveReport;
use crate::error::{check_len, Result};

fn check_square(op: &LinearMap<'_>, rhs: &[f64]) -> Result<()> {
    check_len("square operator", op.dim_out(), op.dim_in())?;
    check_len("right-hand side", op.dim_out(), rhs.len())
}

fn relative_residual(op: &LinearMap<'_>, x: &[f64], rhs: &[f64], scale: f64) -> f64 {
    let ax = op.apply(x);
    let r: f64 = ax
        .iter()
        .zip(rhs)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    r / scale
}

fn finish(
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    tol: f64,
    started: Instant,
) -> (DenseVector, SolveReport) {
    let converged = residual.is_finite() && residual <= tol;
    (
        DenseVector::from_vec(x),
        SolveReport {
            iterations,
            final_residual_norm: residual,
            converged,
            used_least_squares_fallback: false,
            near_kink: false,
            wall_time: started.elapsed(),
        },
    )
}

/// Conjugate gradient for symmetric positive semi-definite operators.
///
/// A non-positive curvature `pᵀ A p ≤ 0` terminates the iteration with
/// `converged = false`.
pub fn cg_solve(
    op: &LinearMap<'_>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(DenseVector, SolveReport)> {
    check_square(op, rhs)?;
    let started = Instant::now();
    let n = rhs.len();
    let scale = norm(rhs).max(1.0);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut rs = dot(&r, &r);
    if rs.sqrt() / scale <= tol {
        return Ok(finish(x, 0, rs.sqrt() / scale, tol, started));
    }
    let mut p = r.clone();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let ap = op.apply(&p);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) || !curvature.is_finite() {
            log::debug!("cg: non-positive curvature {curvature:e} at iteration {iterations}");
            break;
        }
        let alpha = rs / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rs_next = dot(&r, &r);
        if rs_next.sqrt() / scale <= tol {
            break;
        }
        let beta = rs_next / rs;
        rs = rs_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    let residual = relative_residual(op, &x, rhs, scale);
    Ok(finish(x, iterations, residual, tol, started))
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
pub fn gmres_solve(
    op: &LinearMap<'_>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> Result<(DenseVector, SolveReport)> {
    check_square(op, rhs)?;
    let started = Instant::now();
    let n = rhs.len();
    let scale = norm(rhs).max(1.0);
    let m = restart.clamp(1, n.max(1));
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut beta = norm(&r);
    let mut iterations = 0;
    if beta / scale <= tol {
        return Ok(finish(x, 0, beta / scale, tol, started));
    }

    while iterations < max_iter {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Column-major Hessenberg, column j holds h[0..=j+1][j].
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        for j in 0..m {
            if iterations >= max_iter {
                break;
            }
            iterations += 1;
            let mut w = op.apply(&basis[j]).into_vec();
            let mut col = vec![0.0; j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    axpy(-hij, v, &mut w);
                }
            }
            let h_next = norm(&w);
            col[j + 1] = h_next;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            if denom == 0.0 {
                break;
            }
            let (c, s) = (col[j] / denom, col[j + 1] / denom);
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[j + 1] = -s * g[j];
            g[j] *= c;
            h.push(col);
            k = j + 1;
            if h_next <= f64::EPSILON * denom || g[j + 1].abs() / scale <= tol {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        if k == 0 {
            break;
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().take(k).skip(i + 1) {
                s -= h[jj][i] * yj;
            }
            y[i] = s / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut x);
        }
        let ax = op.apply(&x);
        r = rhs.iter().zip(ax.iter()).map(|(b, a)| b - a).collect();
        let next_beta = norm(&r);
        if next_beta / scale <= tol {
            break;
        }
        if !(next_beta < beta * (1.0 - 1e-12)) {
            log::debug!("gmres: stagnation at residual {:e}", next_beta / scale);
            break;
        }
        beta = next_beta;
    }
    let residual = relative_residual(op, &x, rhs, scale);
    Ok(finish(x, iterations, residual, tol, started))
}

/// Deterministic perturbation direction for re-seeding the BiCGSTAB shadow
/// residual after a breakdown.
fn shadow_perturbation(n: usize, attempt: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * (attempt as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5)
        .collect();
    let s = norm(&v).max(f64::MIN_POSITIVE);
    v.into_iter().map(|x| x / s).collect()
}

const BICGSTAB_RESTARTS: usize = 3;

/// BiCGSTAB for general nonsingular operators.
///
/// The stabilizing step bounds `ω` away from zero (`|cos(t, s)| ≥ 0.7`
/// safeguard), which keeps the method alive on skew-dominated operators. A
/// Lanczos breakdown (`r̂ᵀr = 0` or `r̂ᵀv = 0`) re-seeds the shadow residual up
/// to three times before giving up with `converged = false`.
pub fn bicgstab_solve(
    op: &LinearMap<'_>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(DenseVector, SolveReport)> {
    check_square(op, rhs)?;
    let started = Instant::now();
    let n = rhs.len();
    let scale = norm(rhs).max(1.0);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    if norm(&r) / scale <= tol {
        return Ok(finish(x, 0, norm(&r) / scale, tol, started));
    }
    let mut iterations = 0;
    let mut attempt = 0;
    let mut shadow = r.clone();
    'outer: while iterations < max_iter {
        let mut rho = 1.0;
        let mut alpha = 1.0;
        let mut omega = 1.0;
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let breakdown_floor = |a: &[f64], b: &[f64]| 1e-14 * norm(a) * norm(b);
        loop {
            if iterations >= max_iter {
                break 'outer;
            }
            iterations += 1;
            let rho_next = dot(&shadow, &r);
            if rho_next.abs() <= breakdown_floor(&shadow, &r) || !rho_next.is_finite() {
                break;
            }
            let beta = (rho_next / rho) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            v = op.apply(&p).into_vec();
            let sv = dot(&shadow, &v);
            if sv.abs() <= breakdown_floor(&shadow, &v) || !sv.is_finite() {
                break;
            }
            alpha = rho_next / sv;
            let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
            if norm(&s) / scale <= tol {
                axpy(alpha, &p, &mut x);
                break 'outer;
            }
            let t = op.apply(&s).into_vec();
            let ts = dot(&t, &s);
            let (nt, ns) = (norm(&t), norm(&s));
            if nt == 0.0 {
                break;
            }
            let cosine = ts / (nt * ns);
            omega = if cosine.abs() >= 0.7 {
                ts / (nt * nt)
            } else {
                let sign = if ts >= 0.0 { 1.0 } else { -1.0 };
                sign * 0.7 * ns / nt
            };
            for i in 0..n {
                x[i] += alpha * p[i] + omega * s[i];
                r[i] = s[i] - omega * t[i];
            }
            rho = rho_next;
            if norm(&r) / scale <= tol {
                break 'outer;
            }
        }
        // Breakdown: recompute the true residual and re-seed the shadow vector.
        attempt += 1;
        if attempt > BICGSTAB_RESTARTS {
            log::debug!("bicgstab: breakdown after {attempt} restarts");
            break;
        }
        let ax = op.apply(&x);
        r = rhs.iter().zip(ax.iter()).map(|(b, a)| b - a).collect();
        let nr = norm(&r);
        if nr / scale <= tol {
            break;
        }
        let pert = shadow_perturbation(n, attempt);
        shadow = r.iter().zip(&pert).map(|(ri, pi)| ri + nr * pi).collect();
    }
    let residual = relative_residual(op, &x, rhs, scale);
    Ok(finish(x, iterations, residual, tol, started))
}

/// Least-squares solve by conjugate gradient on the normal equations
/// `AᵀA x = Aᵀ rhs` (CGLS form). Started from zero, it converges to the
/// minimum-norm least-squares solution.
///
/// The reported residual is the normal-equation residual
/// `‖Aᵀ(rhs - A x)‖ / max(1, ‖Aᵀ rhs‖)`, which is the quantity that vanishes for
/// inconsistent systems.
pub fn normal_cg_solve(
    op: &LinearMap<'_>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(DenseVector, SolveReport)> {
    check_len("right-hand side", op.dim_out(), rhs.len())?;
    let started = Instant::now();
    let mut x = vec![0.0; op.dim_in()];
    let mut r = rhs.to_vec();
    let mut s = op.apply_transpose(&r).into_vec();
    let scale = norm(&s).max(1.0);
    let mut gamma = dot(&s, &s);
    let mut p = s.clone();
    let mut iterations = 0;
    while iterations < max_iter && gamma.sqrt() / scale > tol {
        iterations += 1;
        let q = op.apply(&p);
        let delta = dot(&q, &q);
        if !(delta > 0.0) || !delta.is_finite() {
            break;
        }
        let alpha = gamma / delta;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        s = op.apply_transpose(&r).into_vec();
        let gamma_next = dot(&s, &s);
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    // True normal-equation residual.
    let ax = op.apply(&x);
    let res: Vec<f64> = rhs.iter().zip(ax.iter()).map(|(b, a)| b - a).collect();
    let residual = norm(&op.apply_transpose(&res)) / scale;
    Ok(finish(x, iterations, residual, tol, started))
}
