use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;

/// Root of a scalar function on a sign-changing bracket.
///
/// Stops when the bracket is narrower than `tol` or `|g| ≤ tol`; an endpoint
/// that is already a root is returned without iterating.
pub fn bisection_root(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bisection bracket [{lo}, {hi}] is not a finite interval"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut glo = g(lo);
    if glo == 0.0 {
        return Ok(lo);
    }
    let ghi = g(hi);
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() || glo.is_nan() || ghi.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "bisection bracket does not change sign: g({lo}) = {glo:e}, g({hi}) = {ghi:e}"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol || hi - lo <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((bisection_root(|x| x - 1.0, 0.0, 2.0, 1e-14).unwrap() - 1.0).abs() < 1e-14);
        let r = bisection_root(|x| x * x * x - 8.0, 0.0, 3.0, 1e-13).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert_eq!(bisection_root(|x| x, 0.0, 5.0, 1e-12).unwrap(), 0.0);
        assert!(bisection_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
        assert!(bisection_root(|x| x, 1.0, -1.0, 1e-12).is_err());
    }
}
