use super::ParamSet;
use crate::error::{Error, Result};

/// Compares an analytic gradient against central finite differences.
///
/// Returns the largest per-coordinate relative error
/// `|a − n| / max(1e-8, |a| + |n|)`.
pub fn grad_check<P, F>(mut loss_fn: F, params: &P, analytic: &P, eps: f64) -> Result<f64>
where
    P: ParamSet,
    F: FnMut(&P) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !params.same_layout(analytic) {
        return Err(Error::invalid("analytic gradient layout differs from params"));
    }
    let base = params.to_flat();
    let grad = analytic.to_flat();
    let mut probe = params.clone();
    let mut work = base.clone();
    let mut worst = 0.0f64;

    for i in 0..base.len() {
        work[i] = base[i] + eps;
        probe.set_flat(&work)?;
        let plus = loss_fn(&probe);
        work[i] = base[i] - eps;
        probe.set_flat(&work)?;
        let minus = loss_fn(&probe);
        work[i] = base[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss at coordinate {i} (+: {plus}, -: {minus})"
            )));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = grad[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn half_norm_sq(m: &Matrix) -> f64 {
        0.5 * m.sum_sq()
    }

    #[test]
    fn quadratic_is_exact() {
        let theta = Matrix::from_fn(3, 4, |r, c| r as f64 - 0.7 * c as f64 + 0.3);
        let err = grad_check(half_norm_sq, &theta, &theta, 1e-5).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn doubled_gradient_gives_one_third() {
        let theta = Matrix::from_fn(2, 3, |r, c| 1.0 + r as f64 + c as f64);
        let doubled = theta.scale(2.0);
        let err = grad_check(half_norm_sq, &theta, &doubled, 1e-5).unwrap();
        assert!((err - 1.0 / 3.0).abs() < 1e-8, "{err}");
    }

    #[test]
    fn rejects_non_finite_loss() {
        let theta = Matrix::filled(1, 1, 1.0);
        assert!(grad_check(|_: &Matrix| f64::NAN, &theta, &theta, 1e-5).is_err());
    }

    #[test]
    fn rejects_bad_eps() {
        let theta = Matrix::filled(1, 1, 1.0);
        assert!(grad_check(half_norm_sq, &theta, &theta, 0.0).is_err());
    }
}
