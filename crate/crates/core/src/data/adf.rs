//! Augmented Dickey-Fuller unit-root test (constant, no trend).
//!
//! The test regression is
//!
//! ```text
//! Δy_t = α + γ·y_{t−1} + Σ_{i=1..p} β_i·Δy_{t−i} + ε_t
//! ```
//!
//! and the statistic is the t-ratio `γ̂ / se(γ̂)`. p-values come from
//! MacKinnon's (1994) response surface for one integrated variable.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numerics::{spd_inverse, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub n_obs: usize,
}

/// How many lagged differences enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSelection {
    Fixed(usize),
    /// Minimize AIC over `0..=max_lag`; `None` uses `⌊12·(n/100)^{1/4}⌋`.
    Aic { max_lag: Option<usize> },
}

impl Default for LagSelection {
    fn default() -> Self {
        LagSelection::Aic { max_lag: None }
    }
}

/// Order-fold first differences.
pub fn difference(values: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::invalid("difference order must be at least 1"));
    }
    if values.len() <= order {
        return Err(Error::invalid(format!(
            "difference of order {order} needs more than {order} values, got {}",
            values.len()
        )));
    }
    let mut out = values.to_vec();
    for _ in 0..order {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Schwert's rule of thumb for the largest lag considered.
pub fn default_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

struct OlsFit {
    gamma_t: f64,
    ssr: f64,
    nobs: usize,
    k: usize,
}

impl OlsFit {
    fn aic(&self) -> f64 {
        let n = self.nobs as f64;
        let llf = -n / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0);
        -2.0 * llf + 2.0 * self.k as f64
    }
}

/// Fits the ADF regression with `lags` lagged differences on the rows
/// `start..dy.len()` of the differenced series.
fn fit(y: &[f64], dy: &[f64], lags: usize, start: usize) -> Result<OlsFit> {
    let nobs = dy.len() - start;
    let k = 2 + lags;
    if nobs <= k {
        return Err(Error::invalid(format!(
            "ADF regression with {lags} lags has only {nobs} observations"
        )));
    }
    let x = Matrix::from_fn(nobs, k, |r, c| {
        let t = start + r;
        match c {
            0 => 1.0,
            1 => y[t],
            j => dy[t - (j - 1)],
        }
    });
    let target = Matrix::column(&dy[start..]);
    let xtx = x.t_matmul(&x)?;
    let xtx_inv = spd_inverse(&xtx)
        .map_err(|_| Error::DegenerateSeries("regressors are collinear".into()))?;
    let beta = xtx_inv.matmul(&x.t_matmul(&target)?)?;
    let fitted = x.matmul(&beta)?;
    let ssr: f64 = target
        .as_slice()
        .iter()
        .zip(fitted.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let tss: f64 = target.sum_sq();
    if !(ssr > 1e-24 * tss.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateSeries("regression fits exactly".into()));
    }
    let sigma2 = ssr / (nobs - k) as f64;
    let se = (sigma2 * xtx_inv[(1, 1)]).sqrt();
    let gamma_t = beta[(1, 0)] / se;
    if !gamma_t.is_finite() {
        return Err(Error::DegenerateSeries("non-finite test statistic".into()));
    }
    Ok(OlsFit {
        gamma_t,
        ssr,
        nobs,
        k,
    })
}

/// Runs the ADF test on `values`.
pub fn adf_test(values: &[f64], lags: LagSelection) -> Result<AdfResult> {
    let n = values.len();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ADF input".into()));
    }
    let first = values.first().copied().unwrap_or(0.0);
    if values.iter().all(|&v| v == first) {
        return Err(Error::DegenerateSeries("constant input".into()));
    }
    let max_lag = match lags {
        LagSelection::Fixed(p) => p,
        LagSelection::Aic { max_lag: Some(m) } => m,
        LagSelection::Aic { max_lag: None } => {
            let cap = (n / 2).saturating_sub(2);
            default_max_lag(n).min(cap)
        }
    };
    if n < max_lag + 10 {
        return Err(Error::invalid(format!(
            "ADF with max lag {max_lag} needs at least {} values, got {n}",
            max_lag + 10
        )));
    }
    let dy = difference(values, 1)?;

    let lags_used = match lags {
        LagSelection::Fixed(p) => p,
        LagSelection::Aic { .. } => {
            // Every candidate is fit on the same sample so AICs are comparable.
            let mut best = (f64::INFINITY, 0usize);
            for p in 0..=max_lag {
                let aic = fit(values, &dy, p, max_lag)?.aic();
                if aic < best.0 {
                    best = (aic, p);
                }
            }
            best.1
        }
    };

    let result = fit(values, &dy, lags_used, lags_used)?;
    debug_assert_eq!(result.nobs, n - lags_used - 1);
    Ok(AdfResult {
        statistic: result.gamma_t,
        p_value: mackinnon_p_value(result.gamma_t),
        lags_used,
        n_obs: result.nobs,
    })
}

// MacKinnon (1994) response-surface coefficients, constant-only regression,
// one integrated variable.
const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const TAU_SMALL_P: [f64; 3] = [2.1659, 1.4412, 0.038269];
const TAU_LARGE_P: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

/// Approximate asymptotic p-value of an ADF t-statistic (constant, no trend).
pub fn mackinnon_p_value(statistic: f64) -> f64 {
    if statistic > TAU_MAX {
        return 1.0;
    }
    if statistic < TAU_MIN {
        return 0.0;
    }
    let coefs: &[f64] = if statistic <= TAU_STAR {
        &TAU_SMALL_P
    } else {
        &TAU_LARGE_P
    };
    let z = coefs.iter().rev().fold(0.0, |acc, c| acc * statistic + c);
    let normal = Normal::standard();
    normal.cdf(z).clamp(0.0, 1.0)
}
