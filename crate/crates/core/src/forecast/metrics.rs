use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression metrics; `fit_degree_pct` is R² expressed as a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub fit_degree_pct: f64,
}

pub fn compute_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "metrics need equal lengths, got {} actual vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::invalid(format!(
            "metrics need at least 2 points, got {}",
            y_true.len()
        )));
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric input".into()));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::R2Undefined);
    }
    let mut abs = 0.0;
    let mut ss_res = 0.0;
    for (y, p) in y_true.iter().zip(y_pred) {
        let e = y - p;
        abs += e.abs();
        ss_res += e * e;
    }
    let mse = ss_res / n;
    let r2 = 1.0 - ss_res / ss_tot;
    Ok(Metrics {
        r2,
        mae: abs / n,
        mse,
        rmse: mse.sqrt(),
        fit_degree_pct: 100.0 * r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let m = compute_metrics(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 8.0]).unwrap();
        assert_eq!(m.mae, 1.0);
        assert_eq!(m.mse, 4.0);
        assert_eq!(m.rmse, 2.0);
        assert!((m.r2 - (-2.2)).abs() < 1e-12);
        assert!((m.fit_degree_pct - (-220.0)).abs() < 1e-9);
    }

    #[test]
    fn perfect_and_mean_predictions() {
        let y = [3.0, 1.5, 4.0, 2.25];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.r2, m.mae, m.mse, m.rmse), (1.0, 0.0, 0.0, 0.0));
        let mean = y.iter().sum::<f64>() / 4.0;
        assert_eq!(compute_metrics(&y, &[mean; 4]).unwrap().r2, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            compute_metrics(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::R2Undefined)
        ));
        assert!(compute_metrics(&[1.0], &[1.0]).is_err());
        assert!(compute_metrics(&[1.0, 2.0], &[1.0]).is_err());
        assert!(compute_metrics(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn reference_row_rmse_is_root_of_mse() {
        let (mse, rmse) = (339.9002233f64, 18.43638314);
        assert!((mse.sqrt() - rmse).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn identities_hold(
            pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..60),
        ) {
            let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(y.iter().any(|&v| v != y[0]));
            let m = compute_metrics(&y, &p).unwrap();
            prop_assert!((m.rmse * m.rmse - m.mse).abs() <= 1e-9 * m.mse.max(1.0));
            prop_assert!(m.mae <= m.rmse * (1.0 + 1e-12));
            prop_assert!(m.r2 <= 1.0);
            prop_assert_eq!(compute_metrics(&y, &y).unwrap().r2, 1.0);
        }
    }
}
