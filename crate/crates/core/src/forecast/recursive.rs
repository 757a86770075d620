use crate::data::{Scaler, WindowedDataset};
use crate::error::{Error, Result};
use crate::models::Forecaster;
use crate::numerics::Matrix;

/// Iterated one-step forecasting: each prediction is appended to the window
/// and the oldest value dropped. Returns `horizon` values in original units.
pub fn recursive_forecast<F: Forecaster>(
    params: &F,
    last_window: &[f64],
    horizon: usize,
    scaler: &Scaler,
) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    if last_window.is_empty() {
        return Err(Error::Empty("forecast window".into()));
    }
    let lookback = last_window.len();
    let mut window = last_window.to_vec();
    let mut scaled = Vec::with_capacity(horizon);
    for step in 1..=horizon {
        let next = params
            .predict(&window[window.len() - lookback..])
            .map_err(|e| Error::ForecastAborted {
                step,
                reason: e.to_string(),
            })?;
        if !next.is_finite() {
            return Err(Error::ForecastAborted {
                step,
                reason: format!("non-finite prediction {next}"),
            });
        }
        window.push(next);
        scaled.push(next);
    }
    Ok(scaler.inverse_all(&scaled))
}

/// One-step-ahead predictions (scaled) for every window of `data`.
pub fn one_step_predictions<F: Forecaster>(
    params: &F,
    data: &WindowedDataset,
    batch: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.len());
    let cols = data.inputs.cols();
    for start in (0..data.len()).step_by(batch.max(1)) {
        let end = (start + batch.max(1)).min(data.len());
        let rows = data.inputs.as_slice()[start * cols..end * cols].to_vec();
        out.extend(params.predict_batch(&Matrix::new(end - start, cols, rows)?)?);
    }
    Ok(out)
}
