use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{compute_metrics, one_step_predictions, recursive_forecast, Metrics};
use crate::data::{
    chronological_split, make_windows, make_windows_with_context, OhlcvSeries, Scaler, SplitPlan,
    WindowedDataset,
};
use crate::error::{Error, Result};
use crate::models::{Architecture, ModelKind, ModelParams};
use crate::training::{train, EpochRecord, TrainConfig, TrainHistory};

/// One model to train in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub train: TrainConfig,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        self.architecture.kind()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub val_frac: f64,
    pub models: Vec<ModelSpec>,
    /// Train the models on separate threads. Results are identical either way.
    pub parallel: bool,
}

/// Row count, date range and content hash of the cleaned series, plus the
/// split sizes and the held-out horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub rows: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub sha256: String,
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
    pub test_dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub lookback: usize,
    pub horizon: usize,
    pub val_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: ModelKind,
    pub metrics: Metrics,
    pub forecast: Vec<f64>,
    pub history: TrainHistory,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset: DatasetInfo,
    pub models: Vec<ModelEntry>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Everything produced for one model, including what the report leaves out.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub history: TrainHistory,
    pub log: Vec<EpochRecord>,
    /// Horizon forecast in original units.
    pub forecast: Vec<f64>,
    pub metrics: Metrics,
    /// One-step-ahead fit on the validation split, in original units.
    pub val_metrics: Metrics,
}

/// The shared chronological split, scaled and windowed.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub plan: SplitPlan,
    pub scaler: Scaler,
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    /// Unscaled validation closes, aligned with `val` targets.
    pub val_actual: Vec<f64>,
    /// Scaled closes immediately before the test split.
    pub last_window: Vec<f64>,
    pub test_dates: Vec<NaiveDate>,
    pub test_actual: Vec<f64>,
}

impl PreparedData {
    /// Splits the closes, fits the scaler on the training split only, and
    /// builds windows. Validation windows reach back into the training tail.
    pub fn new(series: &OhlcvSeries, lookback: usize, horizon: usize, val_frac: f64) -> Result<Self> {
        if lookback == 0 {
            return Err(Error::invalid("lookback must be at least 1"));
        }
        let closes = series.closes();
        let dates = series.dates();
        let plan = chronological_split(closes.len(), horizon, val_frac)?;
        let (train_raw, val_raw, test_raw) = plan.apply(&closes);
        if train_raw.len() <= lookback {
            return Err(Error::invalid(format!(
                "training split has {} rows, need more than lookback {lookback}",
                train_raw.len()
            )));
        }
        let scaler = Scaler::fit(train_raw)?;
        let train_scaled = scaler.transform_all(train_raw);
        let val_scaled = scaler.transform_all(val_raw);
        let train = make_windows(&train_scaled, lookback)?;
        let val = make_windows_with_context(&train_scaled, &val_scaled, lookback)?;
        let history: Vec<f64> = scaler.transform_all(&closes[..plan.test.start]);
        Ok(Self {
            last_window: history[history.len() - lookback..].to_vec(),
            val_actual: val_raw.to_vec(),
            test_dates: dates[plan.test.clone()].to_vec(),
            test_actual: test_raw.to_vec(),
            plan,
            scaler,
            train,
            val,
        })
    }
}

pub fn dataset_info(series: &OhlcvSeries, data: &PreparedData) -> Result<DatasetInfo> {
    let (start_date, end_date) = match (series.first_date(), series.last_date()) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::Empty("dataset".into())),
    };
    Ok(DatasetInfo {
        rows: series.len(),
        start_date,
        end_date,
        sha256: hex::encode(Sha256::digest(series.to_csv_string().as_bytes())),
        train_rows: data.plan.train.len(),
        val_rows: data.plan.val.len(),
        test_rows: data.plan.test.len(),
        test_dates: data.test_dates.clone(),
        actual: data.test_actual.clone(),
    })
}

fn run_one(spec: &ModelSpec, data: &PreparedData, horizon: usize) -> Result<ModelRun> {
    let mut log = Vec::new();
    let (params, history) = train(
        &spec.architecture,
        &data.train,
        &data.val,
        &spec.train,
        &mut |r| log.push(*r),
    )?;
    let forecast = recursive_forecast(&params, &data.last_window, horizon, &data.scaler)?;
    let metrics = compute_metrics(&data.test_actual, &forecast)?;
    let val_pred = one_step_predictions(&params, &data.val, spec.train.batch_size)?;
    let val_metrics = compute_metrics(&data.val_actual, &data.scaler.inverse_all(&val_pred))?;
    Ok(ModelRun {
        spec: *spec,
        params,
        history,
        log,
        forecast,
        metrics,
        val_metrics,
    })
}

/// Trains every model on one shared split, forecasts the held-out horizon
/// recursively, and scores each forecast. Runs come back in `cfg.models`
/// order regardless of threading.
pub fn compare(series: &OhlcvSeries, cfg: &CompareConfig) -> Result<(ComparisonReport, Vec<ModelRun>)> {
    if cfg.models.is_empty() {
        return Err(Error::invalid("no models to compare"));
    }
    let data = PreparedData::new(series, cfg.lookback, cfg.horizon, cfg.val_frac)?;
    let dataset = dataset_info(series, &data)?;
    let attach = |spec: &ModelSpec, r: Result<ModelRun>| {
        r.map_err(|e| Error::Model {
            model: spec.kind().to_string(),
            source: Box::new(e),
        })
    };
    let results: Vec<Result<ModelRun>> = if cfg.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .models
                .iter()
                .map(|spec| (spec, s.spawn(|| run_one(spec, &data, cfg.horizon))))
                .collect();
            handles
                .into_iter()
                .map(|(spec, h)| attach(spec, h.join().expect("training thread panicked")))
                .collect()
        })
    } else {
        cfg.models
            .iter()
            .map(|spec| attach(spec, run_one(spec, &data, cfg.horizon)))
            .collect()
    };
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let models = runs
        .iter()
        .map(|r| ModelEntry {
            name: r.spec.kind(),
            metrics: r.metrics,
            forecast: r.forecast.clone(),
            history: r.history.clone(),
            config: ConfigEcho {
                architecture: r.spec.architecture,
                train: r.spec.train,
                lookback: cfg.lookback,
                horizon: cfg.horizon,
                val_frac: cfg.val_frac,
            },
        })
        .collect();
    Ok((ComparisonReport { dataset, models }, runs))
}
