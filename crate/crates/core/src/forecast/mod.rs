//! Recursive multi-step forecasting, regression metrics and the three-model
//! comparison with its plot artifacts.

mod compare;
mod metrics;
mod plot;
mod recursive;

pub use compare::{
    compare, dataset_info, CompareConfig, ComparisonReport, DatasetInfo, ModelEntry, ModelRun,
    ModelSpec, PreparedData,
};
pub use metrics::{compute_metrics, Metrics};
pub use plot::{bar_chart_svg, forecast_csv, forecast_svg, line_chart_svg, Series};
pub use recursive::{one_step_predictions, recursive_forecast};
