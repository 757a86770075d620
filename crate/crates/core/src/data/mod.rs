//! Data preparation: OHLCV ingestion and cleaning, exploratory statistics,
//! stationarity testing, scaling and windowing.

mod adf;
mod eda;
mod ohlcv;
mod scaling;
mod synth;
mod window;

pub use adf::{adf_test, default_max_lag, difference, mackinnon_p_value, AdfResult, LagSelection};
pub use eda::{
    adf_on_highs, eda_report, monthly_means, monthwise_means, AdfFrequency, AdfPair, DateRange,
    EdaReport, MonthBucket, MonthEntry,
};
pub use ohlcv::{clean, parse_csv, parse_csv_str, parse_date, Bar, CleanReport, OhlcvSeries};
pub use scaling::{fit_scaler, Scaler};
pub use synth::{business_days, synth_ohlcv, synth_series, SynthKind};
pub use window::{
    chronological_split, make_windows, make_windows_with_context, SplitPlan, WindowedDataset,
};
