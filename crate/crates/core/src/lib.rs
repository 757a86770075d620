//! Univariate time-series forecasting toolkit.
//!
//! The crate covers the whole pipeline: OHLCV ingestion and exploratory
//! statistics ([`data`]), three forecasters with hand-derived gradients
//! ([`models`]), Adam-driven training with early stopping ([`training`]), and
//! recursive multi-step forecasting plus model comparison ([`forecast`]).

pub mod data;
pub mod error;
pub mod forecast;
pub mod models;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
