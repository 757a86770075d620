use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::adf::{adf_test, difference, AdfResult, LagSelection};
use super::ohlcv::{CleanReport, OhlcvSeries};
use crate::error::{Error, Result};

/// Mean open and close over every row in one calendar month, across years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthBucket {
    pub mean_open: f64,
    pub mean_close: f64,
    pub count: usize,
}

/// Buckets indexed January = 0 .. December = 11; months without rows are `None`.
pub fn monthwise_means(series: &OhlcvSeries) -> [Option<MonthBucket>; 12] {
    let mut sums = [(0.0f64, 0.0f64, 0usize); 12];
    for b in series.bars() {
        let s = &mut sums[b.date.month0() as usize];
        s.0 += b.open;
        s.1 += b.close;
        s.2 += 1;
    }
    sums.map(|(open, close, count)| {
        (count > 0).then(|| MonthBucket {
            mean_open: open / count as f64,
            mean_close: close / count as f64,
            count,
        })
    })
}

/// Mean of `values` within each calendar (year, month), in date order.
pub fn monthly_means(dates: &[NaiveDate], values: &[f64]) -> Vec<((i32, u32), f64)> {
    let mut out: Vec<((i32, u32), f64, usize)> = Vec::new();
    for (d, &v) in dates.iter().zip(values) {
        let key = (d.year(), d.month());
        match out.last_mut() {
            Some((k, sum, n)) if *k == key => {
                *sum += v;
                *n += 1;
            }
            _ => out.push((key, v, 1)),
        }
    }
    out.into_iter()
        .map(|(k, sum, n)| (k, sum / n as f64))
        .collect()
}

/// Which series the stationarity test runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfFrequency {
    /// Calendar-month means of the daily high.
    #[default]
    Monthly,
    /// Daily highs as they are.
    Daily,
}

impl std::str::FromStr for AdfFrequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "monthly" => Ok(Self::Monthly),
            "daily" => Ok(Self::Daily),
            other => Err(Error::invalid(format!(
                "unknown ADF frequency {other:?} (expected monthly or daily)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthEntry {
    pub month: u32,
    pub mean_open: Option<f64>,
    pub mean_close: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfPair {
    pub frequency: AdfFrequency,
    pub level: AdfResult,
    pub differenced: AdfResult,
}

/// Exploratory summary of a cleaned series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub n_rows: usize,
    pub date_range: DateRange,
    pub missing_report: CleanReport,
    pub monthwise: Vec<MonthEntry>,
    pub adf: AdfPair,
}

/// ADF on the high price (monthly means or daily values), before and after
/// first differencing.
pub fn adf_on_highs(series: &OhlcvSeries, frequency: AdfFrequency) -> Result<AdfPair> {
    let highs = match frequency {
        AdfFrequency::Daily => series.highs(),
        AdfFrequency::Monthly => monthly_means(&series.dates(), &series.highs())
            .into_iter()
            .map(|(_, v)| v)
            .collect(),
    };
    let level = adf_test(&highs, LagSelection::default())?;
    let differenced = adf_test(&difference(&highs, 1)?, LagSelection::default())?;
    Ok(AdfPair {
        frequency,
        level,
        differenced,
    })
}

pub fn eda_report(
    series: &OhlcvSeries,
    missing_report: CleanReport,
    frequency: AdfFrequency,
) -> Result<EdaReport> {
    let (start, end) = match (series.first_date(), series.last_date()) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::Empty("EDA on an empty series".into())),
    };
    let monthwise = monthwise_means(series)
        .iter()
        .enumerate()
        .map(|(m, b)| MonthEntry {
            month: m as u32 + 1,
            mean_open: b.map(|b| b.mean_open),
            mean_close: b.map(|b| b.mean_close),
            count: b.map_or(0, |b| b.count),
        })
        .collect();
    Ok(EdaReport {
        n_rows: series.len(),
        date_range: DateRange { start, end },
        missing_report,
        monthwise,
        adf: adf_on_highs(series, frequency)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ohlcv::Bar;

    fn bar(date: NaiveDate, price: f64) -> Bar {
        Bar {
            date,
            open: price,
            high: price * 1.01,
            low: price * 0.99,
            close: price,
            volume: 1.0,
        }
    }

    #[test]
    fn single_month() {
        let bars = (1..=20)
            .map(|d| bar(NaiveDate::from_ymd_opt(2016, 1, d).unwrap(), d as f64))
            .collect();
        let m = monthwise_means(&OhlcvSeries::from_bars(bars));
        assert_eq!(m.iter().filter(|b| b.is_none()).count(), 11);
        let jan = m[0].unwrap();
        assert_eq!(jan.mean_open, 10.5);
        assert_eq!(jan.mean_close, 10.5);
    }

    #[test]
    fn constant_price_every_bucket_equal() {
        let dates = crate::data::business_days(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), 400);
        let s = OhlcvSeries::from_bars(dates.into_iter().map(|d| bar(d, 7.25)).collect());
        for b in monthwise_means(&s).iter().flatten() {
            assert_eq!(b.mean_open, 7.25);
            assert_eq!(b.mean_close, 7.25);
        }
    }

    #[test]
    fn doubled_february_is_greatest() {
        let dates = crate::data::business_days(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), 1500);
        let mut rng = crate::numerics::Rng::new(11);
        let bars = dates
            .into_iter()
            .map(|d| {
                let base = 10.0 + rng.uniform();
                let p = if d.month() == 2 { 2.0 * base } else { base };
                bar(d, p)
            })
            .collect();
        let m = monthwise_means(&OhlcvSeries::from_bars(bars));
        let feb = m[1].unwrap().mean_close;
        for (i, b) in m.iter().enumerate() {
            if i != 1 {
                assert!(b.unwrap().mean_close < feb);
            }
        }
    }

    #[test]
    fn monthly_means_group_by_year_and_month() {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).unwrap();
        let dates = [d(2015, 1, 5), d(2015, 1, 6), d(2015, 2, 2), d(2016, 1, 4)];
        let got = monthly_means(&dates, &[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(
            got,
            vec![((2015, 1), 2.0), ((2015, 2), 5.0), ((2016, 1), 7.0)]
        );
    }
}
