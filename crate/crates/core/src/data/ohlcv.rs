use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading day. Missing values are carried as `NaN` until [`clean`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    fn within_envelope(&self) -> bool {
        let lo = self.open.min(self.close);
        let hi = self.open.max(self.close);
        self.low <= lo && hi <= self.high
    }

    fn prices_positive(&self) -> bool {
        self.open > 0.0 && self.high > 0.0 && self.low > 0.0 && self.close > 0.0
    }
}

/// Daily OHLCV rows sorted by date.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OhlcvSeries {
    bars: Vec<Bar>,
}

impl OhlcvSeries {
    /// Builds a series from bars in any order; they are sorted by date.
    pub fn from_bars(mut bars: Vec<Bar>) -> Self {
        bars.sort_by_key(|b| b.date);
        Self { bars }
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn opens(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.open).collect()
    }

    pub fn highs(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.high).collect()
    }

    pub fn lows(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.low).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.volume).collect()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.bars.first().map(|b| b.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.bars.last().map(|b| b.date)
    }

    /// Rows `[start, end)` as a new series.
    pub fn slice(&self, start: usize, end: usize) -> OhlcvSeries {
        OhlcvSeries {
            bars: self.bars[start..end].to_vec(),
        }
    }

    /// True when every invariant of a cleaned series holds.
    pub fn is_clean(&self) -> bool {
        self.bars.windows(2).all(|w| w[0].date < w[1].date)
            && self.bars.iter().all(|b| {
                b.prices_positive()
                    && b.within_envelope()
                    && b.volume.is_finite()
                    && b.volume >= 0.0
            })
    }

    /// Renders the series as `Date,Open,High,Low,Close,Volume` CSV with ISO
    /// dates and shortest round-trip numbers.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["Date", "Open", "High", "Low", "Close", "Volume"])
            .expect("in-memory write");
        for b in &self.bars {
            w.write_record([
                b.date.format("%Y-%m-%d").to_string(),
                b.open.to_string(),
                b.high.to_string(),
                b.low.to_string(),
                b.close.to_string(),
                b.volume.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Accepts `2015/1/2` and `2015-01-02` (and their zero-padded variants).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    // Timestamps such as "2015-01-02 00:00:00" keep only the date part.
    let s = s.split_whitespace().next().unwrap_or(s);
    NaiveDate::parse_from_str(s, "%Y/%m/%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
        .ok()
}

fn parse_value(field: &str) -> std::result::Result<f64, String> {
    let f = field.trim();
    if f.is_empty()
        || f.eq_ignore_ascii_case("nan")
        || f.eq_ignore_ascii_case("null")
        || f.eq_ignore_ascii_case("na")
    {
        return Ok(f64::NAN);
    }
    f.replace(',', "")
        .parse::<f64>()
        .map_err(|_| format!("invalid number {f:?}"))
}

const COLUMNS: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

/// Parses an OHLCV CSV file. See [`parse_csv_str`].
pub fn parse_csv(path: &Path) -> Result<OhlcvSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_str(&text, &path.display().to_string())
}

/// Parses OHLCV rows from CSV text. Columns are located by header name,
/// case-insensitively; other columns (such as an unnamed index) are ignored.
/// Missing numeric fields become `NaN` for [`clean`] to handle.
pub fn parse_csv_str(text: &str, source: &str) -> Result<OhlcvSeries> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty(format!("{source}: no header row")));
    }
    let mut index = [usize::MAX; 6];
    for (slot, want) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(want))
            .ok_or_else(|| parse_err(1, format!("missing column {want:?}")))?;
    }

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let date = parse_date(field(0))
            .ok_or_else(|| parse_err(line, format!("invalid date {:?}", field(0))))?;
        let mut vals = [0.0; 5];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parse_value(field(k + 1)).map_err(|m| parse_err(line, m))?;
        }
        bars.push(Bar {
            date,
            open: vals[0],
            high: vals[1],
            low: vals[2],
            close: vals[3],
            volume: vals[4],
        });
    }
    if bars.is_empty() {
        return Err(Error::Empty(format!("{source}: no data rows")));
    }
    Ok(OhlcvSeries::from_bars(bars))
}

/// Counts of rows touched by [`clean`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub dropped_missing_close: usize,
    pub dropped_duplicate_date: usize,
    pub dropped_envelope: usize,
    pub dropped_non_positive: usize,
    /// Leading rows with missing open/high/low and no earlier close.
    pub dropped_unimputable: usize,
    pub imputed_open: usize,
    pub imputed_high: usize,
    pub imputed_low: usize,
    pub imputed_volume: usize,
}

impl CleanReport {
    pub fn dropped(&self) -> usize {
        self.dropped_missing_close
            + self.dropped_duplicate_date
            + self.dropped_envelope
            + self.dropped_non_positive
            + self.dropped_unimputable
    }

    pub fn imputed(&self) -> usize {
        self.imputed_open + self.imputed_high + self.imputed_low + self.imputed_volume
    }

    pub fn is_zero(&self) -> bool {
        self.dropped() == 0 && self.imputed() == 0
    }
}

/// Drops rows with a missing close, duplicate dates, non-positive prices or a
/// violated low/high envelope; imputes missing open/high/low from the previous
/// retained close and missing volume as zero.
pub fn clean(series: &OhlcvSeries) -> Result<(OhlcvSeries, CleanReport)> {
    let mut report = CleanReport::default();
    let mut kept: Vec<Bar> = Vec::with_capacity(series.len());
    for bar in series.bars() {
        let mut b = *bar;
        if !b.close.is_finite() {
            report.dropped_missing_close += 1;
            continue;
        }
        if kept.last().is_some_and(|prev| prev.date >= b.date) {
            report.dropped_duplicate_date += 1;
            continue;
        }
        let prev_close = kept.last().map(|p| p.close);
        let mut imputed = [false; 3];
        let mut unimputable = false;
        for (value, flag) in [&mut b.open, &mut b.high, &mut b.low]
            .into_iter()
            .zip(imputed.iter_mut())
        {
            if !value.is_finite() {
                match prev_close {
                    Some(c) => {
                        *value = c;
                        *flag = true;
                    }
                    None => unimputable = true,
                }
            }
        }
        if unimputable {
            report.dropped_unimputable += 1;
            continue;
        }
        let volume_missing = !b.volume.is_finite();
        if volume_missing {
            b.volume = 0.0;
        }
        if !b.prices_positive() || b.volume < 0.0 {
            report.dropped_non_positive += 1;
            continue;
        }
        if !b.within_envelope() {
            report.dropped_envelope += 1;
            continue;
        }
        report.imputed_open += imputed[0] as usize;
        report.imputed_high += imputed[1] as usize;
        report.imputed_low += imputed[2] as usize;
        report.imputed_volume += volume_missing as usize;
        kept.push(b);
    }
    if kept.is_empty() {
        return Err(Error::Empty("cleaning dropped every row".into()));
    }
    Ok((OhlcvSeries { bars: kept }, report))
}
