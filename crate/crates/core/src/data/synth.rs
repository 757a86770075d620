use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::ohlcv::{Bar, OhlcvSeries};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Synthetic series generators used as test fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    /// `amplitude·sin(2πt/period) + offset + noise·N(0,1)`
    Sine {
        amplitude: f64,
        period: f64,
        offset: f64,
        noise: f64,
    },
    /// Geometric Brownian motion with unit time step.
    Gbm { start: f64, drift: f64, volatility: f64 },
    /// Gaussian random walk.
    RandomWalk { start: f64, step: f64 },
}

impl SynthKind {
    /// Sine fixture used throughout the tests and the bundled CLI data.
    pub fn default_sine() -> Self {
        SynthKind::Sine {
            amplitude: 1.0,
            period: 40.0,
            offset: 3.0,
            noise: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        match *self {
            SynthKind::Sine { period, noise, .. } => {
                if !(noise >= 0.0) {
                    return bad("sine noise must be non-negative");
                }
                if !(period > 0.0) {
                    return bad("sine period must be positive");
                }
            }
            SynthKind::Gbm {
                start, volatility, ..
            } => {
                if !(volatility >= 0.0) {
                    return bad("gbm volatility must be non-negative");
                }
                if !(start > 0.0) {
                    return bad("gbm start must be positive");
                }
            }
            SynthKind::RandomWalk { step, .. } => {
                if !(step >= 0.0) {
                    return bad("random-walk step must be non-negative");
                }
            }
        }
        Ok(())
    }
}

pub fn synth_series(kind: SynthKind, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("synthetic series length must be at least 1"));
    }
    kind.validate()?;
    let mut rng = Rng::new(seed);
    let out = match kind {
        SynthKind::Sine {
            amplitude,
            period,
            offset,
            noise,
        } => (0..n)
            .map(|t| {
                let phase = std::f64::consts::TAU * t as f64 / period;
                amplitude * phase.sin() + offset + noise * rng.normal()
            })
            .collect(),
        SynthKind::Gbm {
            start,
            drift,
            volatility,
        } => {
            let mut v = Vec::with_capacity(n);
            let mut log_price = start.ln();
            v.push(start);
            for _ in 1..n {
                log_price += drift - 0.5 * volatility * volatility + volatility * rng.normal();
                v.push(log_price.exp());
            }
            v
        }
        SynthKind::RandomWalk { start, step } => {
            let mut v = Vec::with_capacity(n);
            let mut x = start;
            v.push(x);
            for _ in 1..n {
                x += step * rng.normal();
                v.push(x);
            }
            v
        }
    };
    Ok(out)
}

/// `n` consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Wraps a close-price path in plausible OHLCV bars on business days.
/// Open is the previous close; high and low widen the open/close range by up
/// to one percent.
pub fn synth_ohlcv(closes: &[f64], start: NaiveDate, seed: u64) -> Result<OhlcvSeries> {
    if closes.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::invalid("synthetic closes must be positive"));
    }
    let mut rng = Rng::new(seed);
    let dates = business_days(start, closes.len());
    let mut bars = Vec::with_capacity(closes.len());
    for (i, (&close, date)) in closes.iter().zip(dates).enumerate() {
        let open = if i == 0 { close } else { closes[i - 1] };
        let high = open.max(close) * (1.0 + 0.01 * rng.uniform());
        let low = open.min(close) * (1.0 - 0.01 * rng.uniform());
        let volume = (1e6 * (1.0 + rng.uniform())).round();
        bars.push(Bar {
            date,
            open,
            high,
            low,
            close,
            volume,
        });
    }
    Ok(OhlcvSeries::from_bars(bars))
}
