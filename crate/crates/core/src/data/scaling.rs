use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Min-max scaler fit on training values only. Values outside the training
/// range map outside `[0, 1]`; nothing is clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: f64,
    max: f64,
}

impl Scaler {
    pub fn fit(train: &[f64]) -> Result<Self> {
        if train.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scaler training data".into()));
        }
        let min = train.iter().copied().fold(f64::INFINITY, f64::min);
        let max = train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(Error::invalid(
                "scaler needs at least two distinct training values",
            ));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    #[inline]
    pub fn transform(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn inverse(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }

    pub fn transform_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.transform(v)).collect()
    }

    pub fn inverse_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.inverse(v)).collect()
    }
}

/// Convenience alias matching the pipeline's stage name.
pub fn fit_scaler(train_closes: &[f64]) -> Result<Scaler> {
    Scaler::fit(train_closes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        let s = Scaler::fit(&[3.0, 7.0, 5.0]).unwrap();
        assert_eq!(s.transform(3.0), 0.0);
        assert_eq!(s.transform(7.0), 1.0);
        assert!(s.transform(9.0) > 1.0);
    }

    #[test]
    fn constant_training_data_rejected() {
        assert!(Scaler::fit(&[2.0, 2.0]).is_err());
        assert!(Scaler::fit(&[]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(lo in -1e3f64..1e3, span in 1e-3f64..1e3, v in -1e4f64..1e4) {
            let s = Scaler::fit(&[lo, lo + span]).unwrap();
            prop_assert!((s.inverse(s.transform(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
