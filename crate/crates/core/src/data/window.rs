use std::ops::Range;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Lookback windows paired with the value that follows each one.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// samples × lookback
    pub inputs: Matrix,
    /// one target per sample
    pub targets: Vec<f64>,
    pub lookback: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    /// Gathers the given samples into a new dataset, preserving order.
    pub fn select(&self, indices: &[usize]) -> WindowedDataset {
        let lookback = self.lookback;
        let mut data = Vec::with_capacity(indices.len() * lookback);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.inputs.row(i));
            targets.push(self.targets[i]);
        }
        WindowedDataset {
            inputs: Matrix::new(indices.len(), lookback, data).expect("consistent shape"),
            targets,
            lookback,
        }
    }
}

/// Sample `i` is `values[i..i+lookback] → values[i+lookback]`.
pub fn make_windows(values: &[f64], lookback: usize) -> Result<WindowedDataset> {
    if lookback == 0 {
        return Err(Error::invalid("lookback must be at least 1"));
    }
    if values.len() <= lookback {
        return Err(Error::invalid(format!(
            "need more than {lookback} values for lookback {lookback}, got {}",
            values.len()
        )));
    }
    let samples = values.len() - lookback;
    let mut data = Vec::with_capacity(samples * lookback);
    for i in 0..samples {
        data.extend_from_slice(&values[i..i + lookback]);
    }
    Ok(WindowedDataset {
        inputs: Matrix::new(samples, lookback, data)?,
        targets: values[lookback..].to_vec(),
        lookback,
    })
}

/// Windows whose targets are exactly `values`, with the first windows reaching
/// back into `context` (typically the tail of the preceding split).
pub fn make_windows_with_context(
    context: &[f64],
    values: &[f64],
    lookback: usize,
) -> Result<WindowedDataset> {
    if context.len() < lookback {
        return Err(Error::invalid(format!(
            "context of {} values is shorter than lookback {lookback}",
            context.len()
        )));
    }
    let mut joined = context[context.len() - lookback..].to_vec();
    joined.extend_from_slice(values);
    make_windows(&joined, lookback)
}

/// Index ranges of a chronological train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitPlan {
    pub fn apply<'a, T>(&self, items: &'a [T]) -> (&'a [T], &'a [T], &'a [T]) {
        (
            &items[self.train.clone()],
            &items[self.val.clone()],
            &items[self.test.clone()],
        )
    }
}

/// Test is the final `test_len` rows, validation the final `⌊val_frac·rest⌋`
/// rows before it, train the prefix. Nothing is shuffled.
pub fn chronological_split(n: usize, test_len: usize, val_frac: f64) -> Result<SplitPlan> {
    if test_len == 0 {
        return Err(Error::invalid("test length must be at least 1"));
    }
    if !(val_frac > 0.0 && val_frac < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction must be in (0, 1), got {val_frac}"
        )));
    }
    if n <= test_len {
        return Err(Error::invalid(format!(
            "series of {n} rows is too short for a test split of {test_len}"
        )));
    }
    let rest = n - test_len;
    let val_len = (val_frac * rest as f64).floor() as usize;
    if val_len == 0 || val_len >= rest {
        return Err(Error::invalid(format!(
            "series of {n} rows leaves no room for train and validation splits"
        )));
    }
    let train_len = rest - val_len;
    Ok(SplitPlan {
        train: 0..train_len,
        val: train_len..rest,
        test: rest..n,
    })
}
