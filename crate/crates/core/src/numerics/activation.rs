use super::Matrix;

#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

pub fn tanh(x: &Matrix) -> Matrix {
    x.map(f64::tanh)
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| v.max(0.0))
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    softmax_rows_inplace(&mut out);
    out
}

pub fn softmax_rows_inplace(x: &mut Matrix) {
    for r in 0..x.rows() {
        let row = x.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert_eq!(tanh(&Matrix::zeros(1, 1))[(0, 0)], 0.0);
        let s = softmax_rows(&Matrix::zeros(1, 3));
        for &v in s.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn saturates_without_overflow() {
        assert_eq!(sigmoid_scalar(1e4), 1.0);
        assert_eq!(sigmoid_scalar(-1e4), 0.0);
        let s = softmax_rows(&Matrix::row_vector(&[1e308, 0.0, -1e308]));
        assert!(s.is_finite());
        assert_eq!(s[(0, 0)], 1.0);
    }

    proptest! {
        #[test]
        fn sigmoid_symmetry(v in -30.0f64..30.0) {
            prop_assert!((sigmoid_scalar(v) + sigmoid_scalar(-v) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn softmax_rows_sum_to_one(
            vals in proptest::collection::vec(-50.0f64..50.0, 12)
        ) {
            let m = Matrix::new(3, 4, vals).unwrap();
            let s = softmax_rows(&m);
            for r in 0..3 {
                let sum: f64 = s.row(r).iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            }
        }
    }
}
