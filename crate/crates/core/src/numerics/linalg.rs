use super::Matrix;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// Pivots below `1e-12` times the largest diagonal entry count as singular.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape {
            op: "cholesky",
            lhs: a.shape(),
            rhs: (n, n),
        });
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) {
            return Err(Error::DegenerateSeries(format!(
                "matrix is singular or not positive definite (pivot {j})"
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky(a)?;
    let n = l.rows();
    // L⁻¹ by forward substitution, then A⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = Matrix::zeros(n, n);
    for col in 0..n {
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * linv[(k, col)];
            }
            linv[(i, col)] = s / l[(i, i)];
        }
    }
    linv.t_matmul(&linv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_spd() {
        let a = Matrix::from_rows(&[
            vec![4.0, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ])
        .unwrap();
        let inv = spd_inverse(&a).unwrap();
        let eye = a.matmul(&inv).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!((eye[(r, c)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(cholesky(&a).is_err());
    }
}
