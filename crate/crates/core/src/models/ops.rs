//! Small batched helpers shared by the recurrent cells.

use crate::numerics::{gemm, sigmoid_scalar, Matrix};

/// `out[r][c] += bias[r][0]` for a column bias.
pub(crate) fn add_col_bias(out: &mut Matrix, bias: &Matrix) {
    debug_assert_eq!(bias.shape(), (out.rows(), 1));
    for r in 0..out.rows() {
        let b = bias[(r, 0)];
        out.row_mut(r).iter_mut().for_each(|v| *v += b);
    }
}

/// `out[r][c] += bias[0][c]` for a row bias.
pub(crate) fn add_row_bias(out: &mut Matrix, bias: &Matrix) {
    debug_assert_eq!(bias.shape(), (1, out.cols()));
    let b = bias.row(0);
    for r in 0..out.rows() {
        for (v, &bv) in out.row_mut(r).iter_mut().zip(b) {
            *v += bv;
        }
    }
}

/// Accumulates row sums of `m` into the column vector `acc`.
pub(crate) fn acc_row_sums(acc: &mut Matrix, m: &Matrix) {
    for r in 0..m.rows() {
        acc[(r, 0)] += m.row(r).iter().sum::<f64>();
    }
}

/// Accumulates column sums of `m` into the row vector `acc`.
pub(crate) fn acc_col_sums(acc: &mut Matrix, m: &Matrix) {
    let a = acc.row_mut(0);
    for r in 0..m.rows() {
        for (s, &v) in a.iter_mut().zip(m.row(r)) {
            *s += v;
        }
    }
}

/// `w · z + b` with a column bias.
pub(crate) fn affine(w: &Matrix, z: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(w.rows(), z.cols());
    gemm(&mut out, w, false, z, false, 1.0, 0.0).expect("validated shapes");
    add_col_bias(&mut out, b);
    out
}

pub(crate) fn sigmoid_inplace(m: &mut Matrix) {
    m.map_inplace(sigmoid_scalar);
}

pub(crate) fn tanh_inplace(m: &mut Matrix) {
    m.map_inplace(f64::tanh);
}

/// Stacks `top` (h × B) over the row vector `bottom` (1 × B).
pub(crate) fn stack_rows(top: &Matrix, bottom: &[f64]) -> Matrix {
    debug_assert_eq!(top.cols(), bottom.len());
    let mut data = Vec::with_capacity(top.len() + bottom.len());
    data.extend_from_slice(top.as_slice());
    data.extend_from_slice(bottom);
    Matrix::new(top.rows() + 1, top.cols(), data).expect("consistent shape")
}

/// The first `rows` rows of `m`.
pub(crate) fn top_rows(m: &Matrix, rows: usize) -> Matrix {
    Matrix::new(rows, m.cols(), m.as_slice()[..rows * m.cols()].to_vec())
        .expect("consistent shape")
}

/// Column `t` of the B × T input matrix as a slice-like vector.
pub(crate) fn input_column(inputs: &Matrix, t: usize) -> Vec<f64> {
    (0..inputs.rows()).map(|b| inputs[(b, t)]).collect()
}

/// `dw += da · zᵀ`
pub(crate) fn acc_outer(dw: &mut Matrix, da: &Matrix, z: &Matrix) {
    gemm(dw, da, false, z, true, 1.0, 1.0).expect("validated shapes");
}

/// `dz += wᵀ · da`
pub(crate) fn acc_back(dz: &mut Matrix, w: &Matrix, da: &Matrix) {
    gemm(dz, w, true, da, false, 1.0, 1.0).expect("validated shapes");
}
