use super::Matrix;
use crate::error::{Error, Result};

/// A named collection of parameter matrices, visited in a fixed order.
///
/// The visiting order defines the flat layout used by the optimizer, the
/// gradient checker, and the weights file.
pub trait ParamSet: Clone {
    fn visit(&self, f: &mut dyn FnMut(&str, &Matrix));

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Matrix));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, m| n += m.len());
        n
    }

    fn shapes(&self) -> Vec<(String, (usize, usize))> {
        let mut out = Vec::new();
        self.visit(&mut |name, m| out.push((name.to_string(), m.shape())));
        out
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, m| out.extend_from_slice(m.as_slice()));
        out
    }

    fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_params();
        if flat.len() != n {
            return Err(Error::invalid(format!(
                "flat parameter vector has {} values, expected {n}",
                flat.len()
            )));
        }
        let mut offset = 0;
        self.visit_mut(&mut |_, m| {
            let len = m.len();
            m.as_mut_slice().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        });
        Ok(())
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.visit_mut(&mut |_, m| m.fill(0.0));
        z
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.shapes() == other.shapes()
    }

    fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, m| ok &= m.is_finite());
        ok
    }

    fn global_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit(&mut |_, m| s += m.sum_sq());
        s.sqrt()
    }

    fn scale_inplace(&mut self, k: f64) {
        self.visit_mut(&mut |_, m| m.map_inplace(|v| v * k));
    }

    /// `self += alpha · other`, matrix by matrix.
    fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::invalid("parameter layouts differ"));
        }
        let flat = other.to_flat();
        let mut offset = 0;
        self.visit_mut(&mut |_, m| {
            for v in m.as_mut_slice() {
                *v += alpha * flat[offset];
                offset += 1;
            }
        });
        Ok(())
    }
}

impl ParamSet for Matrix {
    fn visit(&self, f: &mut dyn FnMut(&str, &Matrix)) {
        f("matrix", self)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Matrix)) {
        f("matrix", self)
    }
}
