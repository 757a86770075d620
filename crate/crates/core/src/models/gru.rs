//! GRU cell (Cho et al. formulation) with a dense head on the final state.
//!
//! ```text
//! z_t = σ(W_z·[h_{t−1}, x_t] + b_z)
//! r_t = σ(W_r·[h_{t−1}, x_t] + b_r)
//! h̃_t = tanh(W_h·[r_t ⊙ h_{t−1}, x_t] + b_h)
//! h_t = (1 − z_t) ⊙ h_{t−1} + z_t ⊙ h̃_t
//! ```

use super::ops::{
    acc_back, acc_outer, acc_row_sums, affine, input_column, sigmoid_inplace, stack_rows,
    tanh_inplace, top_rows,
};
use super::{check_inputs, head_backward, head_forward, Forecaster};
use crate::error::{Error, Result};
use crate::numerics::{init_xavier, Matrix, ParamSet, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    pub b_z: Matrix,
    pub b_r: Matrix,
    pub b_h: Matrix,
    pub head_w: Matrix,
    pub head_b: Matrix,
}

impl GruParams {
    pub fn zeros(hidden: usize) -> Self {
        let w = Matrix::zeros(hidden, hidden + 1);
        let b = Matrix::zeros(hidden, 1);
        Self {
            w_z: w.clone(),
            w_r: w.clone(),
            w_h: w,
            b_z: b.clone(),
            b_r: b.clone(),
            b_h: b,
            head_w: Matrix::zeros(1, hidden),
            head_b: Matrix::zeros(1, 1),
        }
    }

    pub fn init(hidden: usize, rng: &mut Rng) -> Result<Self> {
        let mut p = Self::zeros(hidden);
        p.w_z = init_xavier(rng, hidden, hidden + 1)?;
        p.w_r = init_xavier(rng, hidden, hidden + 1)?;
        p.w_h = init_xavier(rng, hidden, hidden + 1)?;
        p.head_w = init_xavier(rng, 1, hidden)?;
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.w_z.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden();
        let expected = [
            (&self.w_z, (h, h + 1)),
            (&self.w_r, (h, h + 1)),
            (&self.w_h, (h, h + 1)),
            (&self.b_z, (h, 1)),
            (&self.b_r, (h, 1)),
            (&self.b_h, (h, 1)),
            (&self.head_w, (1, h)),
            (&self.head_b, (1, 1)),
        ];
        for (m, shape) in expected {
            if m.shape() != shape || h == 0 {
                return Err(Error::Shape {
                    op: "gru params",
                    lhs: m.shape(),
                    rhs: shape,
                });
            }
        }
        Ok(())
    }
}

impl ParamSet for GruParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &Matrix)) {
        f("w_z", &self.w_z);
        f("w_r", &self.w_r);
        f("w_h", &self.w_h);
        f("b_z", &self.b_z);
        f("b_r", &self.b_r);
        f("b_h", &self.b_h);
        f("head_w", &self.head_w);
        f("head_b", &self.head_b);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Matrix)) {
        f("w_z", &mut self.w_z);
        f("w_r", &mut self.w_r);
        f("w_h", &mut self.w_h);
        f("b_z", &mut self.b_z);
        f("b_r", &mut self.b_r);
        f("b_h", &mut self.b_h);
        f("head_w", &mut self.head_w);
        f("head_b", &mut self.head_b);
    }
}

#[derive(Debug, Clone)]
pub struct GruStep {
    /// `[h_{t−1}; x_t]`
    pub z_in: Matrix,
    /// `[r_t ⊙ h_{t−1}; x_t]`
    pub zr_in: Matrix,
    pub z: Matrix,
    pub r: Matrix,
    pub h_tilde: Matrix,
    pub h: Matrix,
}

#[derive(Debug, Clone)]
pub struct GruCache {
    pub hidden: usize,
    pub batch: usize,
    pub steps: Vec<GruStep>,
}

impl Forecaster for GruParams {
    type Cache = GruCache;

    fn forward_batch(&self, inputs: &Matrix) -> Result<(Vec<f64>, GruCache)> {
        self.validate()?;
        check_inputs(inputs)?;
        let (batch, seq) = inputs.shape();
        let hidden = self.hidden();
        let mut h = Matrix::zeros(hidden, batch);
        let mut steps = Vec::with_capacity(seq);
        for t in 0..seq {
            let x = input_column(inputs, t);
            let z_in = stack_rows(&h, &x);
            let mut z = affine(&self.w_z, &z_in, &self.b_z);
            let mut r = affine(&self.w_r, &z_in, &self.b_r);
            sigmoid_inplace(&mut z);
            sigmoid_inplace(&mut r);
            let zr_in = stack_rows(&r.hadamard(&h)?, &x);
            let mut h_tilde = affine(&self.w_h, &zr_in, &self.b_h);
            tanh_inplace(&mut h_tilde);
            let mut h_next = Matrix::zeros(hidden, batch);
            for k in 0..h_next.len() {
                let zk = z.as_slice()[k];
                h_next.as_mut_slice()[k] =
                    (1.0 - zk) * h.as_slice()[k] + zk * h_tilde.as_slice()[k];
            }
            h = h_next.clone();
            steps.push(GruStep {
                z_in,
                zr_in,
                z,
                r,
                h_tilde,
                h: h_next,
            });
        }
        let preds = head_forward(&self.head_w, &self.head_b, &h);
        Ok((
            preds,
            GruCache {
                hidden,
                batch,
                steps,
            },
        ))
    }

    fn backward_batch(&self, cache: &GruCache, d_pred: &[f64]) -> Result<GruParams> {
        self.validate()?;
        let hidden = self.hidden();
        if cache.hidden != hidden || cache.batch != d_pred.len() || cache.steps.is_empty() {
            return Err(Error::invalid(format!(
                "GRU cache (hidden {}, batch {}) does not match params (hidden {hidden}) \
                 and upstream gradient (batch {})",
                cache.hidden,
                cache.batch,
                d_pred.len()
            )));
        }
        let batch = cache.batch;
        let n = hidden * batch;
        let mut grad = self.zeros_like();
        let last = &cache.steps.last().expect("non-empty").h;
        let mut dh = head_backward(
            &self.head_w,
            last,
            d_pred,
            &mut grad.head_w,
            &mut grad.head_b,
        );
        let zero_h = Matrix::zeros(hidden, batch);

        for t in (0..cache.steps.len()).rev() {
            let s = &cache.steps[t];
            let h_prev = if t == 0 { &zero_h } else { &cache.steps[t - 1].h };
            let mut da_z = Matrix::zeros(hidden, batch);
            let mut da_h = Matrix::zeros(hidden, batch);
            let mut dh_prev = Matrix::zeros(hidden, batch);
            for k in 0..n {
                let d = dh.as_slice()[k];
                let z = s.z.as_slice()[k];
                let ht = s.h_tilde.as_slice()[k];
                let hp = h_prev.as_slice()[k];
                da_z.as_mut_slice()[k] = d * (ht - hp) * z * (1.0 - z);
                da_h.as_mut_slice()[k] = d * z * (1.0 - ht * ht);
                dh_prev.as_mut_slice()[k] = d * (1.0 - z);
            }
            acc_outer(&mut grad.w_h, &da_h, &s.zr_in);
            acc_row_sums(&mut grad.b_h, &da_h);
            let mut dzr = Matrix::zeros(hidden + 1, batch);
            acc_back(&mut dzr, &self.w_h, &da_h);

            let mut da_r = Matrix::zeros(hidden, batch);
            for k in 0..n {
                let d_rh = dzr.as_slice()[k];
                let r = s.r.as_slice()[k];
                da_r.as_mut_slice()[k] = d_rh * h_prev.as_slice()[k] * r * (1.0 - r);
                dh_prev.as_mut_slice()[k] += d_rh * r;
            }
            acc_outer(&mut grad.w_z, &da_z, &s.z_in);
            acc_outer(&mut grad.w_r, &da_r, &s.z_in);
            acc_row_sums(&mut grad.b_z, &da_z);
            acc_row_sums(&mut grad.b_r, &da_r);
            if t > 0 {
                let mut dz_in = Matrix::zeros(hidden + 1, batch);
                acc_back(&mut dz_in, &self.w_z, &da_z);
                acc_back(&mut dz_in, &self.w_r, &da_r);
                dh_prev.axpy(1.0, &top_rows(&dz_in, hidden))?;
                dh = dh_prev;
            }
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;

    fn random_params(hidden: usize, seed: u64) -> GruParams {
        let mut rng = Rng::new(seed);
        let mut p = GruParams::init(hidden, &mut rng).unwrap();
        p.b_z = Matrix::from_fn(hidden, 1, |_, _| rng.uniform_range(-0.5, 0.5));
        p.b_h = Matrix::from_fn(hidden, 1, |_, _| rng.uniform_range(-0.5, 0.5));
        p.head_b[(0, 0)] = -0.2;
        p
    }

    #[test]
    fn zero_params_predict_head_bias() {
        let mut p = GruParams::zeros(3);
        p.head_b[(0, 0)] = 1.25;
        let (y, cache) = p.forward(&[0.4, 0.1, 0.8]).unwrap();
        assert_eq!(y, 1.25);
        for s in &cache.steps {
            assert!(s.z.as_slice().iter().all(|&v| v == 0.5));
            assert!(s.r.as_slice().iter().all(|&v| v == 0.5));
            assert!(s.h.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn closed_update_gate_freezes_state() {
        let mut p = random_params(4, 9);
        p.b_z.fill(-800.0);
        let (_, cache) = p.forward(&[0.9, 0.1, 0.5, 0.7]).unwrap();
        for s in &cache.steps {
            assert!(s.h.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let p = random_params(4, 200 + seed);
            let xs = [0.3, 0.9, 0.2, 0.6, 0.4];
            let target = 0.5;
            let (y, cache) = p.forward(&xs).unwrap();
            let grad = p.backward(&cache, 2.0 * (y - target)).unwrap();
            let err = grad_check(
                |q: &GruParams| (q.predict(&xs).unwrap() - target).powi(2),
                &p,
                &grad,
                1e-6,
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn state_is_convex_combination() {
        let p = random_params(5, 4);
        let (_, cache) = p.forward(&[0.1, 0.5, 0.9, 0.3, 0.2, 0.8]).unwrap();
        let mut prev = Matrix::zeros(5, 1);
        for s in &cache.steps {
            for k in 0..5 {
                let (a, b) = (prev.as_slice()[k], s.h_tilde.as_slice()[k]);
                let h = s.h.as_slice()[k];
                assert!(a.min(b) - 1e-15 <= h && h <= a.max(b) + 1e-15);
            }
            prev = s.h.clone();
        }
    }
}
