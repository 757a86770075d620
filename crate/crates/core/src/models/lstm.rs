//! LSTM cell unrolled over the lookback window, read out by a dense head on
//! the final hidden state.
//!
//! ```text
//! f_t = σ(W_f·[h_{t−1}, x_t] + b_f)
//! i_t = σ(W_i·[h_{t−1}, x_t] + b_i)
//! C̃_t = tanh(W_C·[h_{t−1}, x_t] + b_C)
//! C_t = f_t ⊙ C_{t−1} + i_t ⊙ C̃_t
//! o_t = σ(W_o·[h_{t−1}, x_t] + b_o)
//! h_t = o_t ⊙ tanh(C_t)
//! ŷ   = head_w · h_T + head_b
//! ```
//!
//! States are kept column-wise (hidden × batch) so one step of a whole batch
//! is a single product per gate.

use super::ops::{
    acc_back, acc_outer, acc_row_sums, affine, input_column, sigmoid_inplace, stack_rows,
    tanh_inplace, top_rows,
};
use super::{check_inputs, head_backward, head_forward, Forecaster};
use crate::error::{Error, Result};
use crate::numerics::{init_xavier, Matrix, ParamSet, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Matrix,
    pub b_i: Matrix,
    pub b_c: Matrix,
    pub b_o: Matrix,
    pub head_w: Matrix,
    pub head_b: Matrix,
}

impl LstmParams {
    /// All-zero parameters.
    pub fn zeros(hidden: usize) -> Self {
        let w = Matrix::zeros(hidden, hidden + 1);
        let b = Matrix::zeros(hidden, 1);
        Self {
            w_f: w.clone(),
            w_i: w.clone(),
            w_c: w.clone(),
            w_o: w,
            b_f: b.clone(),
            b_i: b.clone(),
            b_c: b.clone(),
            b_o: b,
            head_w: Matrix::zeros(1, hidden),
            head_b: Matrix::zeros(1, 1),
        }
    }

    /// Xavier-uniform weights, zero biases except the forget gate.
    pub fn init(hidden: usize, forget_bias: f64, rng: &mut Rng) -> Result<Self> {
        let mut p = Self::zeros(hidden);
        p.w_f = init_xavier(rng, hidden, hidden + 1)?;
        p.w_i = init_xavier(rng, hidden, hidden + 1)?;
        p.w_c = init_xavier(rng, hidden, hidden + 1)?;
        p.w_o = init_xavier(rng, hidden, hidden + 1)?;
        p.b_f.fill(forget_bias);
        p.head_w = init_xavier(rng, 1, hidden)?;
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.w_f.rows()
    }

    /// Checks that every block agrees with the hidden size.
    pub fn validate(&self) -> Result<()> {
        let h = self.hidden();
        let expected = [
            (&self.w_f, (h, h + 1)),
            (&self.w_i, (h, h + 1)),
            (&self.w_c, (h, h + 1)),
            (&self.w_o, (h, h + 1)),
            (&self.b_f, (h, 1)),
            (&self.b_i, (h, 1)),
            (&self.b_c, (h, 1)),
            (&self.b_o, (h, 1)),
            (&self.head_w, (1, h)),
            (&self.head_b, (1, 1)),
        ];
        for (m, shape) in expected {
            if m.shape() != shape || h == 0 {
                return Err(Error::Shape {
                    op: "lstm params",
                    lhs: m.shape(),
                    rhs: shape,
                });
            }
        }
        Ok(())
    }
}

impl ParamSet for LstmParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &Matrix)) {
        f("w_f", &self.w_f);
        f("w_i", &self.w_i);
        f("w_c", &self.w_c);
        f("w_o", &self.w_o);
        f("b_f", &self.b_f);
        f("b_i", &self.b_i);
        f("b_c", &self.b_c);
        f("b_o", &self.b_o);
        f("head_w", &self.head_w);
        f("head_b", &self.head_b);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Matrix)) {
        f("w_f", &mut self.w_f);
        f("w_i", &mut self.w_i);
        f("w_c", &mut self.w_c);
        f("w_o", &mut self.w_o);
        f("b_f", &mut self.b_f);
        f("b_i", &mut self.b_i);
        f("b_c", &mut self.b_c);
        f("b_o", &mut self.b_o);
        f("head_w", &mut self.head_w);
        f("head_b", &mut self.head_b);
    }
}

/// Activations of one timestep, all hidden × batch except `z`.
#[derive(Debug, Clone)]
pub struct LstmStep {
    /// `[h_{t−1}; x_t]`, (hidden + 1) × batch
    pub z: Matrix,
    pub f: Matrix,
    pub i: Matrix,
    pub c_tilde: Matrix,
    pub o: Matrix,
    pub c: Matrix,
    pub tanh_c: Matrix,
    pub h: Matrix,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    pub hidden: usize,
    pub batch: usize,
    pub steps: Vec<LstmStep>,
}

impl LstmCache {
    pub fn final_hidden(&self) -> &Matrix {
        &self.steps.last().expect("non-empty sequence").h
    }
}

impl Forecaster for LstmParams {
    type Cache = LstmCache;

    fn forward_batch(&self, inputs: &Matrix) -> Result<(Vec<f64>, LstmCache)> {
        self.validate()?;
        check_inputs(inputs)?;
        let (batch, seq) = inputs.shape();
        let hidden = self.hidden();
        let mut h = Matrix::zeros(hidden, batch);
        let mut c = Matrix::zeros(hidden, batch);
        let mut steps = Vec::with_capacity(seq);
        for t in 0..seq {
            let z = stack_rows(&h, &input_column(inputs, t));
            let mut f = affine(&self.w_f, &z, &self.b_f);
            let mut i = affine(&self.w_i, &z, &self.b_i);
            let mut c_tilde = affine(&self.w_c, &z, &self.b_c);
            let mut o = affine(&self.w_o, &z, &self.b_o);
            sigmoid_inplace(&mut f);
            sigmoid_inplace(&mut i);
            tanh_inplace(&mut c_tilde);
            sigmoid_inplace(&mut o);
            let mut c_next = Matrix::zeros(hidden, batch);
            for k in 0..c_next.len() {
                c_next.as_mut_slice()[k] = f.as_slice()[k] * c.as_slice()[k]
                    + i.as_slice()[k] * c_tilde.as_slice()[k];
            }
            let tanh_c = c_next.map(f64::tanh);
            let h_next = o.hadamard(&tanh_c)?;
            c = c_next.clone();
            h = h_next.clone();
            steps.push(LstmStep {
                z,
                f,
                i,
                c_tilde,
                o,
                c: c_next,
                tanh_c,
                h: h_next,
            });
        }
        let preds = head_forward(&self.head_w, &self.head_b, &h);
        Ok((
            preds,
            LstmCache {
                hidden,
                batch,
                steps,
            },
        ))
    }

    fn backward_batch(&self, cache: &LstmCache, d_pred: &[f64]) -> Result<LstmParams> {
        self.validate()?;
        let hidden = self.hidden();
        if cache.hidden != hidden || cache.batch != d_pred.len() || cache.steps.is_empty() {
            return Err(Error::invalid(format!(
                "LSTM cache (hidden {}, batch {}) does not match params (hidden {hidden}) \
                 and upstream gradient (batch {})",
                cache.hidden,
                cache.batch,
                d_pred.len()
            )));
        }
        let mut grad = self.zeros_like();
        let batch = cache.batch;
        let mut dh = head_backward(
            &self.head_w,
            cache.final_hidden(),
            d_pred,
            &mut grad.head_w,
            &mut grad.head_b,
        );
        let mut dc = Matrix::zeros(hidden, batch);
        let zero_c = Matrix::zeros(hidden, batch);

        for t in (0..cache.steps.len()).rev() {
            let s = &cache.steps[t];
            let c_prev = if t == 0 { &zero_c } else { &cache.steps[t - 1].c };
            let n = hidden * batch;
            let mut da_f = Matrix::zeros(hidden, batch);
            let mut da_i = Matrix::zeros(hidden, batch);
            let mut da_c = Matrix::zeros(hidden, batch);
            let mut da_o = Matrix::zeros(hidden, batch);
            {
                let (dh_s, dc_s) = (dh.as_slice(), dc.as_mut_slice());
                let (f, i, g, o) = (
                    s.f.as_slice(),
                    s.i.as_slice(),
                    s.c_tilde.as_slice(),
                    s.o.as_slice(),
                );
                let tc = s.tanh_c.as_slice();
                let cp = c_prev.as_slice();
                for k in 0..n {
                    let d_o = dh_s[k] * tc[k];
                    let d_c = dc_s[k] + dh_s[k] * o[k] * (1.0 - tc[k] * tc[k]);
                    da_f.as_mut_slice()[k] = d_c * cp[k] * f[k] * (1.0 - f[k]);
                    da_i.as_mut_slice()[k] = d_c * g[k] * i[k] * (1.0 - i[k]);
                    da_c.as_mut_slice()[k] = d_c * i[k] * (1.0 - g[k] * g[k]);
                    da_o.as_mut_slice()[k] = d_o * o[k] * (1.0 - o[k]);
                    dc_s[k] = d_c * f[k];
                }
            }
            acc_outer(&mut grad.w_f, &da_f, &s.z);
            acc_outer(&mut grad.w_i, &da_i, &s.z);
            acc_outer(&mut grad.w_c, &da_c, &s.z);
            acc_outer(&mut grad.w_o, &da_o, &s.z);
            acc_row_sums(&mut grad.b_f, &da_f);
            acc_row_sums(&mut grad.b_i, &da_i);
            acc_row_sums(&mut grad.b_c, &da_c);
            acc_row_sums(&mut grad.b_o, &da_o);
            if t > 0 {
                let mut dz = Matrix::zeros(hidden + 1, batch);
                acc_back(&mut dz, &self.w_f, &da_f);
                acc_back(&mut dz, &self.w_i, &da_i);
                acc_back(&mut dz, &self.w_c, &da_c);
                acc_back(&mut dz, &self.w_o, &da_o);
                dh = top_rows(&dz, hidden);
            }
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, sigmoid_scalar};

    /// Straight-line scalar re-implementation used as an independent oracle.
    fn scalar_lstm(p: &LstmParams, xs: &[f64]) -> f64 {
        let n = p.hidden();
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        for &x in xs {
            let mut z = h.clone();
            z.push(x);
            let gate = |w: &Matrix, b: &Matrix, j: usize| {
                let mut s = b[(j, 0)];
                for (k, zk) in z.iter().enumerate() {
                    s += w[(j, k)] * zk;
                }
                s
            };
            let mut h_new = vec![0.0; n];
            for j in 0..n {
                let f = sigmoid_scalar(gate(&p.w_f, &p.b_f, j));
                let i = sigmoid_scalar(gate(&p.w_i, &p.b_i, j));
                let g = gate(&p.w_c, &p.b_c, j).tanh();
                let o = sigmoid_scalar(gate(&p.w_o, &p.b_o, j));
                c[j] = f * c[j] + i * g;
                h_new[j] = o * c[j].tanh();
            }
            h = h_new;
        }
        let mut y = p.head_b[(0, 0)];
        for j in 0..n {
            y += p.head_w[(0, j)] * h[j];
        }
        y
    }

    fn random_params(hidden: usize, seed: u64) -> LstmParams {
        let mut rng = Rng::new(seed);
        let mut p = LstmParams::init(hidden, 1.0, &mut rng).unwrap();
        // Non-trivial biases so every path is exercised.
        p.b_i = Matrix::from_fn(hidden, 1, |_, _| rng.uniform_range(-0.5, 0.5));
        p.b_o = Matrix::from_fn(hidden, 1, |_, _| rng.uniform_range(-0.5, 0.5));
        p.head_b[(0, 0)] = 0.3;
        p
    }

    #[test]
    fn zero_params_predict_head_bias() {
        let mut p = LstmParams::zeros(3);
        p.head_b[(0, 0)] = 0.75;
        let (y, cache) = p.forward(&[0.2, 0.9, 0.4]).unwrap();
        assert_eq!(y, 0.75);
        for s in &cache.steps {
            assert!(s.f.as_slice().iter().all(|&v| v == 0.5));
            assert!(s.i.as_slice().iter().all(|&v| v == 0.5));
            assert!(s.o.as_slice().iter().all(|&v| v == 0.5));
            assert!(s.c.as_slice().iter().all(|&v| v == 0.0));
            assert!(s.h.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn saturated_gates_accumulate_cell_state() {
        let mut p = LstmParams::zeros(1);
        p.b_f[(0, 0)] = 50.0;
        p.b_i[(0, 0)] = 50.0;
        p.b_c[(0, 0)] = 50.0;
        let (_, cache) = p.forward(&[0.1; 6]).unwrap();
        for (t, s) in cache.steps.iter().enumerate() {
            assert!((s.c[(0, 0)] - (t + 1) as f64).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn matches_scalar_oracle() {
        for seed in 0..3 {
            let p = random_params(4, seed);
            let xs = [0.1, 0.7, 0.3, 0.9, 0.5];
            let (y, _) = p.forward(&xs).unwrap();
            assert!((y - scalar_lstm(&p, &xs)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let p = random_params(4, 100 + seed);
            let xs = [0.2, 0.8, 0.5, 0.1, 0.6];
            let target = 0.4;
            let (y, cache) = p.forward(&xs).unwrap();
            let grad = p.backward(&cache, 2.0 * (y - target)).unwrap();
            let err = grad_check(
                |q: &LstmParams| (q.predict(&xs).unwrap() - target).powi(2),
                &p,
                &grad,
                1e-6,
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let p = random_params(4, 1);
        let (_, cache) = p.forward(&[0.3, 0.4]).unwrap();
        let g = p.backward(&cache, 0.0).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_gradient_is_mean_of_samples() {
        let p = random_params(4, 2);
        let a = [0.1, 0.5, 0.9];
        let b = [0.7, 0.2, 0.4];
        let (ya, ca) = p.forward(&a).unwrap();
        let (yb, cb) = p.forward(&b).unwrap();
        let (da, db) = (2.0 * (ya - 0.3), 2.0 * (yb - 0.6));
        let mut mean = p.backward(&ca, da).unwrap();
        mean.axpy(1.0, &p.backward(&cb, db).unwrap()).unwrap();
        mean.scale_inplace(0.5);

        let inputs = Matrix::from_rows(&[a.to_vec(), b.to_vec()]).unwrap();
        let (preds, cache) = p.forward_batch(&inputs).unwrap();
        assert!((preds[0] - ya).abs() < 1e-14 && (preds[1] - yb).abs() < 1e-14);
        let batch = p.backward_batch(&cache, &[da / 2.0, db / 2.0]).unwrap();
        for (x, y) in batch.to_flat().iter().zip(mean.to_flat()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_cache_is_rejected() {
        let p = random_params(4, 3);
        let (_, cache) = p.forward(&[0.1, 0.2]).unwrap();
        let other = random_params(3, 3);
        assert!(other.backward(&cache, 1.0).is_err());
        assert!(p.backward_batch(&cache, &[1.0, 2.0]).is_err());
    }
}
