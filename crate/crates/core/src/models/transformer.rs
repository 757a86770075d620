//! Pre-layer-norm Transformer encoder over the lookback window.
//!
//! Each scalar input is embedded as `x·w_in`, sinusoidal positions are added,
//! and every layer applies
//!
//! ```text
//! X ← X + MHA(LN₁(X))
//! X ← X + W₂·ReLU(W₁·LN₂(X) + b₁) + b₂
//! ```
//!
//! with `MHA` the usual `softmax(QKᵀ/√d_k)V` per head. The head reads the
//! final position. Tokens of a whole batch are stacked row-wise into one
//! `(B·T) × d` matrix so projections are single products; weights follow the
//! `out × in` convention, i.e. `Q = A·W_Qᵀ`.

use super::ops::{acc_col_sums, add_row_bias};
use super::{check_inputs, head_backward, head_forward, Forecaster};
use crate::error::{Error, Result};
use crate::numerics::{gemm, init_xavier, softmax_rows_inplace, Matrix, ParamSet, Rng};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
    pub w_1: Matrix,
    pub b_1: Matrix,
    pub w_2: Matrix,
    pub b_2: Matrix,
    pub ln1_gain: Matrix,
    pub ln1_shift: Matrix,
    pub ln2_gain: Matrix,
    pub ln2_shift: Matrix,
}

impl EncoderLayer {
    fn zeros(d: usize, d_ff: usize) -> Self {
        let dd = Matrix::zeros(d, d);
        Self {
            w_q: dd.clone(),
            w_k: dd.clone(),
            w_v: dd.clone(),
            w_o: dd,
            w_1: Matrix::zeros(d_ff, d),
            b_1: Matrix::zeros(1, d_ff),
            w_2: Matrix::zeros(d, d_ff),
            b_2: Matrix::zeros(1, d),
            ln1_gain: Matrix::filled(1, d, 1.0),
            ln1_shift: Matrix::zeros(1, d),
            ln2_gain: Matrix::filled(1, d, 1.0),
            ln2_shift: Matrix::zeros(1, d),
        }
    }

    fn init(d: usize, d_ff: usize, rng: &mut Rng) -> Result<Self> {
        let mut l = Self::zeros(d, d_ff);
        l.w_q = init_xavier(rng, d, d)?;
        l.w_k = init_xavier(rng, d, d)?;
        l.w_v = init_xavier(rng, d, d)?;
        l.w_o = init_xavier(rng, d, d)?;
        l.w_1 = init_xavier(rng, d_ff, d)?;
        l.w_2 = init_xavier(rng, d, d_ff)?;
        Ok(l)
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix)) {
        for (name, m) in [
            ("w_q", &self.w_q),
            ("w_k", &self.w_k),
            ("w_v", &self.w_v),
            ("w_o", &self.w_o),
            ("w_1", &self.w_1),
            ("b_1", &self.b_1),
            ("w_2", &self.w_2),
            ("b_2", &self.b_2),
            ("ln1_gain", &self.ln1_gain),
            ("ln1_shift", &self.ln1_shift),
            ("ln2_gain", &self.ln2_gain),
            ("ln2_shift", &self.ln2_shift),
        ] {
            f(&format!("{prefix}.{name}"), m);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix)) {
        for (name, m) in [
            ("w_q", &mut self.w_q),
            ("w_k", &mut self.w_k),
            ("w_v", &mut self.w_v),
            ("w_o", &mut self.w_o),
            ("w_1", &mut self.w_1),
            ("b_1", &mut self.b_1),
            ("w_2", &mut self.w_2),
            ("b_2", &mut self.b_2),
            ("ln1_gain", &mut self.ln1_gain),
            ("ln1_shift", &mut self.ln1_shift),
            ("ln2_gain", &mut self.ln2_gain),
            ("ln2_shift", &mut self.ln2_shift),
        ] {
            f(&format!("{prefix}.{name}"), m);
        }
    }

    fn check(&self, d: usize, d_ff: usize) -> Result<()> {
        let expected = [
            (&self.w_q, (d, d)),
            (&self.w_k, (d, d)),
            (&self.w_v, (d, d)),
            (&self.w_o, (d, d)),
            (&self.w_1, (d_ff, d)),
            (&self.b_1, (1, d_ff)),
            (&self.w_2, (d, d_ff)),
            (&self.b_2, (1, d)),
            (&self.ln1_gain, (1, d)),
            (&self.ln1_shift, (1, d)),
            (&self.ln2_gain, (1, d)),
            (&self.ln2_shift, (1, d)),
        ];
        for (m, shape) in expected {
            if m.shape() != shape {
                return Err(Error::Shape {
                    op: "encoder layer",
                    lhs: m.shape(),
                    rhs: shape,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerParams {
    /// Scalar-to-vector embedding, d × 1.
    pub w_in: Matrix,
    pub layers: Vec<EncoderLayer>,
    pub head_w: Matrix,
    pub head_b: Matrix,
    /// Whether sinusoidal positions are added to the embedding.
    pub positional: bool,
    heads: usize,
}

impl TransformerParams {
    /// All-zero projections, unit layer-norm gains.
    pub fn zeros(
        d_model: usize,
        heads: usize,
        layers: usize,
        d_ff: usize,
        positional: bool,
    ) -> Result<Self> {
        if d_model == 0 || heads == 0 || layers == 0 || d_ff == 0 {
            return Err(Error::invalid(format!(
                "transformer dimensions must be positive (d_model {d_model}, heads {heads}, \
                 layers {layers}, d_ff {d_ff})"
            )));
        }
        if d_model % heads != 0 {
            return Err(Error::invalid(format!(
                "d_model {d_model} is not divisible by {heads} heads"
            )));
        }
        Ok(Self {
            w_in: Matrix::zeros(d_model, 1),
            layers: (0..layers).map(|_| EncoderLayer::zeros(d_model, d_ff)).collect(),
            head_w: Matrix::zeros(1, d_model),
            head_b: Matrix::zeros(1, 1),
            positional,
            heads,
        })
    }

    pub fn init(
        d_model: usize,
        heads: usize,
        layers: usize,
        d_ff: usize,
        positional: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut p = Self::zeros(d_model, heads, layers, d_ff, positional)?;
        p.w_in = init_xavier(rng, d_model, 1)?;
        for l in &mut p.layers {
            *l = EncoderLayer::init(d_model, d_ff, rng)?;
        }
        p.head_w = init_xavier(rng, 1, d_model)?;
        Ok(p)
    }

    pub fn d_model(&self) -> usize {
        self.w_in.rows()
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn d_ff(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w_1.rows())
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d_model();
        let d_ff = self.d_ff();
        if d == 0 || self.heads == 0 || d % self.heads != 0 || self.layers.is_empty() {
            return Err(Error::invalid(format!(
                "invalid transformer layout: d_model {d}, heads {}, layers {}",
                self.heads,
                self.layers.len()
            )));
        }
        if self.w_in.shape() != (d, 1) || self.head_w.shape() != (1, d) {
            return Err(Error::Shape {
                op: "transformer embedding/head",
                lhs: self.w_in.shape(),
                rhs: self.head_w.shape(),
            });
        }
        if self.head_b.shape() != (1, 1) {
            return Err(Error::Shape {
                op: "transformer head bias",
                lhs: self.head_b.shape(),
                rhs: (1, 1),
            });
        }
        self.layers.iter().try_for_each(|l| l.check(d, d_ff))
    }
}

impl ParamSet for TransformerParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &Matrix)) {
        f("w_in", &self.w_in);
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&format!("layer{i}"), f);
        }
        f("head_w", &self.head_w);
        f("head_b", &self.head_b);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Matrix)) {
        f("w_in", &mut self.w_in);
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&format!("layer{i}"), f);
        }
        f("head_w", &mut self.head_w);
        f("head_b", &mut self.head_b);
    }
}

/// `PE[t][2i] = sin(t / 10000^{2i/d})`, `PE[t][2i+1] = cos(t / 10000^{2i/d})`.
pub fn positional_encoding(seq: usize, d_model: usize) -> Matrix {
    Matrix::from_fn(seq, d_model, |t, j| {
        let pair = (j / 2) * 2;
        let angle = t as f64 / 10000f64.powf(pair as f64 / d_model as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Activations of one encoder layer for a stacked batch.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub x_in: Matrix,
    pub xhat1: Matrix,
    pub rstd1: Vec<f64>,
    pub a: Matrix,
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Query positions per sample: the last `queries` tokens of each window.
    pub queries: usize,
    /// Attention weights, one queries × T matrix per (sample, head), sample-major.
    pub probs: Vec<Matrix>,
    /// Concatenated head outputs before `W_O`.
    pub attn: Matrix,
    pub x1: Matrix,
    pub xhat2: Matrix,
    pub rstd2: Vec<f64>,
    pub c: Matrix,
    /// FFN pre-activation.
    pub pre: Matrix,
    pub act: Matrix,
}

#[derive(Debug, Clone)]
pub struct TransformerCache {
    pub batch: usize,
    pub seq: usize,
    pub d_model: usize,
    pub inputs: Matrix,
    pub layers: Vec<LayerCache>,
    /// Encoder output at the final token, B × d. The last layer only computes
    /// that position since the head reads nothing else.
    pub output: Matrix,
}

/// `out = a·bᵀ`
fn mul_t(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.rows());
    gemm(&mut out, a, false, b, true, 1.0, 0.0).expect("validated shapes");
    out
}

/// The last `queries` rows of each `seq`-row sample block.
fn tail_rows(m: &Matrix, batch: usize, seq: usize, queries: usize) -> Matrix {
    if queries == seq {
        return m.clone();
    }
    let mut out = Matrix::zeros(batch * queries, m.cols());
    for b in 0..batch {
        for i in 0..queries {
            out.row_mut(b * queries + i)
                .copy_from_slice(m.row(b * seq + seq - queries + i));
        }
    }
    out
}

/// Adds `src` (B·queries rows) into the matching tail rows of `dst`.
fn add_tail_rows(dst: &mut Matrix, src: &Matrix, batch: usize, seq: usize, queries: usize) {
    for b in 0..batch {
        for i in 0..queries {
            let row = dst.row_mut(b * seq + seq - queries + i);
            for (d, s) in row.iter_mut().zip(src.row(b * queries + i)) {
                *d += s;
            }
        }
    }
}

/// Row-wise layer norm; returns `(y, x̂, 1/σ)`.
fn layer_norm(x: &Matrix, gain: &Matrix, shift: &Matrix) -> (Matrix, Matrix, Vec<f64>) {
    let d = x.cols();
    let mut xhat = Matrix::zeros(x.rows(), d);
    let mut y = Matrix::zeros(x.rows(), d);
    let mut rstd = Vec::with_capacity(x.rows());
    let (g, s) = (gain.row(0), shift.row(0));
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        rstd.push(inv);
        let xh = xhat.row_mut(r);
        for j in 0..d {
            xh[j] = (row[j] - mean) * inv;
        }
        let xh = xhat.row(r).to_vec();
        for (j, out) in y.row_mut(r).iter_mut().enumerate() {
            *out = xh[j] * g[j] + s[j];
        }
    }
    (y, xhat, rstd)
}

/// Accumulates gain/shift gradients and adds `∂/∂x` into `dx`.
fn layer_norm_backward(
    dy: &Matrix,
    xhat: &Matrix,
    rstd: &[f64],
    gain: &Matrix,
    d_gain: &mut Matrix,
    d_shift: &mut Matrix,
    dx: &mut Matrix,
) {
    let d = dy.cols();
    let g = gain.row(0);
    let mut dxhat = vec![0.0; d];
    for r in 0..dy.rows() {
        let (dyr, xr) = (dy.row(r), xhat.row(r));
        {
            let dg = d_gain.row_mut(0);
            for j in 0..d {
                dg[j] += dyr[j] * xr[j];
            }
        }
        {
            let ds = d_shift.row_mut(0);
            for j in 0..d {
                ds[j] += dyr[j];
            }
        }
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for j in 0..d {
            dxhat[j] = dyr[j] * g[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xr[j];
        }
        m1 /= d as f64;
        m2 /= d as f64;
        let out = dx.row_mut(r);
        for j in 0..d {
            out[j] += rstd[r] * (dxhat[j] - m1 - xr[j] * m2);
        }
    }
}

impl TransformerParams {
    fn embed(&self, inputs: &Matrix) -> Matrix {
        let (batch, seq) = inputs.shape();
        let d = self.d_model();
        let pe = self.positional.then(|| positional_encoding(seq, d));
        let mut x = Matrix::zeros(batch * seq, d);
        for b in 0..batch {
            for t in 0..seq {
                let v = inputs[(b, t)];
                let row = x.row_mut(b * seq + t);
                for j in 0..d {
                    row[j] = v * self.w_in[(j, 0)];
                }
                if let Some(pe) = &pe {
                    for (r, p) in row.iter_mut().zip(pe.row(t)) {
                        *r += p;
                    }
                }
            }
        }
        x
    }

    /// One encoder layer over `seq` tokens per sample. Keys and values use
    /// every token; queries, and so the output rows, are the last `queries`.
    fn layer_forward(
        &self,
        l: &EncoderLayer,
        x: Matrix,
        batch: usize,
        seq: usize,
        queries: usize,
    ) -> (Matrix, LayerCache) {
        let d = self.d_model();
        let dk = d / self.heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let (a, xhat1, rstd1) = layer_norm(&x, &l.ln1_gain, &l.ln1_shift);
        let q = mul_t(&tail_rows(&a, batch, seq, queries), &l.w_q);
        let k = mul_t(&a, &l.w_k);
        let v = mul_t(&a, &l.w_v);
        let mut attn = Matrix::zeros(batch * queries, d);
        let mut probs = Vec::with_capacity(batch * self.heads);
        for b in 0..batch {
            for h in 0..self.heads {
                let (r0, c0) = (b * seq, h * dk);
                let qh = q.block(b * queries, c0, queries, dk);
                let kh = k.block(r0, c0, seq, dk);
                let vh = v.block(r0, c0, seq, dk);
                let mut s = Matrix::zeros(queries, seq);
                gemm(&mut s, &qh, false, &kh, true, scale, 0.0).expect("validated shapes");
                softmax_rows_inplace(&mut s);
                let oh = s.matmul(&vh).expect("validated shapes");
                attn.add_block(b * queries, c0, &oh);
                probs.push(s);
            }
        }
        let mut x1 = tail_rows(&x, batch, seq, queries);
        gemm(&mut x1, &attn, false, &l.w_o, true, 1.0, 1.0).expect("validated shapes");

        let (c, xhat2, rstd2) = layer_norm(&x1, &l.ln2_gain, &l.ln2_shift);
        let mut pre = mul_t(&c, &l.w_1);
        add_row_bias(&mut pre, &l.b_1);
        let act = pre.map(|v| v.max(0.0));
        let mut out = x1.clone();
        gemm(&mut out, &act, false, &l.w_2, true, 1.0, 1.0).expect("validated shapes");
        add_row_bias(&mut out, &l.b_2);
        let cache = LayerCache {
            x_in: x,
            xhat1,
            rstd1,
            a,
            q,
            k,
            v,
            queries,
            probs,
            attn,
            x1,
            xhat2,
            rstd2,
            c,
            pre,
            act,
        };
        (out, cache)
    }

    /// Backpropagates `dy` through one layer, accumulating into `g`; returns
    /// the gradient with respect to the layer input.
    fn layer_backward(
        &self,
        l: &EncoderLayer,
        g: &mut EncoderLayer,
        lc: &LayerCache,
        dy: Matrix,
        batch: usize,
        seq: usize,
    ) -> Matrix {
        let d = self.d_model();
        let dk = d / self.heads;
        let scale = 1.0 / (dk as f64).sqrt();

        // FFN branch: out = x1 + act·W₂ᵀ + b₂
        acc_col_sums(&mut g.b_2, &dy);
        gemm(&mut g.w_2, &dy, true, &lc.act, false, 1.0, 1.0).expect("validated shapes");
        let mut d_pre = dy.matmul(&l.w_2).expect("validated shapes");
        for (dv, &p) in d_pre.as_mut_slice().iter_mut().zip(lc.pre.as_slice()) {
            if p <= 0.0 {
                *dv = 0.0;
            }
        }
        acc_col_sums(&mut g.b_1, &d_pre);
        gemm(&mut g.w_1, &d_pre, true, &lc.c, false, 1.0, 1.0).expect("validated shapes");
        let dc = d_pre.matmul(&l.w_1).expect("validated shapes");
        let mut dx1 = dy;
        layer_norm_backward(
            &dc,
            &lc.xhat2,
            &lc.rstd2,
            &l.ln2_gain,
            &mut g.ln2_gain,
            &mut g.ln2_shift,
            &mut dx1,
        );

        // Attention branch: x1 = x + attn·W_Oᵀ on the query rows
        let queries = lc.queries;
        gemm(&mut g.w_o, &dx1, true, &lc.attn, false, 1.0, 1.0).expect("validated shapes");
        let d_attn = dx1.matmul(&l.w_o).expect("validated shapes");
        let mut dq = Matrix::zeros(batch * queries, d);
        let mut dk_m = Matrix::zeros(batch * seq, d);
        let mut dv = Matrix::zeros(batch * seq, d);
        for b in 0..batch {
            for h in 0..self.heads {
                let (r0, c0) = (b * seq, h * dk);
                let p = &lc.probs[b * self.heads + h];
                let doh = d_attn.block(b * queries, c0, queries, dk);
                let qh = lc.q.block(b * queries, c0, queries, dk);
                let kh = lc.k.block(r0, c0, seq, dk);
                let vh = lc.v.block(r0, c0, seq, dk);
                let dp = mul_t(&doh, &vh);
                dv.add_block(r0, c0, &p.t_matmul(&doh).expect("validated shapes"));
                let mut ds = Matrix::zeros(queries, seq);
                for i in 0..queries {
                    let (pr, dpr) = (p.row(i), dp.row(i));
                    let dot: f64 = pr.iter().zip(dpr).map(|(a, b)| a * b).sum();
                    for (j, out) in ds.row_mut(i).iter_mut().enumerate() {
                        *out = pr[j] * (dpr[j] - dot) * scale;
                    }
                }
                dq.add_block(b * queries, c0, &ds.matmul(&kh).expect("validated shapes"));
                dk_m.add_block(r0, c0, &ds.t_matmul(&qh).expect("validated shapes"));
            }
        }
        let mut da = Matrix::zeros(batch * seq, d);
        for (dproj, w, gw) in [(&dk_m, &l.w_k, &mut g.w_k), (&dv, &l.w_v, &mut g.w_v)] {
            gemm(gw, dproj, true, &lc.a, false, 1.0, 1.0).expect("validated shapes");
            gemm(&mut da, dproj, false, w, false, 1.0, 1.0).expect("validated shapes");
        }
        let a_q = tail_rows(&lc.a, batch, seq, queries);
        gemm(&mut g.w_q, &dq, true, &a_q, false, 1.0, 1.0).expect("validated shapes");
        let da_q = dq.matmul(&l.w_q).expect("validated shapes");
        add_tail_rows(&mut da, &da_q, batch, seq, queries);
        let mut dx = Matrix::zeros(batch * seq, d);
        add_tail_rows(&mut dx, &dx1, batch, seq, queries);
        layer_norm_backward(
            &da,
            &lc.xhat1,
            &lc.rstd1,
            &l.ln1_gain,
            &mut g.ln1_gain,
            &mut g.ln1_shift,
            &mut dx,
        );
        dx
    }

    /// Encoder output for every token, (B·T) × d.
    pub fn encode(&self, inputs: &Matrix) -> Result<Matrix> {
        self.validate()?;
        check_inputs(inputs)?;
        let (batch, seq) = inputs.shape();
        let mut x = self.embed(inputs);
        for l in &self.layers {
            x = self.layer_forward(l, x, batch, seq, seq).0;
        }
        Ok(x)
    }
}

impl Forecaster for TransformerParams {
    type Cache = TransformerCache;

    fn forward_batch(&self, inputs: &Matrix) -> Result<(Vec<f64>, TransformerCache)> {
        self.validate()?;
        check_inputs(inputs)?;
        let (batch, seq) = inputs.shape();
        let mut x = self.embed(inputs);
        let mut caches = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let queries = if i == last { 1 } else { seq };
            let (out, cache) = self.layer_forward(l, x, batch, seq, queries);
            caches.push(cache);
            x = out;
        }
        let states = x.transpose();
        let preds = head_forward(&self.head_w, &self.head_b, &states);
        Ok((
            preds,
            TransformerCache {
                batch,
                seq,
                d_model: self.d_model(),
                inputs: inputs.clone(),
                layers: caches,
                output: x,
            },
        ))
    }

    fn backward_batch(&self, cache: &TransformerCache, d_pred: &[f64]) -> Result<Self> {
        self.validate()?;
        let d = self.d_model();
        if cache.d_model != d
            || cache.batch != d_pred.len()
            || cache.layers.len() != self.layers.len()
            || cache
                .layers
                .first()
                .is_some_and(|lc| lc.pre.cols() != self.d_ff())
        {
            return Err(Error::invalid(format!(
                "transformer cache (d_model {}, batch {}, layers {}) does not match params \
                 (d_model {d}, layers {}) and upstream gradient (batch {})",
                cache.d_model,
                cache.batch,
                cache.layers.len(),
                self.layers.len(),
                d_pred.len()
            )));
        }
        let (batch, seq) = (cache.batch, cache.seq);
        let mut grad = self.zeros_like();
        let states = cache.output.transpose();
        let d_states = head_backward(
            &self.head_w,
            &states,
            d_pred,
            &mut grad.head_w,
            &mut grad.head_b,
        );
        let mut dx = d_states.transpose();
        for i in (0..self.layers.len()).rev() {
            dx = self.layer_backward(
                &self.layers[i],
                &mut grad.layers[i],
                &cache.layers[i],
                dx,
                batch,
                seq,
            );
        }
        for b in 0..batch {
            for t in 0..seq {
                let v = cache.inputs[(b, t)];
                let row = dx.row(b * seq + t);
                for j in 0..d {
                    grad.w_in[(j, 0)] += v * row[j];
                }
            }
        }
        Ok(grad)
    }
}
