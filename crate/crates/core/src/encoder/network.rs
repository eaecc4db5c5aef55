use rand::Rng;

use super::config::{EncoderConfig, EncoderVariant};
use super::{positional_encoding, transform_alpha};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const LN_EPS: f64 = 1e-12;

/// One post-norm encoder layer.
///
/// `w_q`, `w_k` and `w_v` hold all heads side by side: head `i` owns
/// columns `i*d_k .. (i+1)*d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
    pub w_1: Matrix,
    pub b_1: Matrix,
    pub w_2: Matrix,
    pub b_2: Matrix,
    pub ln1_gain: Matrix,
    pub ln1_bias: Matrix,
    pub ln2_gain: Matrix,
    pub ln2_bias: Matrix,
}

impl LayerWeights {
    const NAMES: [&'static str; 12] = [
        "w_q", "w_k", "w_v", "w_o", "w_1", "b_1", "w_2", "b_2", "ln1_gain", "ln1_bias", "ln2_gain", "ln2_bias",
    ];

    fn refs(&self) -> [&Matrix; 12] {
        [
            &self.w_q,
            &self.w_k,
            &self.w_v,
            &self.w_o,
            &self.w_1,
            &self.b_1,
            &self.w_2,
            &self.b_2,
            &self.ln1_gain,
            &self.ln1_bias,
            &self.ln2_gain,
            &self.ln2_bias,
        ]
    }

    fn refs_mut(&mut self) -> [&mut Matrix; 12] {
        [
            &mut self.w_q,
            &mut self.w_k,
            &mut self.w_v,
            &mut self.w_o,
            &mut self.w_1,
            &mut self.b_1,
            &mut self.w_2,
            &mut self.b_2,
            &mut self.ln1_gain,
            &mut self.ln1_bias,
            &mut self.ln2_gain,
            &mut self.ln2_bias,
        ]
    }

    fn zeros_like(d: usize, d_ff: usize) -> Self {
        Self {
            w_q: Matrix::zeros(d, d),
            w_k: Matrix::zeros(d, d),
            w_v: Matrix::zeros(d, d),
            w_o: Matrix::zeros(d, d),
            w_1: Matrix::zeros(d, d_ff),
            b_1: Matrix::zeros(1, d_ff),
            w_2: Matrix::zeros(d_ff, d),
            b_2: Matrix::zeros(1, d),
            ln1_gain: Matrix::zeros(1, d),
            ln1_bias: Matrix::zeros(1, d),
            ln2_gain: Matrix::zeros(1, d),
            ln2_bias: Matrix::zeros(1, d),
        }
    }
}

/// Adam first and second moments, one per tensor in [`EncoderWeights::tensors`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub step: u64,
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

/// Trainable tensors of the encoder plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub n_ops: usize,
    pub d_encoder: usize,
    pub heads: usize,
    pub w_in: Matrix,
    pub b_in: Matrix,
    pub layers: Vec<LayerWeights>,
    pub w_out: Matrix,
    pub b_out: Matrix,
    pub adam: Option<AdamMoments>,
    version: u64,
}

impl EncoderWeights {
    /// Uniform init in `±1/sqrt(fan_in)` for weight matrices, zero biases,
    /// unit layer-norm gains.
    pub fn init<R: Rng + ?Sized>(cfg: &EncoderConfig, n_ops: usize, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        if n_ops == 0 {
            return Err(Error::EncoderConfig("operation count must be at least 1".into()));
        }
        let d = cfg.d_encoder;
        let scaled =
            |rows: usize, cols: usize, rng: &mut R| Matrix::uniform(rows, cols, 1.0 / (rows as f64).sqrt(), rng);
        let w_in = scaled(n_ops, d, rng);
        let mut layers = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            layers.push(LayerWeights {
                w_q: scaled(d, d, rng),
                w_k: scaled(d, d, rng),
                w_v: scaled(d, d, rng),
                w_o: scaled(d, d, rng),
                w_1: scaled(d, cfg.d_ff, rng),
                b_1: Matrix::zeros(1, cfg.d_ff),
                w_2: scaled(cfg.d_ff, d, rng),
                b_2: Matrix::zeros(1, d),
                ln1_gain: Matrix::filled(1, d, 1.0),
                ln1_bias: Matrix::zeros(1, d),
                ln2_gain: Matrix::filled(1, d, 1.0),
                ln2_bias: Matrix::zeros(1, d),
            });
        }
        let w_out = if cfg.zero_output_head {
            Matrix::zeros(d, n_ops)
        } else {
            scaled(d, n_ops, rng)
        };
        let mut w = Self {
            n_ops,
            d_encoder: d,
            heads: cfg.heads,
            w_in,
            b_in: Matrix::zeros(1, d),
            layers,
            w_out,
            b_out: Matrix::zeros(1, n_ops),
            adam: None,
            version: 0,
        };
        if cfg.optimizer == super::config::EncoderOptimizer::Adam {
            let zeros = w.zeros_like().tensors_owned();
            w.adam = Some(AdamMoments {
                step: 0,
                m: zeros.clone(),
                v: zeros,
            });
        }
        Ok(w)
    }

    /// Same shapes, all entries zero, no optimizer state.
    pub fn zeros_like(&self) -> Self {
        let d_ff = self.layers.first().map_or(0, |l| l.w_1.cols());
        Self {
            n_ops: self.n_ops,
            d_encoder: self.d_encoder,
            heads: self.heads,
            w_in: Matrix::zeros(self.n_ops, self.d_encoder),
            b_in: Matrix::zeros(1, self.d_encoder),
            layers: (0..self.layers.len())
                .map(|_| LayerWeights::zeros_like(self.d_encoder, d_ff))
                .collect(),
            w_out: Matrix::zeros(self.d_encoder, self.n_ops),
            b_out: Matrix::zeros(1, self.n_ops),
            adam: None,
            version: 0,
        }
    }

    /// Bumped on every mutation through [`tensors_mut`](Self::tensors_mut).
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec!["w_in".to_string(), "b_in".to_string()];
        for i in 0..self.layers.len() {
            names.extend(LayerWeights::NAMES.iter().map(|n| format!("layer{i}.{n}")));
        }
        names.push("w_out".into());
        names.push("b_out".into());
        names
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = vec![&self.w_in, &self.b_in];
        for l in &self.layers {
            out.extend(l.refs());
        }
        out.push(&self.w_out);
        out.push(&self.b_out);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.version += 1;
        let mut out = vec![&mut self.w_in, &mut self.b_in];
        for l in &mut self.layers {
            out.extend(l.refs_mut());
        }
        out.push(&mut self.w_out);
        out.push(&mut self.b_out);
        out
    }

    fn tensors_owned(&self) -> Vec<Matrix> {
        self.tensors().into_iter().cloned().collect()
    }

    pub fn n_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.rows() * t.cols()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    fn d_k(&self) -> usize {
        self.d_encoder / self.heads
    }

    /// Runs the encoder on `alpha` (p × l) and keeps every intermediate.
    pub fn forward(&self, cfg: &EncoderConfig, alpha: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if alpha.cols() != self.n_ops || alpha.rows() == 0 {
            return Err(Error::Shape {
                expected: (alpha.rows().max(1), self.n_ops),
                got: alpha.shape(),
            });
        }
        let input = match cfg.variant {
            EncoderVariant::F1 => transform_alpha(alpha),
            EncoderVariant::F2 => alpha.clone(),
        };
        let mut x = input.matmul(&self.w_in);
        x.add_row(&self.b_in);
        if cfg.positional {
            x.add_assign(&positional_encoding(alpha.rows(), self.d_encoder)?);
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for lw in &self.layers {
            let (next, cache) = self.layer_forward(lw, x);
            layers.push(cache);
            x = next;
        }
        let mut out = x.matmul(&self.w_out);
        out.add_row(&self.b_out);
        Ok((
            out,
            ForwardCache {
                version: self.version,
                input,
                layers,
                last: x,
            },
        ))
    }

    fn layer_forward(&self, lw: &LayerWeights, x: Matrix) -> (Matrix, LayerCache) {
        let d_k = self.d_k();
        let q = x.matmul(&lw.w_q);
        let k = x.matmul(&lw.w_k);
        let v = x.matmul(&lw.w_v);
        let scale = 1.0 / (d_k as f64).sqrt();
        let mut concat = Matrix::zeros(x.rows(), self.d_encoder);
        let mut attn = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = q.col_block(h * d_k, d_k);
            let kh = k.col_block(h * d_k, d_k);
            let vh = v.col_block(h * d_k, d_k);
            let mut a = qh.matmul_t(&kh).scale(scale);
            softmax_rows(&mut a);
            concat.set_col_block(h * d_k, &a.matmul(&vh));
            attn.push(a);
        }
        let a = concat.matmul(&lw.w_o).add(&x);
        let (n1, ln1) = layer_norm(&a, &lw.ln1_gain, &lw.ln1_bias);
        let mut h_pre = n1.matmul(&lw.w_1);
        h_pre.add_row(&lw.b_1);
        let mut h_act = h_pre.clone();
        h_act.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        let mut ffn = h_act.matmul(&lw.w_2);
        ffn.add_row(&lw.b_2);
        let (n2, ln2) = layer_norm(&ffn.add(&n1), &lw.ln2_gain, &lw.ln2_bias);
        let cache = LayerCache {
            x,
            q,
            k,
            v,
            attn,
            concat,
            ln1,
            n1,
            h_pre,
            h_act,
            ln2,
        };
        (n2, cache)
    }

    /// Reverse-mode gradients of `Σ d_output ⊙ output` for the forward
    /// pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Matrix) -> Result<Gradients> {
        if cache.version != self.version || cache.layers.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        let expected = (cache.last.rows(), self.n_ops);
        if d_output.shape() != expected {
            return Err(Error::Shape {
                expected,
                got: d_output.shape(),
            });
        }
        let mut g = self.zeros_like();
        g.w_out = cache.last.t_matmul(d_output);
        g.b_out = d_output.col_sums();
        let mut dx = d_output.matmul_t(&self.w_out);
        for (i, (lw, lc)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            dx = self.layer_backward(lw, lc, dx, &mut g.layers[i]);
        }
        g.w_in = cache.input.t_matmul(&dx);
        g.b_in = dx.col_sums();
        Ok(Gradients {
            names: self.tensor_names(),
            tensors: g.tensors_owned(),
        })
    }

    fn layer_backward(&self, lw: &LayerWeights, lc: &LayerCache, d_n2: Matrix, g: &mut LayerWeights) -> Matrix {
        let d_k = self.d_k();
        let d_a2 = layer_norm_backward(&lc.ln2, &lw.ln2_gain, &d_n2, &mut g.ln2_gain, &mut g.ln2_bias);

        g.w_2 = lc.h_act.t_matmul(&d_a2);
        g.b_2 = d_a2.col_sums();
        let mut d_h = d_a2.matmul_t(&lw.w_2);
        for (dh, pre) in d_h.as_mut_slice().iter_mut().zip(lc.h_pre.as_slice()) {
            if *pre <= 0.0 {
                *dh = 0.0;
            }
        }
        g.w_1 = lc.n1.t_matmul(&d_h);
        g.b_1 = d_h.col_sums();
        let d_n1 = d_a2.add(&d_h.matmul_t(&lw.w_1));

        let d_a = layer_norm_backward(&lc.ln1, &lw.ln1_gain, &d_n1, &mut g.ln1_gain, &mut g.ln1_bias);
        g.w_o = lc.concat.t_matmul(&d_a);
        let d_concat = d_a.matmul_t(&lw.w_o);

        let scale = 1.0 / (d_k as f64).sqrt();
        let p = lc.x.rows();
        let mut d_q = Matrix::zeros(p, self.d_encoder);
        let mut d_k_mat = Matrix::zeros(p, self.d_encoder);
        let mut d_v = Matrix::zeros(p, self.d_encoder);
        for (h, a) in lc.attn.iter().enumerate() {
            let d_o = d_concat.col_block(h * d_k, d_k);
            let vh = lc.v.col_block(h * d_k, d_k);
            let d_attn = d_o.matmul_t(&vh);
            d_v.set_col_block(h * d_k, &a.t_matmul(&d_o));
            let mut d_s = Matrix::zeros(p, p);
            for r in 0..p {
                let dot: f64 = a.row(r).iter().zip(d_attn.row(r)).map(|(x, y)| x * y).sum();
                for c in 0..p {
                    d_s[(r, c)] = a[(r, c)] * (d_attn[(r, c)] - dot) * scale;
                }
            }
            let qh = lc.q.col_block(h * d_k, d_k);
            let kh = lc.k.col_block(h * d_k, d_k);
            d_q.set_col_block(h * d_k, &d_s.matmul(&kh));
            d_k_mat.set_col_block(h * d_k, &d_s.t_matmul(&qh));
        }
        g.w_q = lc.x.t_matmul(&d_q);
        g.w_k = lc.x.t_matmul(&d_k_mat);
        g.w_v = lc.x.t_matmul(&d_v);
        let mut d_x = d_a;
        d_x.add_assign(&d_q.matmul_t(&lw.w_q));
        d_x.add_assign(&d_k_mat.matmul_t(&lw.w_k));
        d_x.add_assign(&d_v.matmul_t(&lw.w_v));
        d_x
    }
}

/// Gradient tensors, aligned with [`EncoderWeights::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub names: Vec<String>,
    pub tensors: Vec<Matrix>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().map(Matrix::max_abs).fold(0.0, f64::max)
    }

    pub fn add_scaled(&mut self, other: &Gradients, s: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(&b.scale(s));
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LnCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    x: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    attn: Vec<Matrix>,
    concat: Matrix,
    ln1: LnCache,
    n1: Matrix,
    h_pre: Matrix,
    h_act: Matrix,
    ln2: LnCache,
}

/// Intermediates of one forward pass; only valid for the weights that produced it.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    input: Matrix,
    layers: Vec<LayerCache>,
    last: Matrix,
}

impl ForwardCache {
    /// Attention weights of `layer`, one p × p matrix per head.
    pub fn attention(&self, layer: usize) -> &[Matrix] {
        &self.layers[layer].attn
    }

    /// Normalized (pre gain/bias) activations of the two layer norms in `layer`.
    pub fn normalized(&self, layer: usize) -> [&Matrix; 2] {
        let l = &self.layers[layer];
        [&l.ln1.xhat, &l.ln2.xhat]
    }

    /// Which feed-forward pre-activations are positive, over all layers.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.layers
            .iter()
            .flat_map(|l| l.h_pre.as_slice().iter().map(|v| *v > 0.0))
            .collect()
    }

    /// The tokens fed to the input embedding (α or ααᵀα).
    pub fn input(&self) -> &Matrix {
        &self.input
    }
}

fn softmax_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

fn layer_norm(x: &Matrix, gain: &Matrix, bias: &Matrix) -> (Matrix, LnCache) {
    let d = x.cols() as f64;
    let mut xhat = x.clone();
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = xhat.row_mut(r);
        let mean = row.iter().sum::<f64>() / d;
        row.iter_mut().for_each(|v| *v -= mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        row.iter_mut().for_each(|v| *v *= inv);
        inv_std.push(inv);
    }
    let mut y = xhat.clone();
    for r in 0..y.rows() {
        for ((v, g), b) in y.row_mut(r).iter_mut().zip(gain.as_slice()).zip(bias.as_slice()) {
            *v = *v * g + b;
        }
    }
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward(
    cache: &LnCache,
    gain: &Matrix,
    dy: &Matrix,
    d_gain: &mut Matrix,
    d_bias: &mut Matrix,
) -> Matrix {
    let d = dy.cols() as f64;
    let mut dx = Matrix::zeros(dy.rows(), dy.cols());
    for r in 0..dy.rows() {
        let dy_r = dy.row(r);
        let xh = cache.xhat.row(r);
        let dxhat: Vec<f64> = dy_r.iter().zip(gain.as_slice()).map(|(a, g)| a * g).collect();
        for c in 0..dy.cols() {
            d_gain[(0, c)] += dy_r[c] * xh[c];
            d_bias[(0, c)] += dy_r[c];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d;
        let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d;
        let inv = cache.inv_std[r];
        for (c, out) in dx.row_mut(r).iter_mut().enumerate() {
            *out = inv * (dxhat[c] - mean_d - xh[c] * mean_dx);
        }
    }
    dx
}
