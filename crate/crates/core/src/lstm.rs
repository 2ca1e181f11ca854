//! Single-layer LSTM classifier over token-id sequences.
//!
//! Gate blocks are packed side by side in the order input, forget, output,
//! candidate: `w` is `d × 4h`, `u` is `h × 4h`, `b` has `4h` entries.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::label::Label;
use crate::rng;
use crate::shallow::Prediction;
use crate::vectorize::Vocabulary;

#[derive(Debug, thiserror::Error)]
pub enum LstmError {
    #[error("sequence has length {got}, model expects {expected}")]
    Shape { expected: usize, got: usize },
    #[error("token id {0} is outside the embedding table")]
    TokenId(usize),
    #[error("training data contains a single class ({0})")]
    SingleClass(Label),
    #[error("no training examples")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LstmError>;

pub const GRAD_CLIP: f64 = 5.0;
const INIT_RANGE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LSTMConfig {
    pub hidden: usize,
    pub embed_dim: usize,
    pub max_len: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub dropout_in: f64,
    pub dropout_rec: f64,
    pub seed: u64,
}

impl Default for LSTMConfig {
    fn default() -> Self {
        LSTMConfig {
            hidden: 64,
            embed_dim: 50,
            max_len: 30,
            epochs: 10,
            batch: 32,
            lr: 0.5,
            dropout_in: 0.2,
            dropout_rec: 0.2,
            seed: 0,
        }
    }
}

impl LSTMConfig {
    pub fn validate(&self) -> Result<()> {
        let dropout_ok = |p: f64| (0.0..1.0).contains(&p);
        if self.hidden == 0 || self.embed_dim == 0 || self.max_len == 0 || self.batch == 0 {
            return Err(LstmError::Config("hidden, embed_dim, max_len and batch must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(LstmError::Config(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if !dropout_ok(self.dropout_in) || !dropout_ok(self.dropout_rec) {
            return Err(LstmError::Config("dropout rates must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Maps tokens to ids `1..=V` (index + 1), drops unknown tokens, keeps the
/// last `max_len` ids and left-pads with 0.
pub fn encode_sequence<D: AsRef<[String]> + ?Sized>(doc: &D, vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    let ids: Vec<usize> = doc.as_ref().iter().filter_map(|t| vocab.get(t)).map(|i| i + 1).collect();
    let tail = &ids[ids.len().saturating_sub(max_len)..];
    let mut out = vec![0; max_len - tail.len()];
    out.extend_from_slice(tail);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LSTMModel {
    pub cfg: LSTMConfig,
    pub vocab_size: usize,
    /// `(V + 1) × d`; row 0 is the padding row.
    pub embed: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

/// Activations of one non-padding step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub id: usize,
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Inverted-dropout multipliers: each entry is 0 or `1/(1-p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Masks {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn dropout_mask(rng: &mut rng::Rng, n: usize, p: f64) -> Vec<f64> {
    if p == 0.0 {
        return vec![1.0; n];
    }
    let keep = 1.0 / (1.0 - p);
    (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect()
}

/// Parameter gradients; the embedding part only holds touched rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grads {
    pub embed: BTreeMap<usize, Vec<f64>>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl Grads {
    fn zeros(m: &LSTMModel) -> Grads {
        Grads {
            embed: BTreeMap::new(),
            w: vec![0.0; m.w.len()],
            u: vec![0.0; m.u.len()],
            b: vec![0.0; m.b.len()],
            w_out: vec![0.0; m.w_out.len()],
            b_out: 0.0,
        }
    }

    fn add(&mut self, other: &Grads) {
        for (id, row) in &other.embed {
            let dst = self.embed.entry(*id).or_insert_with(|| vec![0.0; row.len()]);
            dst.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        for (dst, src) in [(&mut self.w, &other.w), (&mut self.u, &other.u), (&mut self.b, &other.b), (&mut self.w_out, &other.w_out)] {
            dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
        }
        self.b_out += other.b_out;
    }

    fn scale(&mut self, k: f64) {
        self.embed.values_mut().flatten().for_each(|a| *a *= k);
        for v in [&mut self.w, &mut self.u, &mut self.b, &mut self.w_out] {
            v.iter_mut().for_each(|a| *a *= k);
        }
        self.b_out *= k;
    }

    pub fn norm(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        let e: f64 = self.embed.values().map(|r| sq(r)).sum();
        (e + sq(&self.w) + sq(&self.u) + sq(&self.b) + sq(&self.w_out) + self.b_out * self.b_out).sqrt()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Binary cross-entropy of probability `p` against `y`.
pub fn bce(p: f64, y: Label) -> f64 {
    let eps = 1e-12;
    match y {
        Label::Depressive => -(p.max(eps)).ln(),
        Label::NonDepressive => -((1.0 - p).max(eps)).ln(),
    }
}

impl LSTMModel {
    pub fn zeros(vocab_size: usize, cfg: &LSTMConfig) -> LSTMModel {
        let (d, h) = (cfg.embed_dim, cfg.hidden);
        LSTMModel {
            cfg: *cfg,
            vocab_size,
            embed: vec![0.0; (vocab_size + 1) * d],
            w: vec![0.0; d * 4 * h],
            u: vec![0.0; h * 4 * h],
            b: vec![0.0; 4 * h],
            w_out: vec![0.0; h],
            b_out: 0.0,
        }
    }

    /// Weights uniform in [-0.05, 0.05], biases zero except the forget
    /// gate at +1. The padding row stays zero.
    pub fn new(vocab_size: usize, cfg: &LSTMConfig) -> Result<LSTMModel> {
        cfg.validate()?;
        let mut m = LSTMModel::zeros(vocab_size, cfg);
        let mut rng = rng::derived(cfg.seed, 0x6c73_746d, 0);
        let d = cfg.embed_dim;
        let fill = |v: &mut [f64], rng: &mut rng::Rng| v.iter_mut().for_each(|a| *a = rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        fill(&mut m.embed[d..], &mut rng);
        fill(&mut m.w, &mut rng);
        fill(&mut m.u, &mut rng);
        fill(&mut m.w_out, &mut rng);
        let h = cfg.hidden;
        m.b[h..2 * h].iter_mut().for_each(|a| *a = 1.0);
        Ok(m)
    }

    /// Copies rows of a trained word embedding into `E`; tokens absent
    /// from `emb` keep their current row.
    pub fn init_embeddings(&mut self, vocab: &Vocabulary, emb: &EmbeddingMatrix) -> Result<()> {
        let d = self.cfg.embed_dim;
        if emb.dim != d {
            return Err(LstmError::Config(format!("embedding dim {} does not match embed_dim {d}", emb.dim)));
        }
        for (i, term) in vocab.terms().iter().enumerate().take(self.vocab_size) {
            if let Some(v) = emb.vector(term) {
                self.embed[(i + 1) * d..(i + 2) * d].copy_from_slice(v);
            }
        }
        Ok(())
    }

    fn check(&self, ids: &[usize]) -> Result<()> {
        if ids.len() != self.cfg.max_len {
            return Err(LstmError::Shape { expected: self.cfg.max_len, got: ids.len() });
        }
        if let Some(&bad) = ids.iter().find(|&&i| i > self.vocab_size) {
            return Err(LstmError::TokenId(bad));
        }
        Ok(())
    }

    /// Runs the recurrence, skipping padding ids. Returns the non-padding
    /// steps and the final hidden state.
    pub fn steps(&self, ids: &[usize], masks: Option<&Masks>) -> Result<(Vec<Step>, Vec<f64>)> {
        self.check(ids)?;
        let (d, h) = (self.cfg.embed_dim, self.cfg.hidden);
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut steps = Vec::new();
        for &id in ids.iter().filter(|&&id| id != 0) {
            let mut x = self.embed[id * d..(id + 1) * d].to_vec();
            let mut hp = hs.clone();
            if let Some(m) = masks {
                x.iter_mut().zip(&m.x).for_each(|(a, k)| *a *= k);
                hp.iter_mut().zip(&m.h).for_each(|(a, k)| *a *= k);
            }
            let mut z = self.b.clone();
            for (k, &xk) in x.iter().enumerate() {
                if xk != 0.0 {
                    z.iter_mut().zip(&self.w[k * 4 * h..(k + 1) * 4 * h]).for_each(|(a, w)| *a += xk * w);
                }
            }
            for (k, &hk) in hp.iter().enumerate() {
                if hk != 0.0 {
                    z.iter_mut().zip(&self.u[k * 4 * h..(k + 1) * 4 * h]).for_each(|(a, u)| *a += hk * u);
                }
            }
            let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let o: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[3 * h..].iter().map(|&v| v.tanh()).collect();
            let c: Vec<f64> = (0..h).map(|j| f[j] * cs[j] + i[j] * g[j]).collect();
            let hn: Vec<f64> = (0..h).map(|j| o[j] * c[j].tanh()).collect();
            steps.push(Step { id, x, h_prev: hp, c_prev: cs, i, f, o, g, c: c.clone(), h: hn.clone() });
            hs = hn;
            cs = c;
        }
        Ok((steps, hs))
    }

    pub fn forward(&self, ids: &[usize]) -> Result<f64> {
        let (_, h) = self.steps(ids, None)?;
        Ok(self.output(&h))
    }

    fn output(&self, h: &[f64]) -> f64 {
        sigmoid(h.iter().zip(&self.w_out).map(|(a, b)| a * b).sum::<f64>() + self.b_out)
    }

    /// Depressive iff the probability is strictly above 0.5.
    pub fn predict(&self, ids: &[usize]) -> Result<Prediction> {
        let p = self.forward(ids)?;
        let label = if p > 0.5 { Label::Depressive } else { Label::NonDepressive };
        Ok(Prediction { label, score: p })
    }

    /// Cross-entropy loss of one example and its gradient by
    /// backpropagation through every step.
    pub fn loss_and_grad(&self, ids: &[usize], y: Label, masks: Option<&Masks>) -> Result<(f64, Grads)> {
        let (steps, h_last) = self.steps(ids, masks)?;
        let (d, h) = (self.cfg.embed_dim, self.cfg.hidden);
        let p = self.output(&h_last);
        let target = if y == Label::Depressive { 1.0 } else { 0.0 };
        let dlogit = p - target;
        let mut g = Grads::zeros(self);
        g.b_out = dlogit;
        g.w_out = h_last.iter().map(|a| a * dlogit).collect();
        let mut dh: Vec<f64> = self.w_out.iter().map(|w| w * dlogit).collect();
        let mut dc = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for s in steps.iter().rev() {
            for j in 0..h {
                let tc = s.c[j].tanh();
                let dcj = dc[j] + dh[j] * s.o[j] * (1.0 - tc * tc);
                dz[j] = dcj * s.g[j] * s.i[j] * (1.0 - s.i[j]);
                dz[h + j] = dcj * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
                dz[2 * h + j] = dh[j] * tc * s.o[j] * (1.0 - s.o[j]);
                dz[3 * h + j] = dcj * s.i[j] * (1.0 - s.g[j] * s.g[j]);
                dc[j] = dcj * s.f[j];
            }
            g.b.iter_mut().zip(&dz).for_each(|(a, b)| *a += b);
            let mut dx = vec![0.0; d];
            for k in 0..d {
                let row = &self.w[k * 4 * h..(k + 1) * 4 * h];
                let grow = &mut g.w[k * 4 * h..(k + 1) * 4 * h];
                let xk = s.x[k];
                let mut acc = 0.0;
                for q in 0..4 * h {
                    grow[q] += xk * dz[q];
                    acc += row[q] * dz[q];
                }
                dx[k] = acc;
            }
            let mut dhp = vec![0.0; h];
            for k in 0..h {
                let row = &self.u[k * 4 * h..(k + 1) * 4 * h];
                let grow = &mut g.u[k * 4 * h..(k + 1) * 4 * h];
                let hk = s.h_prev[k];
                let mut acc = 0.0;
                for q in 0..4 * h {
                    grow[q] += hk * dz[q];
                    acc += row[q] * dz[q];
                }
                dhp[k] = acc;
            }
            if let Some(m) = masks {
                dx.iter_mut().zip(&m.x).for_each(|(a, k)| *a *= k);
                dhp.iter_mut().zip(&m.h).for_each(|(a, k)| *a *= k);
            }
            let erow = g.embed.entry(s.id).or_insert_with(|| vec![0.0; d]);
            erow.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            dh = dhp;
        }
        Ok((bce(p, y), g))
    }

    fn apply(&mut self, g: &Grads, lr: f64) {
        let d = self.cfg.embed_dim;
        for (id, row) in &g.embed {
            self.embed[id * d..(id + 1) * d].iter_mut().zip(row).for_each(|(a, b)| *a -= lr * b);
        }
        for (p, gr) in [(&mut self.w, &g.w), (&mut self.u, &g.u), (&mut self.b, &g.b), (&mut self.w_out, &g.w_out)] {
            p.iter_mut().zip(gr).for_each(|(a, b)| *a -= lr * b);
        }
        self.b_out -= lr * g.b_out;
    }

    pub fn is_finite(&self) -> bool {
        [&self.embed, &self.w, &self.u, &self.b, &self.w_out].iter().all(|v| v.iter().all(|a| a.is_finite()))
            && self.b_out.is_finite()
    }
}

/// Mini-batch SGD on mean cross-entropy with full BPTT. Each sequence
/// draws one input mask and one recurrent mask per epoch; the batch
/// gradient is clipped to norm [`GRAD_CLIP`]. Returns the model and the
/// mean training loss of every epoch.
///
/// Per-example gradients are computed in parallel and summed in batch
/// order, so the result is the same for any thread count.
pub fn lstm_train(mut model: LSTMModel, data: &[(Vec<usize>, Label)]) -> Result<(LSTMModel, Vec<f64>)> {
    let cfg = model.cfg;
    cfg.validate()?;
    let Some(first) = data.first() else {
        return Err(LstmError::Empty);
    };
    if data.iter().all(|(_, y)| *y == first.1) {
        return Err(LstmError::SingleClass(first.1));
    }
    for (ids, _) in data {
        model.check(ids)?;
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = rng::derived(cfg.seed, 0x6c73_746d, epoch as u64 + 1);
        order.shuffle(&mut rng);
        let masks: Vec<Masks> = (0..data.len())
            .map(|_| Masks {
                x: dropout_mask(&mut rng, cfg.embed_dim, cfg.dropout_in),
                h: dropout_mask(&mut rng, cfg.hidden, cfg.dropout_rec),
            })
            .collect();
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch) {
            let m = &model;
            let parts: Vec<(f64, Grads)> = batch
                .par_iter()
                .map(|&k| m.loss_and_grad(&data[k].0, data[k].1, Some(&masks[k])))
                .collect::<Result<_>>()?;
            let mut g = Grads::zeros(&model);
            for (loss, part) in &parts {
                total += loss;
                g.add(part);
            }
            g.scale(1.0 / batch.len() as f64);
            let norm = g.norm();
            if norm > GRAD_CLIP {
                g.scale(GRAD_CLIP / norm);
            }
            model.apply(&g, cfg.lr);
        }
        trace.push(total / data.len() as f64);
    }
    Ok((model, trace))
}
