//! Word2Vec (CBOW and skip-gram) and Doc2Vec (PV-DM with tag vectors),
//! trained by plain SGD on the negative-sampling logistic loss.
//!
//! For one training example the predictor `h` is the mean of a set of input
//! rows (one center word for skip-gram; context words for CBOW; context
//! words plus the document and tag vectors for PV-DM). With output row
//! `u_o` for the true word and `u_1..u_k` for sampled negatives:
//!
//! ```text
//! loss = -ln σ(u_o·h) - Σ ln σ(-u_i·h)
//! ```
//!
//! Negatives are drawn from the unigram distribution raised to 3/4. The
//! learning rate decays linearly from `lr` to `lr / 100` over training.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::textprep::TokenizedDoc;
use crate::vectorize::Vocabulary;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("training error: {0}")]
    Training(String),
    #[error("document {0:?} has no tag")]
    MissingTag(String),
    #[error("inference error: {0}")]
    Inference(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum W2VMode {
    Cbow,
    Skipgram,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W2VConfig {
    pub mode: W2VMode,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for W2VConfig {
    fn default() -> Self {
        W2VConfig { mode: W2VMode::Cbow, dim: 50, window: 4, negatives: 5, epochs: 15, lr: 0.025, seed: 0 }
    }
}

impl W2VConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(EmbedError::Config("dim, window, negatives and epochs must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(EmbedError::Config(format!("learning rate must be > 0, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Input-side and output-side word matrices, both `V x dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(|i| self.row(i))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss and its gradient for a single example.
pub mod negsample {
    use super::{dot, neg_log_sigmoid, sigmoid};

    pub fn mean(inputs: &[&[f64]], dim: usize) -> Vec<f64> {
        let mut h = vec![0.0; dim];
        for row in inputs {
            for (a, b) in h.iter_mut().zip(row.iter()) {
                *a += b;
            }
        }
        let n = inputs.len() as f64;
        h.iter_mut().for_each(|a| *a /= n);
        h
    }

    /// Loss with predictor `mean(inputs)`.
    pub fn loss(inputs: &[&[f64]], positive: &[f64], negatives: &[&[f64]]) -> f64 {
        let h = mean(inputs, positive.len());
        neg_log_sigmoid(dot(positive, &h)) + negatives.iter().map(|u| neg_log_sigmoid(-dot(u, &h))).sum::<f64>()
    }

    #[derive(Clone, Debug)]
    pub struct Gradient {
        pub loss: f64,
        /// One entry per input row; each equals dL/dh divided by the number
        /// of inputs.
        pub inputs: Vec<f64>,
        pub positive: Vec<f64>,
        pub negatives: Vec<Vec<f64>>,
    }

    pub fn gradient(inputs: &[&[f64]], positive: &[f64], negatives: &[&[f64]]) -> Gradient {
        let dim = positive.len();
        let h = mean(inputs, dim);
        let s_pos = dot(positive, &h);
        let g_pos = sigmoid(s_pos) - 1.0;
        let mut loss = neg_log_sigmoid(s_pos);
        let mut d_h: Vec<f64> = positive.iter().map(|u| g_pos * u).collect();
        let d_positive: Vec<f64> = h.iter().map(|x| g_pos * x).collect();
        let mut d_negatives = Vec::with_capacity(negatives.len());
        for u in negatives {
            let s = dot(u, &h);
            loss += neg_log_sigmoid(-s);
            let g = sigmoid(s);
            for (a, b) in d_h.iter_mut().zip(u.iter()) {
                *a += g * b;
            }
            d_negatives.push(h.iter().map(|x| g * x).collect());
        }
        let n = inputs.len() as f64;
        d_h.iter_mut().for_each(|a| *a /= n);
        Gradient { loss, inputs: d_h, positive: d_positive, negatives: d_negatives }
    }
}

fn uniform_init(rng: &mut rng::Rng, len: usize, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..len).map(|_| rng.gen_range(-half..half)).collect()
}

fn encode_docs<D: AsRef<[String]>>(docs: &[D], vocab: &Vocabulary) -> Vec<Vec<usize>> {
    docs.iter().map(|d| d.as_ref().iter().filter_map(|t| vocab.get(t)).collect()).collect()
}

fn noise_distribution(encoded: &[Vec<usize>], v: usize) -> Result<WeightedIndex<f64>> {
    let mut counts = vec![0usize; v];
    for d in encoded {
        for &i in d {
            counts[i] += 1;
        }
    }
    WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| EmbedError::Training(format!("cannot build the noise distribution: {e}")))
}

fn context_positions(len: usize, center: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = center.saturating_sub(window);
    let hi = (center + window).min(len - 1);
    (lo..=hi).filter(move |&j| j != center)
}

fn sample_negatives(rng: &mut rng::Rng, noise: &WeightedIndex<f64>, k: usize, target: usize) -> Vec<usize> {
    (0..k).map(|_| noise.sample(rng)).filter(|&n| n != target).collect()
}

struct Schedule {
    lr: f64,
    total: f64,
    done: f64,
}

impl Schedule {
    fn new(lr: f64, total: usize) -> Self {
        Schedule { lr, total: total.max(1) as f64, done: 0.0 }
    }

    fn next(&mut self) -> f64 {
        let progress = (self.done / self.total).min(1.0);
        self.done += 1.0;
        self.lr - (self.lr - self.lr / 100.0) * progress
    }
}

fn axpy(row: &mut [f64], alpha: f64, g: &[f64]) {
    for (r, x) in row.iter_mut().zip(g) {
        *r += alpha * x;
    }
}

/// Which rows take part in one example.
struct Example {
    input_words: Vec<usize>,
    target: usize,
}

/// Gradient of one example. `extras` are input rows that live outside the
/// word matrix (document and tag vectors).
fn example_gradient(
    dim: usize,
    input: &[f64],
    output: &[f64],
    extras: &[&[f64]],
    ex: &Example,
    negatives: &[usize],
) -> negsample::Gradient {
    let mut rows: Vec<&[f64]> = ex.input_words.iter().map(|&w| &input[w * dim..(w + 1) * dim]).collect();
    rows.extend_from_slice(extras);
    let pos = &output[ex.target * dim..(ex.target + 1) * dim];
    let negs: Vec<&[f64]> = negatives.iter().map(|&n| &output[n * dim..(n + 1) * dim]).collect();
    negsample::gradient(&rows, pos, &negs)
}

fn update_words(
    dim: usize,
    input: &mut [f64],
    output: &mut [f64],
    ex: &Example,
    negatives: &[usize],
    grad: &negsample::Gradient,
    lr: f64,
) {
    for &w in &ex.input_words {
        axpy(&mut input[w * dim..(w + 1) * dim], -lr, &grad.inputs);
    }
    axpy(&mut output[ex.target * dim..(ex.target + 1) * dim], -lr, &grad.positive);
    for (&n, g) in negatives.iter().zip(&grad.negatives) {
        axpy(&mut output[n * dim..(n + 1) * dim], -lr, g);
    }
}

const PURPOSE_W2V: u64 = 1;
const PURPOSE_D2V: u64 = 2;
const PURPOSE_INFER: u64 = 3;

/// Trains word vectors. Returns the matrices and the mean example loss of
/// each epoch.
pub fn train_word2vec<D: AsRef<[String]>>(
    docs: &[D],
    vocab: &Vocabulary,
    cfg: &W2VConfig,
) -> Result<(EmbeddingMatrix, Vec<f64>)> {
    cfg.validate()?;
    if vocab.is_empty() {
        return Err(EmbedError::Training("empty vocabulary".into()));
    }
    let encoded: Vec<Vec<usize>> = encode_docs(docs, vocab).into_iter().filter(|d| d.len() >= 2).collect();
    if encoded.is_empty() {
        return Err(EmbedError::Training("no document has two or more in-vocabulary tokens".into()));
    }
    let noise = noise_distribution(&encoded, vocab.len())?;
    let dim = cfg.dim;
    let mut init_rng = rng::seeded(cfg.seed);
    let mut input = uniform_init(&mut init_rng, vocab.len() * dim, dim);
    let mut output = vec![0.0; vocab.len() * dim];

    let positions: usize = encoded.iter().map(Vec::len).sum();
    let mut schedule = Schedule::new(cfg.lr, positions * cfg.epochs);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = rng::derived(cfg.seed, PURPOSE_W2V, epoch as u64);
        let (mut total, mut count) = (0.0, 0usize);
        for doc in &encoded {
            for c in 0..doc.len() {
                let lr = schedule.next();
                let examples: Vec<Example> = match cfg.mode {
                    W2VMode::Cbow => vec![Example {
                        input_words: context_positions(doc.len(), c, cfg.window).map(|j| doc[j]).collect(),
                        target: doc[c],
                    }],
                    W2VMode::Skipgram => context_positions(doc.len(), c, cfg.window)
                        .map(|j| Example { input_words: vec![doc[c]], target: doc[j] })
                        .collect(),
                };
                for ex in examples {
                    let negs = sample_negatives(&mut rng, &noise, cfg.negatives, ex.target);
                    let grad = example_gradient(dim, &input, &output, &[], &ex, &negs);
                    update_words(dim, &mut input, &mut output, &ex, &negs, &grad, lr);
                    total += grad.loss;
                    count += 1;
                }
            }
        }
        trace.push(total / count.max(1) as f64);
    }
    Ok((EmbeddingMatrix { vocab: vocab.clone(), dim, input, output }, trace))
}

/// PV-DM paragraph vectors with an extra per-tag vector.
#[derive(Clone, Debug, PartialEq)]
pub struct D2VModel {
    pub words: EmbeddingMatrix,
    pub doc_ids: Vec<String>,
    /// `n_docs x dim`, row-major, in training order.
    pub doc_vectors: Vec<f64>,
    pub tags: Vec<String>,
    pub tag_vectors: Vec<f64>,
    /// Tag index of every training document.
    pub doc_tags: Vec<usize>,
    pub cfg: W2VConfig,
}

impl D2VModel {
    pub fn doc_vector(&self, i: usize) -> &[f64] {
        let d = self.words.dim;
        &self.doc_vectors[i * d..(i + 1) * d]
    }

    pub fn tag_vector(&self, tag: &str) -> Option<&[f64]> {
        let d = self.words.dim;
        self.tags.iter().position(|t| t == tag).map(|i| &self.tag_vectors[i * d..(i + 1) * d])
    }

    fn noise(&self) -> Result<WeightedIndex<f64>> {
        // Raw token counts are not kept; document frequency stands in for
        // them when drawing negatives at inference time.
        WeightedIndex::new(self.words.vocab.df().iter().map(|&c| (c as f64).powf(0.75)))
            .map_err(|e| EmbedError::Inference(format!("cannot build the noise distribution: {e}")))
    }
}

/// Trains PV-DM. `tags` maps every document id to its tag; tags may be
/// shared. Documents must have at least one in-vocabulary token.
pub fn train_doc2vec(
    docs: &[TokenizedDoc],
    tags: &BTreeMap<String, String>,
    vocab: &Vocabulary,
    cfg: &W2VConfig,
) -> Result<(D2VModel, Vec<f64>)> {
    cfg.validate()?;
    if vocab.is_empty() {
        return Err(EmbedError::Training("empty vocabulary".into()));
    }
    let mut tag_names: Vec<String> = Vec::new();
    let mut doc_tags = Vec::with_capacity(docs.len());
    for d in docs {
        let tag = tags.get(&d.id).ok_or_else(|| EmbedError::MissingTag(d.id.clone()))?;
        let idx = match tag_names.iter().position(|t| t == tag) {
            Some(i) => i,
            None => {
                tag_names.push(tag.clone());
                tag_names.len() - 1
            }
        };
        doc_tags.push(idx);
    }
    let encoded = encode_docs(docs, vocab);
    if let Some(k) = encoded.iter().position(Vec::is_empty) {
        return Err(EmbedError::Training(format!("document {:?} has no in-vocabulary token", docs[k].id)));
    }
    if encoded.is_empty() {
        return Err(EmbedError::Training("no documents".into()));
    }
    let noise = noise_distribution(&encoded, vocab.len())?;
    let dim = cfg.dim;
    let mut init_rng = rng::seeded(cfg.seed);
    let mut input = uniform_init(&mut init_rng, vocab.len() * dim, dim);
    let mut output = vec![0.0; vocab.len() * dim];
    let mut doc_vectors = uniform_init(&mut init_rng, docs.len() * dim, dim);
    let mut tag_vectors = uniform_init(&mut init_rng, tag_names.len() * dim, dim);

    let positions: usize = encoded.iter().map(Vec::len).sum();
    let mut schedule = Schedule::new(cfg.lr, positions * cfg.epochs);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (mut total, mut count) = (0.0, 0usize);
        for (k, doc) in encoded.iter().enumerate() {
            let mut rng = rng::derived(cfg.seed, PURPOSE_D2V, ((epoch as u64) << 32) | k as u64);
            let t = doc_tags[k];
            for c in 0..doc.len() {
                let lr = schedule.next();
                let ex = Example {
                    input_words: context_positions(doc.len(), c, cfg.window).map(|j| doc[j]).collect(),
                    target: doc[c],
                };
                let negs = sample_negatives(&mut rng, &noise, cfg.negatives, ex.target);
                let dv = &mut doc_vectors[k * dim..(k + 1) * dim];
                let tv = &mut tag_vectors[t * dim..(t + 1) * dim];
                let grad = example_gradient(dim, &input, &output, &[&*dv, &*tv], &ex, &negs);
                axpy(dv, -lr, &grad.inputs);
                axpy(tv, -lr, &grad.inputs);
                update_words(dim, &mut input, &mut output, &ex, &negs, &grad, lr);
                total += grad.loss;
                count += 1;
            }
        }
        trace.push(total / count.max(1) as f64);
    }
    let model = D2VModel {
        words: EmbeddingMatrix { vocab: vocab.clone(), dim, input, output },
        doc_ids: docs.iter().map(|d| d.id.clone()).collect(),
        doc_vectors,
        tags: tag_names,
        tag_vectors,
        doc_tags,
        cfg: *cfg,
    };
    Ok((model, trace))
}

/// Fits a fresh document vector against frozen word and output matrices.
/// One step is one pass over the document's positions. The tag of an
/// unseen document is unknown, so only context words and the document
/// vector form the predictor; [`infer_doc_vector_tagged`] adds a known tag.
pub fn infer_doc_vector<D: AsRef<[String]> + ?Sized>(doc: &D, model: &D2VModel, steps: usize, seed: u64) -> Result<Vec<f64>> {
    infer(doc.as_ref(), model, None, steps, seed)
}

pub fn infer_doc_vector_tagged<D: AsRef<[String]> + ?Sized>(
    doc: &D,
    model: &D2VModel,
    tag: &str,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let t = model.tags.iter().position(|x| x == tag).ok_or_else(|| EmbedError::MissingTag(tag.to_string()))?;
    infer(doc.as_ref(), model, Some(t), steps, seed)
}

fn infer(doc: &[String], model: &D2VModel, tag: Option<usize>, steps: usize, seed: u64) -> Result<Vec<f64>> {
    let dim = model.words.dim;
    let ids: Vec<usize> = doc.iter().filter_map(|t| model.words.vocab.get(t)).collect();
    if ids.is_empty() {
        return Err(EmbedError::Inference("document has no in-vocabulary token".into()));
    }
    let mut rng = rng::derived(seed, PURPOSE_INFER, 0);
    let mut vector = uniform_init(&mut rng, dim, dim);
    if steps == 0 {
        return Ok(vector);
    }
    let noise = model.noise()?;
    let tag_row: Option<&[f64]> = tag.map(|t| &model.tag_vectors[t * dim..(t + 1) * dim]);
    let mut schedule = Schedule::new(model.cfg.lr, steps * ids.len());
    for _ in 0..steps {
        for c in 0..ids.len() {
            let lr = schedule.next();
            let ex = Example {
                input_words: context_positions(ids.len(), c, model.cfg.window).map(|j| ids[j]).collect(),
                target: ids[c],
            };
            let negs = sample_negatives(&mut rng, &noise, model.cfg.negatives, ex.target);
            let mut extras: Vec<&[f64]> = vec![&vector];
            extras.extend(tag_row);
            let grad = example_gradient(dim, &model.words.input, &model.words.output, &extras, &ex, &negs);
            axpy(&mut vector, -lr, &grad.inputs);
        }
    }
    Ok(vector)
}

/// Mean input vector of the in-vocabulary tokens; zeros when none.
pub fn doc_embedding_avg<D: AsRef<[String]> + ?Sized>(doc: &D, emb: &EmbeddingMatrix) -> Vec<f64> {
    let rows: Vec<&[f64]> = doc.as_ref().iter().filter_map(|t| emb.vector(t)).collect();
    if rows.is_empty() {
        return vec![0.0; emb.dim];
    }
    negsample::mean(&rows, emb.dim)
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}
