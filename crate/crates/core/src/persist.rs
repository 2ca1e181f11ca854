//! `.ddm` model container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "DDM" version:u8
//! header_len:u32 header:JSON (UTF-8)
//! n_arrays:u32 { name_len:u32 name:UTF-8 dtype:u8 ndim:u8 dims:u64*ndim data:f64*prod(dims) }*
//! crc32:u32        (over everything between the version byte and the CRC)
//! ```
//!
//! The header holds the model kind, the format version, a config echo, an
//! optional vocabulary and creation metadata. Numeric parameters live in
//! the binary arrays so they round-trip exactly. The same model always
//! encodes to the same bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::embed::{D2VModel, EmbeddingMatrix, W2VConfig};
use crate::label::Label;
use crate::lstm::{LSTMConfig, LSTMModel};
use crate::shallow::{DecisionTree, ForestConfig, MNBModel, Node, RFModel, SVMModel, SvmConfig};
use crate::vectorize::{VectorMode, VectorizerModel, Vocabulary};

pub const MAGIC: &[u8; 3] = b"DDM";
pub const FORMAT_VERSION: u8 = 1;
pub const EXTENSION: &str = "ddm";
const DTYPE_F64_LE: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model artifact (bad magic bytes)")]
    BadMagic,
    #[error("unsupported artifact format version {0}")]
    UnsupportedVersion(u8),
    #[error("artifact failed integrity check: {0}")]
    Integrity(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown model kind {0:?}")]
    UnknownKind(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("artifact holds a {found} model, expected {expected}")]
    WrongKind { expected: ModelKind, found: ModelKind },
}

pub type Result<T> = std::result::Result<T, PersistError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Mnb,
    Svm,
    Rf,
    Lstm,
    W2v,
    D2v,
    Vectorizer,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] =
        [ModelKind::Mnb, ModelKind::Svm, ModelKind::Rf, ModelKind::Lstm, ModelKind::W2v, ModelKind::D2v, ModelKind::Vectorizer];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mnb => "mnb",
            ModelKind::Svm => "svm",
            ModelKind::Rf => "rf",
            ModelKind::Lstm => "lstm",
            ModelKind::W2v => "w2v",
            ModelKind::D2v => "d2v",
            ModelKind::Vectorizer => "vectorizer",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| PersistError::UnknownKind(s.to_string()))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabRecord {
    pub terms: Vec<String>,
    pub df: Vec<usize>,
    pub n_docs: usize,
}

impl VocabRecord {
    pub fn from_vocab(v: &Vocabulary) -> VocabRecord {
        VocabRecord { terms: v.terms().to_vec(), df: v.df().to_vec(), n_docs: v.n_docs() }
    }

    pub fn to_vocab(&self) -> Result<Vocabulary> {
        Vocabulary::from_parts(self.terms.clone(), self.df.clone(), self.n_docs).map_err(|e| PersistError::Header(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub format_version: u8,
    /// `{"model": ...}` for the stored model's own settings; pipelines add
    /// a `"pipeline"` entry.
    pub config: Value,
    pub vocabulary: Option<VocabRecord>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<u64>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub header: Header,
    pub arrays: Vec<NamedArray>,
}

fn default_metadata() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("producer".to_string(), format!("depdetect {}", env!("CARGO_PKG_VERSION"))),
        ("byte_order".to_string(), "little-endian".to_string()),
    ])
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(PersistError::ShapeMismatch(format!("need {n} bytes at offset {}, {} left", self.pos, self.bytes.len() - self.pos)));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Artifact {
    pub fn new(kind: ModelKind) -> Artifact {
        Artifact {
            header: Header {
                kind: kind.as_str().to_string(),
                format_version: FORMAT_VERSION,
                config: json!({}),
                vocabulary: None,
                metadata: default_metadata(),
            },
            arrays: Vec::new(),
        }
    }

    pub fn kind(&self) -> Result<ModelKind> {
        ModelKind::parse(&self.header.kind)
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f64>) {
        self.arrays.push(NamedArray { name: name.into(), shape: shape.iter().map(|&d| d as u64).collect(), data });
    }

    /// Array `name` with its shape checked against `shape`.
    pub fn array(&self, name: &str, shape: &[usize]) -> Result<&[f64]> {
        let a = self
            .arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| PersistError::ShapeMismatch(format!("array {name:?} is missing")))?;
        let want: Vec<u64> = shape.iter().map(|&d| d as u64).collect();
        if a.shape != want {
            return Err(PersistError::ShapeMismatch(format!("array {name:?} has shape {:?}, expected {want:?}", a.shape)));
        }
        Ok(&a.data)
    }

    /// Array `name` of any shape.
    pub fn array_any(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| PersistError::ShapeMismatch(format!("array {name:?} is missing")))
    }

    pub fn model_config(&self) -> Result<&Value> {
        self.header.config.get("model").ok_or_else(|| PersistError::Header("config has no \"model\" entry".into()))
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        self.header
            .vocabulary
            .as_ref()
            .ok_or_else(|| PersistError::Header("artifact carries no vocabulary".into()))?
            .to_vocab()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header).map_err(|e| PersistError::Header(e.to_string()))?;
        let mut body = Vec::new();
        body.extend_from_slice(&(header.len() as u32).to_le_bytes());
        body.extend_from_slice(&header);
        body.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            let expected: u64 = a.shape.iter().product();
            if expected != a.data.len() as u64 || a.shape.len() > u8::MAX as usize {
                return Err(PersistError::ShapeMismatch(format!("array {:?} shape {:?} holds {} values", a.name, a.shape, a.data.len())));
            }
            body.extend_from_slice(&(a.name.len() as u32).to_le_bytes());
            body.extend_from_slice(a.name.as_bytes());
            body.push(DTYPE_F64_LE);
            body.push(a.shape.len() as u8);
            for d in &a.shape {
                body.extend_from_slice(&d.to_le_bytes());
            }
            for v in &a.data {
                body.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&body);
        let mut out = Vec::with_capacity(body.len() + 8);
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&body);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Artifact> {
        if bytes.len() < 4 || &bytes[..3] != MAGIC {
            return Err(PersistError::BadMagic);
        }
        if bytes[3] != FORMAT_VERSION {
            return Err(PersistError::UnsupportedVersion(bytes[3]));
        }
        if bytes.len() < 4 + 4 + 4 + 4 {
            return Err(PersistError::Integrity(format!("file is truncated ({} bytes)", bytes.len())));
        }
        let (body, trailer) = bytes[4..].split_at(bytes.len() - 8);
        let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(PersistError::Integrity(format!("CRC-32 mismatch: stored {stored:08x}, computed {actual:08x}")));
        }
        let mut c = Cursor { bytes: body, pos: 0 };
        let hlen = c.u32()? as usize;
        let header: Header = serde_json::from_slice(c.take(hlen)?).map_err(|e| PersistError::Header(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(PersistError::UnsupportedVersion(header.format_version));
        }
        ModelKind::parse(&header.kind)?;
        let n = c.u32()? as usize;
        let mut arrays = Vec::new();
        for _ in 0..n {
            let len = c.u32()? as usize;
            let name = String::from_utf8(c.take(len)?.to_vec()).map_err(|_| PersistError::Header("array name is not UTF-8".into()))?;
            let dtype = c.u8()?;
            if dtype != DTYPE_F64_LE {
                return Err(PersistError::ShapeMismatch(format!("array {name:?} has unknown element type {dtype}")));
            }
            let ndim = c.u8()? as usize;
            let shape: Vec<u64> = (0..ndim).map(|_| c.u64()).collect::<Result<_>>()?;
            let count = shape.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d));
            let bytes_needed = count.and_then(|n| n.checked_mul(8)).filter(|&b| b <= (body.len() - c.pos) as u64);
            let Some(bytes_needed) = bytes_needed else {
                return Err(PersistError::ShapeMismatch(format!("array {name:?} declares shape {shape:?} beyond the payload")));
            };
            let data = c
                .take(bytes_needed as usize)?
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            arrays.push(NamedArray { name, shape, data });
        }
        if c.pos != body.len() {
            return Err(PersistError::ShapeMismatch(format!("{} trailing payload bytes", body.len() - c.pos)));
        }
        Ok(Artifact { header, arrays })
    }
}

fn section<T: for<'de> Deserialize<'de>>(v: &Value, key: &str) -> Result<T> {
    let field = v.get(key).ok_or_else(|| PersistError::Header(format!("config is missing {key:?}")))?;
    serde_json::from_value(field.clone()).map_err(|e| PersistError::Header(format!("{key}: {e}")))
}

fn as_index(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 {
        Ok(v as usize)
    } else {
        Err(PersistError::ShapeMismatch(format!("{what} holds non-index value {v}")))
    }
}

/// A model that can be written into an artifact. Arrays are named
/// `prefix + name`; the returned value is the model's config section.
pub trait Persist: Sized {
    const KIND: ModelKind;
    fn store(&self, a: &mut Artifact, prefix: &str) -> Value;
    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self>;
}

impl Persist for VectorizerModel {
    const KIND: ModelKind = ModelKind::Vectorizer;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        a.header.vocabulary = Some(VocabRecord::from_vocab(&self.vocab));
        if let Some(idf) = &self.idf {
            a.push(format!("{prefix}idf"), &[idf.len()], idf.clone());
        }
        json!({ "mode": self.mode, "dim": self.dim() })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let vocab = a.vocabulary()?;
        let mode: VectorMode = section(cfg, "mode")?;
        let idf = match mode {
            VectorMode::Tfidf => Some(a.array(&format!("{prefix}idf"), &[vocab.len()])?.to_vec()),
            _ => None,
        };
        Ok(VectorizerModel { vocab, mode, idf })
    }
}

impl Persist for MNBModel {
    const KIND: ModelKind = ModelKind::Mnb;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        a.push(format!("{prefix}log_priors"), &[2], self.log_priors.to_vec());
        a.push(format!("{prefix}log_likelihoods"), &[2, self.n_features], self.log_likelihoods.clone());
        json!({ "alpha": self.alpha, "n_features": self.n_features })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let n_features: usize = section(cfg, "n_features")?;
        let p = a.array(&format!("{prefix}log_priors"), &[2])?;
        Ok(MNBModel {
            log_priors: [p[0], p[1]],
            log_likelihoods: a.array(&format!("{prefix}log_likelihoods"), &[2, n_features])?.to_vec(),
            alpha: section(cfg, "alpha")?,
            n_features,
        })
    }
}

impl Persist for SVMModel {
    const KIND: ModelKind = ModelKind::Svm;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        a.push(format!("{prefix}weights"), &[self.weights.len()], self.weights.clone());
        a.push(format!("{prefix}bias"), &[1], vec![self.bias]);
        a.push(format!("{prefix}objective_trace"), &[self.objective_trace.len()], self.objective_trace.clone());
        json!({ "svm": self.cfg, "n_features": self.weights.len() })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let n: usize = section(cfg, "n_features")?;
        let svm: SvmConfig = section(cfg, "svm")?;
        let trace = a.array_any(&format!("{prefix}objective_trace"))?;
        Ok(SVMModel {
            weights: a.array(&format!("{prefix}weights"), &[n])?.to_vec(),
            bias: a.array(&format!("{prefix}bias"), &[1])?[0],
            cfg: svm,
            objective_trace: trace.data.clone(),
        })
    }
}

const NODE_SPLIT: f64 = 0.0;
const NODE_LEAF: f64 = 1.0;

/// Node rows are `[kind, feature | label, threshold | fraction, left, right]`.
fn encode_tree(t: &DecisionTree) -> Vec<f64> {
    t.nodes
        .iter()
        .flat_map(|n| match *n {
            Node::Split { feature, threshold, left, right } => [NODE_SPLIT, feature as f64, threshold, left as f64, right as f64],
            Node::Leaf { label, fraction } => [NODE_LEAF, label.index() as f64, fraction, 0.0, 0.0],
        })
        .collect()
}

fn decode_tree(rows: &[f64], what: &str) -> Result<DecisionTree> {
    let nodes = rows
        .chunks_exact(5)
        .map(|r| {
            if r[0] == NODE_SPLIT {
                Ok(Node::Split {
                    feature: as_index(r[1], what)?,
                    threshold: r[2],
                    left: as_index(r[3], what)?,
                    right: as_index(r[4], what)?,
                })
            } else if r[0] == NODE_LEAF {
                let label = match as_index(r[1], what)? {
                    i @ (0 | 1) => Label::from_index(i),
                    _ => return Err(PersistError::ShapeMismatch(format!("{what}: bad leaf label {}", r[1]))),
                };
                Ok(Node::Leaf { label, fraction: r[2] })
            } else {
                Err(PersistError::ShapeMismatch(format!("{what}: unknown node kind {}", r[0])))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let tree = DecisionTree { nodes };
    if !tree.is_well_formed() {
        return Err(PersistError::ShapeMismatch(format!("{what} is not a well-formed tree")));
    }
    Ok(tree)
}

impl Persist for RFModel {
    const KIND: ModelKind = ModelKind::Rf;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        a.push(format!("{prefix}tree_weights"), &[self.tree_weights.len()], self.tree_weights.clone());
        for (k, t) in self.trees.iter().enumerate() {
            a.push(format!("{prefix}tree.{k}"), &[t.nodes.len(), 5], encode_tree(t));
        }
        json!({ "forest": self.cfg, "n_features": self.n_features, "n_trees": self.trees.len() })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let n_trees: usize = section(cfg, "n_trees")?;
        let forest: ForestConfig = section(cfg, "forest")?;
        let tree_weights = a.array(&format!("{prefix}tree_weights"), &[n_trees])?.to_vec();
        let trees = (0..n_trees)
            .map(|k| {
                let name = format!("{prefix}tree.{k}");
                let arr = a.array_any(&name)?;
                if arr.shape.len() != 2 || arr.shape[1] != 5 {
                    return Err(PersistError::ShapeMismatch(format!("{name} has shape {:?}, expected [n, 5]", arr.shape)));
                }
                decode_tree(&arr.data, &name)
            })
            .collect::<Result<_>>()?;
        Ok(RFModel { trees, tree_weights, cfg: forest, n_features: section(cfg, "n_features")? })
    }
}

impl Persist for LSTMModel {
    const KIND: ModelKind = ModelKind::Lstm;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        let (d, h) = (self.cfg.embed_dim, self.cfg.hidden);
        a.push(format!("{prefix}embed"), &[self.vocab_size + 1, d], self.embed.clone());
        a.push(format!("{prefix}w"), &[d, 4 * h], self.w.clone());
        a.push(format!("{prefix}u"), &[h, 4 * h], self.u.clone());
        a.push(format!("{prefix}b"), &[4 * h], self.b.clone());
        a.push(format!("{prefix}w_out"), &[h], self.w_out.clone());
        a.push(format!("{prefix}b_out"), &[1], vec![self.b_out]);
        json!({ "lstm": self.cfg, "vocab_size": self.vocab_size, "gate_order": "i,f,o,c" })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let lc: LSTMConfig = section(cfg, "lstm")?;
        let v: usize = section(cfg, "vocab_size")?;
        let (d, h) = (lc.embed_dim, lc.hidden);
        let get = |name: &str, shape: &[usize]| a.array(&format!("{prefix}{name}"), shape).map(<[f64]>::to_vec);
        Ok(LSTMModel {
            cfg: lc,
            vocab_size: v,
            embed: get("embed", &[v + 1, d])?,
            w: get("w", &[d, 4 * h])?,
            u: get("u", &[h, 4 * h])?,
            b: get("b", &[4 * h])?,
            w_out: get("w_out", &[h])?,
            b_out: get("b_out", &[1])?[0],
        })
    }
}

impl Persist for EmbeddingMatrix {
    const KIND: ModelKind = ModelKind::W2v;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        a.header.vocabulary = Some(VocabRecord::from_vocab(&self.vocab));
        let v = self.vocab.len();
        a.push(format!("{prefix}input"), &[v, self.dim], self.input.clone());
        a.push(format!("{prefix}output"), &[v, self.dim], self.output.clone());
        json!({ "dim": self.dim })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let vocab = a.vocabulary()?;
        let dim: usize = section(cfg, "dim")?;
        let v = vocab.len();
        Ok(EmbeddingMatrix {
            input: a.array(&format!("{prefix}input"), &[v, dim])?.to_vec(),
            output: a.array(&format!("{prefix}output"), &[v, dim])?.to_vec(),
            vocab,
            dim,
        })
    }
}

impl Persist for D2VModel {
    const KIND: ModelKind = ModelKind::D2v;

    fn store(&self, a: &mut Artifact, prefix: &str) -> Value {
        let words = self.words.store(a, prefix);
        let d = self.words.dim;
        a.push(format!("{prefix}doc_vectors"), &[self.doc_ids.len(), d], self.doc_vectors.clone());
        a.push(format!("{prefix}tag_vectors"), &[self.tags.len(), d], self.tag_vectors.clone());
        json!({
            "words": words,
            "w2v": self.cfg,
            "doc_ids": self.doc_ids,
            "tags": self.tags,
            "doc_tags": self.doc_tags,
        })
    }

    fn restore(a: &Artifact, prefix: &str, cfg: &Value) -> Result<Self> {
        let words = EmbeddingMatrix::restore(a, prefix, cfg.get("words").unwrap_or(&Value::Null))?;
        let doc_ids: Vec<String> = section(cfg, "doc_ids")?;
        let tags: Vec<String> = section(cfg, "tags")?;
        let doc_tags: Vec<usize> = section(cfg, "doc_tags")?;
        if doc_tags.len() != doc_ids.len() || doc_tags.iter().any(|&t| t >= tags.len()) {
            return Err(PersistError::ShapeMismatch("document tags do not match the tag table".into()));
        }
        let d = words.dim;
        let w2v: W2VConfig = section(cfg, "w2v")?;
        Ok(D2VModel {
            doc_vectors: a.array(&format!("{prefix}doc_vectors"), &[doc_ids.len(), d])?.to_vec(),
            tag_vectors: a.array(&format!("{prefix}tag_vectors"), &[tags.len(), d])?.to_vec(),
            words,
            doc_ids,
            tags,
            doc_tags,
            cfg: w2v,
        })
    }
}

/// Any model kind that can stand alone in an artifact.
#[derive(Clone, Debug, PartialEq)]
pub enum SavedModel {
    Mnb(MNBModel),
    Svm(SVMModel),
    Rf(RFModel),
    Lstm(LSTMModel),
    W2v(EmbeddingMatrix),
    D2v(D2VModel),
    Vectorizer(VectorizerModel),
}

impl SavedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SavedModel::Mnb(_) => ModelKind::Mnb,
            SavedModel::Svm(_) => ModelKind::Svm,
            SavedModel::Rf(_) => ModelKind::Rf,
            SavedModel::Lstm(_) => ModelKind::Lstm,
            SavedModel::W2v(_) => ModelKind::W2v,
            SavedModel::D2v(_) => ModelKind::D2v,
            SavedModel::Vectorizer(_) => ModelKind::Vectorizer,
        }
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(self.kind());
        let cfg = match self {
            SavedModel::Mnb(m) => m.store(&mut a, ""),
            SavedModel::Svm(m) => m.store(&mut a, ""),
            SavedModel::Rf(m) => m.store(&mut a, ""),
            SavedModel::Lstm(m) => m.store(&mut a, ""),
            SavedModel::W2v(m) => m.store(&mut a, ""),
            SavedModel::D2v(m) => m.store(&mut a, ""),
            SavedModel::Vectorizer(m) => m.store(&mut a, ""),
        };
        a.header.config = json!({ "model": cfg });
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<SavedModel> {
        let cfg = a.model_config()?;
        Ok(match a.kind()? {
            ModelKind::Mnb => SavedModel::Mnb(MNBModel::restore(a, "", cfg)?),
            ModelKind::Svm => SavedModel::Svm(SVMModel::restore(a, "", cfg)?),
            ModelKind::Rf => SavedModel::Rf(RFModel::restore(a, "", cfg)?),
            ModelKind::Lstm => SavedModel::Lstm(LSTMModel::restore(a, "", cfg)?),
            ModelKind::W2v => SavedModel::W2v(EmbeddingMatrix::restore(a, "", cfg)?),
            ModelKind::D2v => SavedModel::D2v(D2VModel::restore(a, "", cfg)?),
            ModelKind::Vectorizer => SavedModel::Vectorizer(VectorizerModel::restore(a, "", cfg)?),
        })
    }
}

/// Writes the artifact and returns the number of bytes written.
pub fn save_model<W: Write>(model: &SavedModel, mut sink: W) -> Result<usize> {
    let bytes = model.to_artifact().to_bytes()?;
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(bytes.len())
}

pub fn load_model<R: Read>(mut source: R) -> Result<SavedModel> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    SavedModel::from_artifact(&Artifact::from_bytes(&bytes)?)
}

/// Loads a standalone model of a known type.
pub fn load_as<T: Persist, R: Read>(mut source: R) -> Result<T> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let a = Artifact::from_bytes(&bytes)?;
    let found = a.kind()?;
    if found != T::KIND {
        return Err(PersistError::WrongKind { expected: T::KIND, found });
    }
    T::restore(&a, "", a.model_config()?)
}
