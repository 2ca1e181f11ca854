//! Vocabulary and sparse document vectors: binary bag-of-words, raw counts
//! and TF-IDF.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum VectorizeError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary is inconsistent: {0}")]
    Inconsistent(String),
}

/// Token to index map. Indices follow first occurrence in the fitting
/// corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn from_parts(terms: Vec<String>, df: Vec<usize>, n_docs: usize) -> Result<Vocabulary, VectorizeError> {
        if terms.len() != df.len() {
            return Err(VectorizeError::Inconsistent(format!("{} terms but {} df entries", terms.len(), df.len())));
        }
        if let Some(bad) = df.iter().position(|&d| d == 0 || d > n_docs) {
            return Err(VectorizeError::Inconsistent(format!("df of {:?} outside 1..={n_docs}", terms[bad])));
        }
        let index: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != terms.len() {
            return Err(VectorizeError::Inconsistent("duplicate terms".into()));
        }
        Ok(Vocabulary { terms, index, df, n_docs })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// Builds a vocabulary. `df` counts documents containing a token. With
/// `max_features`, the highest-df tokens win and first occurrence breaks
/// ties; surviving tokens keep first-occurrence indexing.
pub fn fit_vocab<D: AsRef<[String]>>(
    docs: &[D],
    min_df: usize,
    max_features: Option<usize>,
) -> Result<Vocabulary, VectorizeError> {
    if docs.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let mut order: Vec<String> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.as_ref().iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    // First-occurrence order over the token stream.
    let mut first: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for t in doc.as_ref() {
            let next = first.len();
            first.entry(t.as_str()).or_insert_with(|| {
                order.push(t.clone());
                next
            });
        }
    }
    let mut kept: Vec<usize> = (0..order.len()).filter(|&i| df[order[i].as_str()] >= min_df.max(1)).collect();
    if let Some(max) = max_features {
        if kept.len() > max {
            let mut ranked = kept.clone();
            ranked.sort_by(|&a, &b| df[order[b].as_str()].cmp(&df[order[a].as_str()]).then(a.cmp(&b)));
            ranked.truncate(max);
            ranked.sort_unstable();
            kept = ranked;
        }
    }
    let terms: Vec<String> = kept.iter().map(|&i| order[i].clone()).collect();
    let dfs: Vec<usize> = terms.iter().map(|t| df[t.as_str()]).collect();
    Vocabulary::from_parts(terms, dfs, docs.len())
}

/// Sorted `(index, weight)` pairs with no stored zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Sums duplicate indices and drops zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> SparseVector {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        let mut out = SparseVector::default();
        for (i, v) in acc {
            if v != 0.0 {
                out.indices.push(i as u32);
                out.values.push(v);
            }
        }
        out
    }

    pub fn from_dense(dense: &[f64]) -> SparseVector {
        let mut out = SparseVector::default();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                out.indices.push(i as u32);
                out.values.push(v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    /// Dot product with a dense vector; indices past its end count as 0.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().filter(|(i, _)| *i < dense.len()).map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().map(|&i| i as usize)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            if i < dim {
                out[i] = v;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.iter().map(|(i, v)| (i, v * factor)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorMode {
    Binary,
    Count,
    Tfidf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorizerModel {
    pub vocab: Vocabulary,
    pub mode: VectorMode,
    /// Present iff `mode == Tfidf`.
    pub idf: Option<Vec<f64>>,
}

pub fn transform_binary<D: AsRef<[String]> + ?Sized>(doc: &D, vocab: &Vocabulary) -> SparseVector {
    let mut indices: Vec<u32> = doc.as_ref().iter().filter_map(|t| vocab.get(t)).map(|i| i as u32).collect();
    indices.sort_unstable();
    indices.dedup();
    let values = vec![1.0; indices.len()];
    SparseVector { indices, values }
}

pub fn transform_count<D: AsRef<[String]> + ?Sized>(doc: &D, vocab: &Vocabulary) -> SparseVector {
    SparseVector::from_pairs(doc.as_ref().iter().filter_map(|t| vocab.get(t)).map(|i| (i, 1.0)))
}

/// Smoothed inverse document frequency, `ln((1+N)/(1+df)) + 1`.
pub fn idf_weight(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn fit_tfidf(vocab: Vocabulary) -> VectorizerModel {
    let idf = vocab.df().iter().map(|&d| idf_weight(vocab.n_docs(), d)).collect();
    VectorizerModel { vocab, mode: VectorMode::Tfidf, idf: Some(idf) }
}

/// Raw count times idf, then L2-normalized. Documents with no in-vocabulary
/// token give the empty vector.
pub fn transform_tfidf<D: AsRef<[String]> + ?Sized>(doc: &D, vocab: &Vocabulary, idf: &[f64]) -> SparseVector {
    let counts = transform_count(doc, vocab);
    let weighted = SparseVector::from_pairs(counts.iter().map(|(i, c)| (i, c * idf[i])));
    let norm = weighted.norm();
    if norm == 0.0 {
        return weighted;
    }
    SparseVector { indices: weighted.indices, values: weighted.values.into_iter().map(|v| v / norm).collect() }
}

impl VectorizerModel {
    pub fn fit<D: AsRef<[String]>>(
        docs: &[D],
        mode: VectorMode,
        min_df: usize,
        max_features: Option<usize>,
    ) -> Result<VectorizerModel, VectorizeError> {
        let vocab = fit_vocab(docs, min_df, max_features)?;
        Ok(match mode {
            VectorMode::Tfidf => fit_tfidf(vocab),
            _ => VectorizerModel { vocab, mode, idf: None },
        })
    }

    pub fn transform<D: AsRef<[String]> + ?Sized>(&self, doc: &D) -> SparseVector {
        match (self.mode, &self.idf) {
            (VectorMode::Binary, _) => transform_binary(doc, &self.vocab),
            (VectorMode::Count, _) => transform_count(doc, &self.vocab),
            (VectorMode::Tfidf, Some(idf)) => transform_tfidf(doc, &self.vocab, idf),
            (VectorMode::Tfidf, None) => unreachable!("tfidf model without idf"),
        }
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }
}

/// Fraction of tokens across `docs` missing from `vocab` (0 when there are
/// no tokens).
pub fn oov_rate<D: AsRef<[String]>>(docs: &[D], vocab: &Vocabulary) -> f64 {
    let (mut total, mut oov) = (0usize, 0usize);
    for d in docs {
        for t in d.as_ref() {
            total += 1;
            if vocab.get(t).is_none() {
                oov += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        oov as f64 / total as f64
    }
}

impl AsRef<[String]> for crate::textprep::TokenizedDoc {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}
