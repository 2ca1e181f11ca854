//! End-to-end training and serving: preprocessing, feature extraction and
//! a classifier, saved together in one artifact.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{hash_text, ClassifierKind, ConfigError, FeatureKind, RunConfig};
use crate::corpus::{self, Corpus, CorpusError, SplitPair};
use crate::embed::{self, D2VModel, EmbedError, EmbeddingMatrix};
use crate::eval::{confusion, metrics, ConfusionMatrix, EvalError, Metrics};
use crate::label::Label;
use crate::lstm::{self, LSTMModel, LstmError};
use crate::persist::{Artifact, ModelKind, Persist, PersistError, VocabRecord};
use crate::shallow::{self, FitError, MNBModel, Prediction, RFModel, SVMModel};
use crate::textprep::{self, LexiconError, LexiconKind, Lexicons, TokenizedDoc};
use crate::vectorize::{self, SparseVector, VectorMode, VectorizeError, VectorizerModel, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("stored pipeline config does not match its hash: {0}")]
    Parity(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Bundled lexicons with any files named in the config swapped in. The
/// flag is true when at least one file was used.
pub fn load_lexicons(cfg: &RunConfig) -> Result<(Lexicons, bool)> {
    let mut lex = Lexicons::bundled();
    let mut custom = false;
    let files = [
        (LexiconKind::Stopwords, &cfg.lexicon_stopwords),
        (LexiconKind::Pronouns, &cfg.lexicon_pronouns),
        (LexiconKind::Slang, &cfg.lexicon_slang),
        (LexiconKind::Pos, &cfg.lexicon_pos),
        (LexiconKind::Lemmas, &cfg.lexicon_lemmas),
    ];
    for (kind, path) in files {
        if let Some(p) = path {
            lex.replace_from_file(kind, p)?;
            custom = true;
        }
    }
    Ok((lex, custom))
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureExtractor {
    Sparse(VectorizerModel),
    /// Mean of the document's word vectors.
    Word2Vec(EmbeddingMatrix),
    /// Inferred paragraph vector, seeded with `seed` for every document.
    Doc2Vec { model: D2VModel, steps: usize, seed: u64 },
    Sequence { vocab: Vocabulary, max_len: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Sparse(SparseVector),
    Sequence(Vec<usize>),
}

impl FeatureExtractor {
    pub fn vocabulary(&self) -> &Vocabulary {
        match self {
            FeatureExtractor::Sparse(v) => &v.vocab,
            FeatureExtractor::Word2Vec(e) => &e.vocab,
            FeatureExtractor::Doc2Vec { model, .. } => &model.words.vocab,
            FeatureExtractor::Sequence { vocab, .. } => vocab,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureExtractor::Sparse(v) => v.dim(),
            FeatureExtractor::Word2Vec(e) => e.dim,
            FeatureExtractor::Doc2Vec { model, .. } => model.words.dim,
            FeatureExtractor::Sequence { vocab, .. } => vocab.len(),
        }
    }

    /// Documents without known tokens map to the empty / zero / all-padding
    /// input.
    pub fn transform(&self, tokens: &[String]) -> Input {
        match self {
            FeatureExtractor::Sparse(v) => Input::Sparse(v.transform(tokens)),
            FeatureExtractor::Word2Vec(e) => Input::Sparse(SparseVector::from_dense(&embed::doc_embedding_avg(tokens, e))),
            FeatureExtractor::Doc2Vec { model, steps, seed } => {
                let v = embed::infer_doc_vector(tokens, model, *steps, *seed).unwrap_or_else(|_| vec![0.0; model.words.dim]);
                Input::Sparse(SparseVector::from_dense(&v))
            }
            FeatureExtractor::Sequence { vocab, max_len } => Input::Sequence(lstm::encode_sequence(tokens, vocab, *max_len)),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            FeatureExtractor::Sparse(v) => match v.mode {
                VectorMode::Binary => "binary",
                VectorMode::Count => "count",
                VectorMode::Tfidf => "tfidf",
            },
            FeatureExtractor::Word2Vec(_) => "w2v",
            FeatureExtractor::Doc2Vec { .. } => "d2v",
            FeatureExtractor::Sequence { .. } => "sequence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierModel {
    Mnb(MNBModel),
    Svm(SVMModel),
    Rf(RFModel),
    Lstm(LSTMModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Mnb(_) => ClassifierKind::Mnb,
            ClassifierModel::Svm(_) => ClassifierKind::Svm,
            ClassifierModel::Rf(_) => ClassifierKind::Rf,
            ClassifierModel::Lstm(_) => ClassifierKind::Lstm,
        }
    }

    pub fn predict(&self, input: &Input) -> Prediction {
        match (self, input) {
            (ClassifierModel::Mnb(m), Input::Sparse(x)) => m.predict(x),
            (ClassifierModel::Svm(m), Input::Sparse(x)) => m.predict(x),
            (ClassifierModel::Rf(m), Input::Sparse(x)) => m.predict(x),
            (ClassifierModel::Lstm(m), Input::Sequence(ids)) => m.predict(ids).expect("sequence encoded to the model's length"),
            _ => unreachable!("feature extractor and classifier are paired at training time"),
        }
    }

    fn persist_kind(&self) -> ModelKind {
        match self {
            ClassifierModel::Mnb(_) => ModelKind::Mnb,
            ClassifierModel::Svm(_) => ModelKind::Svm,
            ClassifierModel::Rf(_) => ModelKind::Rf,
            ClassifierModel::Lstm(_) => ModelKind::Lstm,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedPipeline {
    /// Resolved configuration the pipeline was trained with.
    pub config: RunConfig,
    pub lexicons: Lexicons,
    pub custom_lexicons: bool,
    pub features: FeatureExtractor,
    pub classifier: ClassifierModel,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    /// Per-epoch mean loss of the embedding model, if one was trained.
    pub embedding_loss: Vec<f64>,
    /// Per-epoch loss of the classifier (SVM objective, LSTM cross-entropy).
    pub classifier_loss: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub pipeline: TrainedPipeline,
    pub split: SplitPair,
    pub held_out: ConfusionMatrix,
    pub log: TrainLog,
}

fn tokenize_corpus(c: &Corpus, cfg: &RunConfig, lex: &Lexicons) -> Vec<TokenizedDoc> {
    c.items().par_iter().map(|t| textprep::preprocess_doc(&t.id, &t.text, &cfg.prep, lex)).collect()
}

fn max_features(cfg: &RunConfig) -> Option<usize> {
    (cfg.max_features > 0).then_some(cfg.max_features)
}

fn sparse_inputs(inputs: Vec<Input>) -> Vec<SparseVector> {
    inputs
        .into_iter()
        .map(|i| match i {
            Input::Sparse(x) => x,
            Input::Sequence(_) => unreachable!("sparse extractor"),
        })
        .collect()
}

/// Fits features and classifier on `train` without splitting.
pub fn fit(train: &Corpus, cfg: &RunConfig, lexicons: Lexicons, custom_lexicons: bool) -> Result<(TrainedPipeline, TrainLog)> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let docs = tokenize_corpus(train, &cfg, &lexicons);
    let labels = train.labels();
    let mut log = TrainLog::default();
    let features = match cfg.features {
        FeatureKind::Binary | FeatureKind::Count | FeatureKind::Tfidf => {
            let mode = match cfg.features {
                FeatureKind::Binary => VectorMode::Binary,
                FeatureKind::Count => VectorMode::Count,
                _ => VectorMode::Tfidf,
            };
            FeatureExtractor::Sparse(VectorizerModel::fit(&docs, mode, cfg.min_df, max_features(&cfg))?)
        }
        FeatureKind::W2v => {
            let vocab = vectorize::fit_vocab(&docs, cfg.min_df, max_features(&cfg))?;
            let (emb, trace) = embed::train_word2vec(&docs, &vocab, &cfg.w2v)?;
            log.embedding_loss = trace;
            FeatureExtractor::Word2Vec(emb)
        }
        FeatureKind::D2v => {
            let vocab = vectorize::fit_vocab(&docs, cfg.min_df, max_features(&cfg))?;
            let usable: Vec<TokenizedDoc> =
                docs.iter().filter(|d| d.tokens.iter().any(|t| vocab.get(t).is_some())).cloned().collect();
            let tags: BTreeMap<String, String> =
                train.items().iter().map(|t| (t.id.clone(), t.label.as_str().to_string())).collect();
            let (model, trace) = embed::train_doc2vec(&usable, &tags, &vocab, &cfg.w2v)?;
            log.embedding_loss = trace;
            FeatureExtractor::Doc2Vec { model, steps: cfg.d2v_infer_steps, seed: cfg.seed }
        }
        FeatureKind::Sequence => {
            let vocab = vectorize::fit_vocab(&docs, cfg.min_df, max_features(&cfg))?;
            FeatureExtractor::Sequence { vocab, max_len: cfg.lstm.max_len }
        }
        FeatureKind::Auto => unreachable!("resolved config has concrete features"),
    };
    let inputs: Vec<Input> = docs.par_iter().map(|d| features.transform(&d.tokens)).collect();
    let dim = features.dim();
    let classifier = match cfg.model {
        ClassifierKind::Mnb => ClassifierModel::Mnb(shallow::nb_fit(&sparse_inputs(inputs), &labels, cfg.nb_alpha, dim)?),
        ClassifierKind::Svm => {
            let m = shallow::svm_fit(&sparse_inputs(inputs), &labels, dim, &cfg.svm)?;
            log.classifier_loss = m.objective_trace.clone();
            ClassifierModel::Svm(m)
        }
        ClassifierKind::Rf => ClassifierModel::Rf(shallow::rf_fit(&sparse_inputs(inputs), &labels, dim, &cfg.rf)?),
        ClassifierKind::Lstm => {
            let mut model = LSTMModel::new(dim, &cfg.lstm)?;
            if cfg.lstm_init_w2v {
                let w2v = embed::W2VConfig { dim: cfg.lstm.embed_dim, ..cfg.w2v };
                let (emb, trace) = embed::train_word2vec(&docs, features.vocabulary(), &w2v)?;
                log.embedding_loss = trace;
                model.init_embeddings(features.vocabulary(), &emb)?;
            }
            let data: Vec<(Vec<usize>, Label)> = inputs
                .into_iter()
                .zip(labels)
                .map(|(i, y)| match i {
                    Input::Sequence(ids) => (ids, y),
                    Input::Sparse(_) => unreachable!("sequence extractor"),
                })
                .collect();
            let (model, trace) = lstm::lstm_train(model, &data)?;
            log.classifier_loss = trace;
            ClassifierModel::Lstm(model)
        }
    };
    Ok((TrainedPipeline { config: cfg, lexicons, custom_lexicons, features, classifier }, log))
}

/// Optional balancing, seeded split, fit on the training part and
/// evaluation on the held-out part.
pub fn train(corpus: &Corpus, cfg: &RunConfig, lexicons: Lexicons, custom_lexicons: bool) -> Result<TrainOutcome> {
    cfg.validate()?;
    let resolved = cfg.resolved();
    let source = if resolved.balance { corpus::balance(corpus, resolved.seed)? } else { corpus.clone() };
    let split = corpus::split_train_test(&source, resolved.split_ratio, resolved.seed)?;
    let (pipeline, log) = fit(&split.train, &resolved, lexicons, custom_lexicons)?;
    let held_out = pipeline.evaluate(&split.test)?.confusion;
    Ok(TrainOutcome { pipeline, split, held_out, log })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// Share of test tokens missing from the model vocabulary.
    pub oov_rate: f64,
}

impl TrainedPipeline {
    pub fn tokens(&self, text: &str) -> Vec<String> {
        textprep::preprocess(text, &self.config.prep, &self.lexicons)
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> Prediction {
        self.classifier.predict(&self.features.transform(tokens))
    }

    pub fn predict_text(&self, text: &str) -> Prediction {
        self.predict_tokens(&self.tokens(text))
    }

    /// Predictions in input order.
    pub fn predict_batch(&self, texts: &[&str]) -> Vec<Prediction> {
        texts.par_iter().map(|t| self.predict_text(t)).collect()
    }

    pub fn evaluate(&self, test: &Corpus) -> Result<Evaluation> {
        let docs: Vec<Vec<String>> = test.items().par_iter().map(|t| self.tokens(&t.text)).collect();
        let preds: Vec<Label> = docs.par_iter().map(|d| self.predict_tokens(d).label).collect();
        let cm = confusion(&test.labels(), &preds)?;
        Ok(Evaluation { confusion: cm, metrics: metrics(&cm), oov_rate: vectorize::oov_rate(&docs, self.features.vocabulary()) })
    }

    pub fn kind(&self) -> ClassifierKind {
        self.classifier.kind()
    }

    pub fn config_hash(&self) -> String {
        self.config.hash()
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(self.classifier.persist_kind());
        let model = match &self.classifier {
            ClassifierModel::Mnb(m) => m.store(&mut a, ""),
            ClassifierModel::Svm(m) => m.store(&mut a, ""),
            ClassifierModel::Rf(m) => m.store(&mut a, ""),
            ClassifierModel::Lstm(m) => m.store(&mut a, ""),
        };
        let p = FEATURE_PREFIX;
        let section = match &self.features {
            FeatureExtractor::Sparse(v) => v.store(&mut a, p),
            FeatureExtractor::Word2Vec(e) => e.store(&mut a, p),
            FeatureExtractor::Doc2Vec { model, steps, seed } => json!({ "d2v": model.store(&mut a, p), "steps": steps, "seed": seed }),
            FeatureExtractor::Sequence { vocab, max_len } => {
                a.header.vocabulary = Some(VocabRecord::from_vocab(vocab));
                json!({ "max_len": max_len })
            }
        };
        let run = self.config.to_text();
        let hash = hash_text(&run);
        a.header.metadata.insert("config_sha256".into(), hash.clone());
        a.header.config = json!({
            "model": model,
            "pipeline": {
                "run": run,
                "config_sha256": hash,
                "features": { "type": self.features.kind(), "settings": section },
                "lexicons": if self.custom_lexicons { serde_json::to_value(&self.lexicons).expect("lexicons serialize") } else { Value::Null },
            }
        });
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<TrainedPipeline> {
        let pipe = a
            .header
            .config
            .get("pipeline")
            .ok_or_else(|| PersistError::Header("artifact holds a bare model, not a trained pipeline".into()))?;
        let run = pipe.get("run").and_then(Value::as_str).ok_or_else(|| PersistError::Header("missing run config".into()))?;
        let stored = pipe.get("config_sha256").and_then(Value::as_str).unwrap_or_default();
        let actual = hash_text(run);
        if stored != actual {
            return Err(PipelineError::Parity(format!("stored {stored}, recomputed {actual}")));
        }
        let config = RunConfig::from_text(run)?.resolved();
        let (lexicons, custom_lexicons) = match pipe.get("lexicons") {
            None | Some(Value::Null) => (Lexicons::bundled(), false),
            Some(v) => (serde_json::from_value(v.clone()).map_err(|e| PersistError::Header(format!("lexicons: {e}")))?, true),
        };
        let feat = pipe.get("features").ok_or_else(|| PersistError::Header("missing feature settings".into()))?;
        let settings = feat.get("settings").cloned().unwrap_or(Value::Null);
        let p = FEATURE_PREFIX;
        let features = match feat.get("type").and_then(Value::as_str).unwrap_or_default() {
            "binary" | "count" | "tfidf" => FeatureExtractor::Sparse(VectorizerModel::restore(a, p, &settings)?),
            "w2v" => FeatureExtractor::Word2Vec(EmbeddingMatrix::restore(a, p, &settings)?),
            "d2v" => FeatureExtractor::Doc2Vec {
                model: D2VModel::restore(a, p, settings.get("d2v").unwrap_or(&Value::Null))?,
                steps: settings.get("steps").and_then(Value::as_u64).unwrap_or(config.d2v_infer_steps as u64) as usize,
                seed: settings.get("seed").and_then(Value::as_u64).unwrap_or(config.seed),
            },
            "sequence" => FeatureExtractor::Sequence {
                vocab: a.vocabulary()?,
                max_len: settings.get("max_len").and_then(Value::as_u64).unwrap_or(config.lstm.max_len as u64) as usize,
            },
            other => return Err(PersistError::Header(format!("unknown feature type {other:?}")).into()),
        };
        let model = a.model_config()?;
        let classifier = match a.kind()? {
            ModelKind::Mnb => ClassifierModel::Mnb(MNBModel::restore(a, "", model)?),
            ModelKind::Svm => ClassifierModel::Svm(SVMModel::restore(a, "", model)?),
            ModelKind::Rf => ClassifierModel::Rf(RFModel::restore(a, "", model)?),
            ModelKind::Lstm => ClassifierModel::Lstm(LSTMModel::restore(a, "", model)?),
            other => return Err(PersistError::Header(format!("a {other} artifact is not a classifier pipeline")).into()),
        };
        Ok(TrainedPipeline { config, lexicons, custom_lexicons, features, classifier })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(self.to_artifact().to_bytes()?)
    }

    pub fn save<W: Write>(&self, mut sink: W) -> Result<usize> {
        let bytes = self.to_bytes()?;
        sink.write_all(&bytes).map_err(|source| PipelineError::Io { path: "<sink>".into(), source })?;
        Ok(bytes.len())
    }

    pub fn load<R: Read>(mut source: R) -> Result<TrainedPipeline> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes).map_err(|source| PipelineError::Io { path: "<source>".into(), source })?;
        TrainedPipeline::from_artifact(&Artifact::from_bytes(&bytes)?)
    }

    pub fn save_file(&self, path: &Path) -> Result<usize> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
        Ok(bytes.len())
    }

    pub fn load_file(path: &Path) -> Result<TrainedPipeline> {
        let bytes = std::fs::read(path).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
        TrainedPipeline::from_artifact(&Artifact::from_bytes(&bytes)?)
    }
}

const FEATURE_PREFIX: &str = "features.";

#[cfg(test)]
mod tests {
    use super::*;

    fn small(model: &str, features: &str) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.set("model", model).unwrap();
        cfg.set("features", features).unwrap();
        for (k, v) in [("w2v.dim", "8"), ("w2v.epochs", "2"), ("rf.n_estimators", "5"), ("lstm.hidden", "8"), ("lstm.embed_dim", "8"), ("lstm.epochs", "2"), ("d2v.infer_steps", "3")] {
            cfg.set(k, v).unwrap();
        }
        cfg
    }

    #[test]
    fn every_pairing_round_trips() {
        let corpus = corpus::synth_corpus(120, 0.1, 3).unwrap();
        for (m, f) in [("mnb", "count"), ("svm", "tfidf"), ("rf", "binary"), ("svm", "w2v"), ("rf", "d2v"), ("lstm", "auto")] {
            let out = train(&corpus, &small(m, f), Lexicons::bundled(), false).unwrap();
            let bytes = out.pipeline.to_bytes().unwrap();
            let back = TrainedPipeline::load(&bytes[..]).unwrap();
            assert_eq!(back, out.pipeline, "{m}/{f}");
            assert_eq!(back.to_bytes().unwrap(), bytes);
            for t in out.split.test.texts() {
                assert_eq!(back.predict_text(t).score.to_bits(), out.pipeline.predict_text(t).score.to_bits());
            }
        }
    }

    #[test]
    fn tampered_run_config_fails_parity() {
        let corpus = corpus::synth_corpus(60, 0.1, 3).unwrap();
        let out = train(&corpus, &small("mnb", "count"), Lexicons::bundled(), false).unwrap();
        let mut a = out.pipeline.to_artifact();
        let run = a.header.config["pipeline"]["run"].as_str().unwrap().replace("nb.alpha = 1", "nb.alpha = 2");
        a.header.config["pipeline"]["run"] = Value::String(run);
        assert!(matches!(TrainedPipeline::from_artifact(&a), Err(PipelineError::Parity(_))));
    }

    #[test]
    fn empty_text_still_predicts() {
        let corpus = corpus::synth_corpus(60, 0.1, 3).unwrap();
        let out = train(&corpus, &small("svm", "tfidf"), Lexicons::bundled(), false).unwrap();
        let p = out.pipeline.predict_text("");
        assert_eq!(p.label, if out.pipeline.predict_tokens(&[]).score > 0.0 { Label::Depressive } else { Label::NonDepressive });
    }
}
