//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored; a `#` after a
//! value starts a comment. Unknown keys are errors. [`KEYS`] lists every
//! key with its meaning.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::embed::{W2VConfig, W2VMode};
use crate::lstm::LSTMConfig;
use crate::profiler::DEFAULT_THRESHOLD;
use crate::shallow::{ForestConfig, SvmConfig};
use crate::textprep::{PipelineConfig, Reducer};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("incompatible settings: {0}")]
    Incompatible(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierKind {
    Mnb,
    Svm,
    Rf,
    Lstm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [ClassifierKind::Lstm, ClassifierKind::Mnb, ClassifierKind::Svm, ClassifierKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Mnb => "mnb",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Rf => "rf",
            ClassifierKind::Lstm => "lstm",
        }
    }

    /// Name used in comparison reports.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Mnb => "Multinomial NB",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Rf => "Random Forest",
            ClassifierKind::Lstm => "LSTM",
        }
    }

    fn default_features(self) -> FeatureKind {
        match self {
            ClassifierKind::Mnb | ClassifierKind::Rf => FeatureKind::Count,
            ClassifierKind::Svm => FeatureKind::Tfidf,
            ClassifierKind::Lstm => FeatureKind::Sequence,
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ClassifierKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| "expected mnb, svm, rf or lstm".to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    /// Picks the classifier's usual representation.
    Auto,
    Binary,
    Count,
    Tfidf,
    W2v,
    D2v,
    Sequence,
}

impl FeatureKind {
    const ALL: [FeatureKind; 7] = [
        FeatureKind::Auto,
        FeatureKind::Binary,
        FeatureKind::Count,
        FeatureKind::Tfidf,
        FeatureKind::W2v,
        FeatureKind::D2v,
        FeatureKind::Sequence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Auto => "auto",
            FeatureKind::Binary => "binary",
            FeatureKind::Count => "count",
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::W2v => "w2v",
            FeatureKind::D2v => "d2v",
            FeatureKind::Sequence => "sequence",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| "expected auto, binary, count, tfidf, w2v, d2v or sequence".to_string())
    }
}

/// Every accepted key and what it controls.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "seed for every random step"),
    ("threshold", "profile flag threshold, strictly between 0 and 1"),
    ("model", "classifier: mnb, svm, rf, lstm"),
    ("features", "auto, binary, count, tfidf, w2v, d2v, sequence"),
    ("split.ratio", "training share of the train/test split"),
    ("balance", "downsample the majority class before splitting"),
    ("prep.lowercase", "lowercase text"),
    ("prep.strip_urls", "remove http://, https:// and www. links"),
    ("prep.strip_mentions", "remove @user mentions"),
    ("prep.strip_nonalnum", "replace non-alphanumeric characters with spaces"),
    ("prep.drop_retweets", "drop a leading RT marker"),
    ("prep.expand_slang", "expand slang and abbreviations"),
    ("prep.remove_stopwords", "drop stop words, keeping pronouns"),
    ("prep.pos_filter", "keep nouns, adjectives, adverbs, pronouns and unknown words"),
    ("prep.reducer", "stem, lemma or none"),
    ("lexicon.stopwords", "stop word list file (one word per line)"),
    ("lexicon.pronouns", "pronoun whitelist file"),
    ("lexicon.slang", "slang file, `term<TAB>expansion` per line"),
    ("lexicon.pos", "part-of-speech file, `word<TAB>TAG` per line"),
    ("lexicon.lemmas", "lemma exception file, `form<TAB>lemma` per line"),
    ("vec.min_df", "minimum document frequency of a vocabulary term"),
    ("vec.max_features", "vocabulary size cap, 0 for none"),
    ("w2v.mode", "cbow or skipgram"),
    ("w2v.dim", "embedding dimension"),
    ("w2v.window", "context window on each side"),
    ("w2v.negatives", "negative samples per example"),
    ("w2v.epochs", "embedding training epochs"),
    ("w2v.lr", "initial embedding learning rate"),
    ("d2v.infer_steps", "passes when inferring a document vector"),
    ("nb.alpha", "additive smoothing"),
    ("svm.lambda", "regularization strength"),
    ("svm.epochs", "passes over the training set"),
    ("rf.n_estimators", "number of trees"),
    ("rf.max_depth", "tree depth limit, 0 for none"),
    ("rf.max_features", "features tried per split, 0 for ceil(sqrt(V))"),
    ("rf.bootstrap", "resample rows for every tree"),
    ("rf.weighted", "weight votes by out-of-bag accuracy"),
    ("lstm.hidden", "hidden units"),
    ("lstm.embed_dim", "embedding dimension"),
    ("lstm.max_len", "sequence length"),
    ("lstm.epochs", "training epochs"),
    ("lstm.batch", "mini-batch size"),
    ("lstm.lr", "learning rate"),
    ("lstm.dropout_in", "input dropout rate"),
    ("lstm.dropout_rec", "recurrent dropout rate"),
    ("lstm.init_w2v", "initialize the embedding layer from Word2Vec trained on the training split"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub threshold: f64,
    pub model: ClassifierKind,
    pub features: FeatureKind,
    pub split_ratio: f64,
    pub balance: bool,
    pub prep: PipelineConfig,
    pub lexicon_stopwords: Option<PathBuf>,
    pub lexicon_pronouns: Option<PathBuf>,
    pub lexicon_slang: Option<PathBuf>,
    pub lexicon_pos: Option<PathBuf>,
    pub lexicon_lemmas: Option<PathBuf>,
    pub min_df: usize,
    pub max_features: usize,
    pub w2v: W2VConfig,
    pub d2v_infer_steps: usize,
    pub nb_alpha: f64,
    pub svm: SvmConfig,
    pub rf: ForestConfig,
    pub lstm: LSTMConfig,
    pub lstm_init_w2v: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            threshold: DEFAULT_THRESHOLD,
            model: ClassifierKind::Svm,
            features: FeatureKind::Auto,
            split_ratio: 0.8,
            balance: false,
            prep: PipelineConfig::default(),
            lexicon_stopwords: None,
            lexicon_pronouns: None,
            lexicon_slang: None,
            lexicon_pos: None,
            lexicon_lemmas: None,
            min_df: 1,
            max_features: 0,
            w2v: W2VConfig::default(),
            d2v_infer_steps: 20,
            nb_alpha: 1.0,
            svm: SvmConfig::default(),
            rf: ForestConfig::default(),
            lstm: LSTMConfig::default(),
            lstm_init_w2v: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), value: value.into(), reason: e.to_string() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Value { key: key.into(), value: value.into(), reason: "expected true or false".into() }),
    }
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: n + 1, text: raw.to_string() });
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies `key=value` as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(ConfigError::Syntax { line: 0, text: assignment.to_string() });
        };
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "threshold" => self.threshold = parse(key, v)?,
            "model" => self.model = parse(key, v)?,
            "features" => self.features = parse(key, v)?,
            "split.ratio" => self.split_ratio = parse(key, v)?,
            "balance" => self.balance = parse_bool(key, v)?,
            "prep.lowercase" => self.prep.lowercase = parse_bool(key, v)?,
            "prep.strip_urls" => self.prep.strip_urls = parse_bool(key, v)?,
            "prep.strip_mentions" => self.prep.strip_mentions = parse_bool(key, v)?,
            "prep.strip_nonalnum" => self.prep.strip_nonalnum = parse_bool(key, v)?,
            "prep.drop_retweets" => self.prep.drop_retweets = parse_bool(key, v)?,
            "prep.expand_slang" => self.prep.expand_slang = parse_bool(key, v)?,
            "prep.remove_stopwords" => self.prep.remove_stopwords = parse_bool(key, v)?,
            "prep.pos_filter" => self.prep.pos_filter = parse_bool(key, v)?,
            "prep.reducer" => self.prep.reducer = parse::<Reducer>(key, v)?,
            "lexicon.stopwords" => self.lexicon_stopwords = path(v),
            "lexicon.pronouns" => self.lexicon_pronouns = path(v),
            "lexicon.slang" => self.lexicon_slang = path(v),
            "lexicon.pos" => self.lexicon_pos = path(v),
            "lexicon.lemmas" => self.lexicon_lemmas = path(v),
            "vec.min_df" => self.min_df = parse(key, v)?,
            "vec.max_features" => self.max_features = parse(key, v)?,
            "w2v.mode" => {
                self.w2v.mode = match v {
                    "cbow" => W2VMode::Cbow,
                    "skipgram" => W2VMode::Skipgram,
                    _ => return Err(ConfigError::Value { key: key.into(), value: v.into(), reason: "expected cbow or skipgram".into() }),
                }
            }
            "w2v.dim" => self.w2v.dim = parse(key, v)?,
            "w2v.window" => self.w2v.window = parse(key, v)?,
            "w2v.negatives" => self.w2v.negatives = parse(key, v)?,
            "w2v.epochs" => self.w2v.epochs = parse(key, v)?,
            "w2v.lr" => self.w2v.lr = parse(key, v)?,
            "d2v.infer_steps" => self.d2v_infer_steps = parse(key, v)?,
            "nb.alpha" => self.nb_alpha = parse(key, v)?,
            "svm.lambda" => self.svm.lambda = parse(key, v)?,
            "svm.epochs" => self.svm.epochs = parse(key, v)?,
            "rf.n_estimators" => self.rf.n_estimators = parse(key, v)?,
            "rf.max_depth" => self.rf.max_depth = Some(parse::<usize>(key, v)?).filter(|&d| d > 0),
            "rf.max_features" => self.rf.max_features = Some(parse::<usize>(key, v)?).filter(|&d| d > 0),
            "rf.bootstrap" => self.rf.bootstrap = parse_bool(key, v)?,
            "rf.weighted" => self.rf.weighted = parse_bool(key, v)?,
            "lstm.hidden" => self.lstm.hidden = parse(key, v)?,
            "lstm.embed_dim" => self.lstm.embed_dim = parse(key, v)?,
            "lstm.max_len" => self.lstm.max_len = parse(key, v)?,
            "lstm.epochs" => self.lstm.epochs = parse(key, v)?,
            "lstm.batch" => self.lstm.batch = parse(key, v)?,
            "lstm.lr" => self.lstm.lr = parse(key, v)?,
            "lstm.dropout_in" => self.lstm.dropout_in = parse(key, v)?,
            "lstm.dropout_rec" => self.lstm.dropout_rec = parse(key, v)?,
            "lstm.init_w2v" => self.lstm_init_w2v = parse_bool(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Replaces `features = auto` with the classifier's representation and
    /// pushes the seed into every component config.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        if c.features == FeatureKind::Auto {
            c.features = c.model.default_features();
        }
        c.w2v.seed = c.seed;
        c.svm.seed = c.seed;
        c.rf.seed = c.seed;
        c.lstm.seed = c.seed;
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = self.resolved();
        let bad = |key: &str, value: String, reason: &str| ConfigError::Value { key: key.into(), value, reason: reason.into() };
        if !(c.threshold > 0.0 && c.threshold < 1.0) {
            return Err(bad("threshold", c.threshold.to_string(), "must be strictly between 0 and 1"));
        }
        if !(c.split_ratio > 0.0 && c.split_ratio < 1.0) {
            return Err(bad("split.ratio", c.split_ratio.to_string(), "must be strictly between 0 and 1"));
        }
        if c.min_df == 0 {
            return Err(bad("vec.min_df", "0".into(), "must be >= 1"));
        }
        if !(c.nb_alpha > 0.0 && c.nb_alpha.is_finite()) {
            return Err(bad("nb.alpha", c.nb_alpha.to_string(), "must be > 0"));
        }
        if !(c.svm.lambda > 0.0) || c.svm.epochs == 0 {
            return Err(bad("svm.lambda", c.svm.lambda.to_string(), "lambda must be > 0 and svm.epochs >= 1"));
        }
        if c.rf.n_estimators == 0 {
            return Err(bad("rf.n_estimators", "0".into(), "must be >= 1"));
        }
        c.w2v.validate().map_err(|e| bad("w2v", String::new(), &e.to_string()))?;
        c.lstm.validate().map_err(|e| bad("lstm", String::new(), &e.to_string()))?;
        use ClassifierKind as C;
        use FeatureKind as F;
        match (c.model, c.features) {
            (C::Mnb, F::W2v | F::D2v) => Err(ConfigError::Incompatible(format!(
                "multinomial naive bayes needs nonnegative count-like features (binary, count, tfidf); {} embeddings can be negative",
                c.features.as_str()
            ))),
            (C::Lstm, f) if f != F::Sequence => {
                Err(ConfigError::Incompatible(format!("lstm reads token sequences; features must be sequence, not {}", f.as_str())))
            }
            (m, F::Sequence) if m != C::Lstm => {
                Err(ConfigError::Incompatible(format!("sequence features are only for lstm, not {}", m.as_str())))
            }
            _ => Ok(()),
        }
    }

    /// Canonical text form listing every key in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let c = self;
        let b = |x: bool| x.to_string();
        let values: Vec<String> = vec![
            c.seed.to_string(),
            c.threshold.to_string(),
            c.model.as_str().into(),
            c.features.as_str().into(),
            c.split_ratio.to_string(),
            b(c.balance),
            b(c.prep.lowercase),
            b(c.prep.strip_urls),
            b(c.prep.strip_mentions),
            b(c.prep.strip_nonalnum),
            b(c.prep.drop_retweets),
            b(c.prep.expand_slang),
            b(c.prep.remove_stopwords),
            b(c.prep.pos_filter),
            c.prep.reducer.as_str().into(),
            show_path(&c.lexicon_stopwords),
            show_path(&c.lexicon_pronouns),
            show_path(&c.lexicon_slang),
            show_path(&c.lexicon_pos),
            show_path(&c.lexicon_lemmas),
            c.min_df.to_string(),
            c.max_features.to_string(),
            match c.w2v.mode {
                W2VMode::Cbow => "cbow".into(),
                W2VMode::Skipgram => "skipgram".into(),
            },
            c.w2v.dim.to_string(),
            c.w2v.window.to_string(),
            c.w2v.negatives.to_string(),
            c.w2v.epochs.to_string(),
            c.w2v.lr.to_string(),
            c.d2v_infer_steps.to_string(),
            c.nb_alpha.to_string(),
            c.svm.lambda.to_string(),
            c.svm.epochs.to_string(),
            c.rf.n_estimators.to_string(),
            c.rf.max_depth.unwrap_or(0).to_string(),
            c.rf.max_features.unwrap_or(0).to_string(),
            b(c.rf.bootstrap),
            b(c.rf.weighted),
            c.lstm.hidden.to_string(),
            c.lstm.embed_dim.to_string(),
            c.lstm.max_len.to_string(),
            c.lstm.epochs.to_string(),
            c.lstm.batch.to_string(),
            c.lstm.lr.to_string(),
            c.lstm.dropout_in.to_string(),
            c.lstm.dropout_rec.to_string(),
            b(c.lstm_init_w2v),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut out = String::new();
        for ((k, _), v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of [`RunConfig::to_text`], lowercase hex.
    pub fn hash(&self) -> String {
        hash_text(&self.to_text())
    }
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
