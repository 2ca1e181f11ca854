//! Labeled tweet corpora: CSV ingestion, annotator vote merging, class
//! balancing, stratified train/test splitting and a seeded synthetic
//! generator.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::label::Label;
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {source}")]
    Label {
        line: u64,
        #[source]
        source: crate::label::ParseLabelError,
    },
    #[error("line {line}: duplicate id {id:?}")]
    Duplicate { line: u64, id: String },
    #[error("expected exactly 3 annotator votes, got {0}")]
    Arity(usize),
    #[error("cannot balance: class {0} is absent")]
    Balance(Label),
    #[error("cannot split: {0}")]
    Split(String),
    #[error("invalid generator parameters: {0}")]
    Parameter(String),
    #[error("annotation mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationSet {
    pub id: String,
    pub votes: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTweet {
    pub id: String,
    pub text: String,
    pub label: Label,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub depressive: usize,
    pub non_depressive: usize,
}

impl ClassCounts {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Depressive => self.depressive,
            Label::NonDepressive => self.non_depressive,
        }
    }

    fn bump(&mut self, label: Label) {
        match label {
            Label::Depressive => self.depressive += 1,
            Label::NonDepressive => self.non_depressive += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.depressive + self.non_depressive
    }
}

/// Ordered list of labeled tweets with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    items: Vec<LabeledTweet>,
    counts: ClassCounts,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(items: Vec<LabeledTweet>) -> Result<Corpus> {
        let mut seen = HashSet::with_capacity(items.len());
        let mut counts = ClassCounts::default();
        for (i, t) in items.iter().enumerate() {
            if !seen.insert(t.id.as_str()) {
                return Err(CorpusError::Duplicate { line: i as u64 + 1, id: t.id.clone() });
            }
            counts.bump(t.label);
        }
        Ok(Corpus { items, counts })
    }

    fn from_unique(items: Vec<LabeledTweet>) -> Corpus {
        let mut counts = ClassCounts::default();
        for t in &items {
            counts.bump(t.label);
        }
        Corpus { items, counts }
    }

    pub fn items(&self) -> &[LabeledTweet] {
        &self.items
    }

    pub fn into_items(self) -> Vec<LabeledTweet> {
        self.items
    }

    pub fn class_counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|t| t.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.items.iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SplitPair {
    pub train: Corpus,
    pub test: Corpus,
    pub ratio: f64,
    pub seed: u64,
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source)
}

fn csv_err(e: csv::Error) -> CorpusError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CorpusError::Io(io),
        other => CorpusError::Parse { line, message: format!("{other:?}") },
    }
}

/// Reads rows, checks the header and the column count of every row.
fn read_rows<R: Read>(source: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = reader(source);
    let mut records = rdr.records();
    let first = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(csv_err)?,
    };
    let got: Vec<String> = first.iter().map(|f| f.trim().trim_start_matches('\u{feff}').to_ascii_lowercase()).collect();
    if got != header {
        return Err(CorpusError::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", header.join(","), got.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec.get(0).is_some_and(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(CorpusError::Parse {
                line,
                message: format!("expected {} columns, found {}", header.len(), rec.len()),
            });
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

/// Parses an `id,text,label` CSV, preserving row order.
pub fn load_csv<R: Read>(source: R) -> Result<Corpus> {
    let rows = read_rows(source, &["id", "text", "label"])?;
    let mut seen = HashSet::new();
    let mut items = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::Parse { line, message: "empty id".into() });
        }
        let text = rec[1].to_string();
        if text.trim().is_empty() {
            return Err(CorpusError::Parse { line, message: format!("empty text for id {id:?}") });
        }
        let label = rec[2].parse::<Label>().map_err(|source| CorpusError::Label { line, source })?;
        if !seen.insert(id.clone()) {
            return Err(CorpusError::Duplicate { line, id });
        }
        items.push(LabeledTweet { id, text, label });
    }
    Ok(Corpus::from_unique(items))
}

/// Parses an unlabeled `id,text` CSV. Empty texts are kept.
pub fn load_raw_csv<R: Read>(source: R) -> Result<Vec<RawTweet>> {
    let rows = read_rows(source, &["id", "text"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::Parse { line, message: "empty id".into() });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::Duplicate { line, id });
        }
        out.push(RawTweet { id, text: rec[1].to_string() });
    }
    Ok(out)
}

/// Parses one annotator's `id,label` CSV.
pub fn load_annotations<R: Read>(source: R) -> Result<Vec<(String, Label)>> {
    let rows = read_rows(source, &["id", "label"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let id = rec[0].trim().to_string();
        let label = rec[1].parse::<Label>().map_err(|source| CorpusError::Label { line, source })?;
        if !seen.insert(id.clone()) {
            return Err(CorpusError::Duplicate { line, id });
        }
        out.push((id, label));
    }
    Ok(out)
}

pub fn write_csv<W: Write>(corpus: &Corpus, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["id", "text", "label"]).map_err(csv_err)?;
    for t in corpus.items() {
        w.write_record([t.id.as_str(), t.text.as_str(), t.label.as_str()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw_csv<W: Write>(tweets: &[RawTweet], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["id", "text"]).map_err(csv_err)?;
    for t in tweets {
        w.write_record([t.id.as_str(), t.text.as_str()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Label held by at least two of the three annotators.
pub fn majority_vote(a: &AnnotationSet) -> Result<Label> {
    if a.votes.len() != 3 {
        return Err(CorpusError::Arity(a.votes.len()));
    }
    let depressive = a.votes.iter().filter(|&&v| v == Label::Depressive).count();
    Ok(if depressive >= 2 { Label::Depressive } else { Label::NonDepressive })
}

/// Joins tweet texts with three annotators' labels. Every annotator file
/// must cover exactly the tweet ids.
pub fn merge_annotations(tweets: &[RawTweet], annotators: &[Vec<(String, Label)>]) -> Result<Corpus> {
    if annotators.len() != 3 {
        return Err(CorpusError::Arity(annotators.len()));
    }
    let maps: Vec<BTreeMap<&str, Label>> =
        annotators.iter().map(|a| a.iter().map(|(id, l)| (id.as_str(), *l)).collect()).collect();
    for (k, m) in maps.iter().enumerate() {
        if m.len() != tweets.len() {
            return Err(CorpusError::Mismatch(format!(
                "annotator {} labeled {} tweets, expected {}",
                k + 1,
                m.len(),
                tweets.len()
            )));
        }
    }
    let mut items = Vec::with_capacity(tweets.len());
    for t in tweets {
        let mut votes = Vec::with_capacity(3);
        for (k, m) in maps.iter().enumerate() {
            let v = m.get(t.id.as_str()).ok_or_else(|| {
                CorpusError::Mismatch(format!("annotator {} has no label for id {:?}", k + 1, t.id))
            })?;
            votes.push(*v);
        }
        let label = majority_vote(&AnnotationSet { id: t.id.clone(), votes })?;
        items.push(LabeledTweet { id: t.id.clone(), text: t.text.clone(), label });
    }
    Corpus::new(items)
}

/// Downsamples the majority class uniformly at random so both classes end
/// up with the minority count. Survivors keep their original order.
pub fn balance(c: &Corpus, seed: u64) -> Result<Corpus> {
    let counts = c.class_counts();
    for l in Label::ALL {
        if counts.get(l) == 0 {
            return Err(CorpusError::Balance(l));
        }
    }
    let target = counts.depressive.min(counts.non_depressive);
    let major = if counts.depressive > counts.non_depressive {
        Label::Depressive
    } else if counts.non_depressive > counts.depressive {
        Label::NonDepressive
    } else {
        return Ok(c.clone());
    };
    let major_pos: Vec<usize> =
        c.items.iter().enumerate().filter(|(_, t)| t.label == major).map(|(i, _)| i).collect();
    let mut rng = rng::seeded(seed);
    let mut keep = vec![true; c.len()];
    for &p in &major_pos {
        keep[p] = false;
    }
    for k in sample(&mut rng, major_pos.len(), target).into_iter() {
        keep[major_pos[k]] = true;
    }
    let items = c.items.iter().zip(keep).filter(|(_, k)| *k).map(|(t, _)| t.clone()).collect();
    Ok(Corpus::from_unique(items))
}

/// Seeded, label-stratified shuffle split. The train side gets exactly
/// `round(ratio * N)` items; per-class quotas are allotted by largest
/// remainder so each class is represented proportionally.
pub fn split_train_test(c: &Corpus, ratio: f64, seed: u64) -> Result<SplitPair> {
    let n = c.len();
    if n < 2 {
        return Err(CorpusError::Split(format!("need at least 2 items, got {n}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::Split(format!("ratio must be in (0,1), got {ratio}")));
    }
    let n_train = (ratio * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(CorpusError::Split(format!("ratio {ratio} leaves one side empty for N={n}")));
    }
    let counts = c.class_counts();
    let exact: Vec<f64> = Label::ALL.iter().map(|&l| ratio * counts.get(l) as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = n_train - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    // Largest fractional part first; class index breaks ties.
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if quota[k] < counts.get(Label::from_index(k)) {
            quota[k] += 1;
            remaining -= 1;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for i in idx {
        let t = &c.items[i];
        let q = &mut quota[t.label.index()];
        if *q > 0 {
            *q -= 1;
            train.push(t.clone());
        } else {
            test.push(t.clone());
        }
    }
    Ok(SplitPair { train: Corpus::from_unique(train), test: Corpus::from_unique(test), ratio, seed })
}

/// Keyword pool sampled by depressive synthetic documents.
pub const DEPRESSIVE_POOL: [&str; 30] = [
    "hopeless", "alone", "sad", "lonely", "empty", "tired", "worthless", "crying", "numb", "broken",
    "darkness", "pain", "suicidal", "anxious", "miserable", "exhausted", "guilty", "helpless", "hurt",
    "depressed", "isolated", "grief", "sorrow", "despair", "hate", "failure", "lost", "sleepless",
    "heartbroken", "tears",
];

/// Keyword pool sampled by non-depressive synthetic documents.
pub const NON_DEPRESSIVE_POOL: [&str; 30] = [
    "happy", "great", "fun", "sunny", "excited", "joy", "awesome", "grateful", "smile", "laugh",
    "amazing", "beautiful", "celebrate", "wonderful", "blessed", "cheerful", "vacation", "party",
    "friends", "adventure", "delicious", "proud", "peaceful", "fantastic", "energetic", "sunshine",
    "victory", "relaxed", "hopeful", "thrilled",
];

/// Class-neutral pool shared by both classes.
pub const SHARED_POOL: [&str; 100] = [
    "today", "morning", "coffee", "work", "school", "phone", "music", "weather", "city", "train",
    "bus", "lunch", "dinner", "movie", "book", "game", "weekend", "monday", "street", "house", "car",
    "dog", "cat", "family", "people", "video", "news", "class", "office", "meeting", "email",
    "project", "team", "market", "store", "shop", "food", "water", "tea", "night", "week", "year",
    "time", "day", "park", "road", "window", "door", "room", "bed", "desk", "computer", "laptop",
    "screen", "photo", "picture", "song", "radio", "show", "episode", "season", "match", "football",
    "basketball", "tennis", "garden", "tree", "flower", "rain", "snow", "wind", "cloud", "river",
    "lake", "beach", "mountain", "town", "village", "country", "world", "airport", "flight",
    "ticket", "hotel", "kitchen", "bread", "pizza", "burger", "salad", "soup", "milk", "sugar",
    "shirt", "shoes", "jacket", "bag", "watch", "clock", "paper", "pen",
];

pub const SYNTH_MIN_TOKENS: usize = 5;
pub const SYNTH_MAX_TOKENS: usize = 15;

/// Seeded synthetic corpus with `n / 2` documents per class, interleaved
/// (even rows depressive). Each token comes from the document's class pool
/// with probability `1 - noise`, otherwise from the shared pool.
pub fn synth_corpus(n: usize, noise: f64, seed: u64) -> Result<Corpus> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(CorpusError::Parameter(format!("n must be positive and even, got {n}")));
    }
    if !(0.0..0.5).contains(&noise) {
        return Err(CorpusError::Parameter(format!("noise must be in [0, 0.5), got {noise}")));
    }
    let mut rng = rng::seeded(seed);
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Depressive } else { Label::NonDepressive };
        let pool: &[&str] = match label {
            Label::Depressive => &DEPRESSIVE_POOL,
            Label::NonDepressive => &NON_DEPRESSIVE_POOL,
        };
        let len = rng.gen_range(SYNTH_MIN_TOKENS..=SYNTH_MAX_TOKENS);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let w = if rng.gen::<f64>() < noise {
                SHARED_POOL[rng.gen_range(0..SHARED_POOL.len())]
            } else {
                pool[rng.gen_range(0..pool.len())]
            };
            words.push(w);
        }
        items.push(LabeledTweet { id: format!("syn{i:06}"), text: words.join(" "), label });
    }
    Ok(Corpus::from_unique(items))
}
