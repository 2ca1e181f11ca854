//! Tweet preprocessing.
//!
//! Stages run in a fixed order: normalize, tokenize, slang expansion,
//! stop-word removal, POS filtering, then the word reducer (Porter stem,
//! lemma, or nothing). Each stage can be switched off through
//! [`PipelineConfig`]; every stage is a pure function of its inputs.

mod lexicon;
mod porter;

use serde::{Deserialize, Serialize};

pub use lexicon::{LexiconError, LexiconKind, Lexicons, PosTag};
pub use porter::porter_stem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reducer {
    #[default]
    Stem,
    Lemma,
    None,
}

impl std::str::FromStr for Reducer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stem" => Ok(Reducer::Stem),
            "lemma" => Ok(Reducer::Lemma),
            "none" => Ok(Reducer::None),
            _ => Err(format!("unknown reducer {s:?} (stem, lemma, none)")),
        }
    }
}

impl Reducer {
    pub fn as_str(self) -> &'static str {
        match self {
            Reducer::Stem => "stem",
            Reducer::Lemma => "lemma",
            Reducer::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub strip_nonalnum: bool,
    pub drop_retweets: bool,
    pub expand_slang: bool,
    pub remove_stopwords: bool,
    pub reducer: Reducer,
    pub pos_filter: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            strip_nonalnum: true,
            drop_retweets: true,
            expand_slang: true,
            remove_stopwords: true,
            reducer: Reducer::Stem,
            pos_filter: false,
        }
    }
}

impl PipelineConfig {
    /// Every stage off: plain whitespace tokenization.
    pub fn passthrough() -> Self {
        PipelineConfig {
            lowercase: false,
            strip_urls: false,
            strip_mentions: false,
            strip_nonalnum: false,
            drop_retweets: false,
            expand_slang: false,
            remove_stopwords: false,
            reducer: Reducer::None,
            pos_filter: false,
        }
    }
}

/// Token sequence for one tweet.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub id: String,
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenizedDoc { id: id.into(), tokens }
    }
}

fn starts_with_ignore_case(haystack: &str, prefix: &str) -> bool {
    haystack.len() >= prefix.len()
        && haystack.as_bytes()[..prefix.len()].eq_ignore_ascii_case(prefix.as_bytes())
}

fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if ["http://", "https://", "www."].iter().any(|p| starts_with_ignore_case(rest, p)) {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            rest = &rest[end..];
            continue;
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn strip_mentions(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '@' && chars.peek().is_some_and(|&n| is_word_char(n)) {
            while chars.peek().is_some_and(|&n| is_word_char(n)) {
                chars.next();
            }
            continue;
        }
        out.push(c);
    }
    out
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '`')
}

/// Cleans raw tweet text. Stages: retweet drop, URL removal, mention
/// removal, lowercasing, non-alphanumeric replacement (apostrophes are
/// deleted outright), whitespace collapse.
pub fn normalize(text: &str, cfg: &PipelineConfig) -> String {
    if cfg.drop_retweets && starts_with_ignore_case(text.trim_start(), "RT @") {
        return String::new();
    }
    let mut s = if cfg.strip_urls { strip_urls(text) } else { text.to_string() };
    if cfg.strip_mentions {
        s = strip_mentions(&s);
    }
    if cfg.lowercase {
        s = s.to_lowercase();
    }
    if cfg.strip_nonalnum {
        s = s
            .chars()
            .filter(|&c| !is_apostrophe(c))
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn expand_slang(tokens: &[String], lex: &Lexicons) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        match lex.slang_map.get(t) {
            Some(exp) => out.extend(exp.iter().cloned()),
            None => out.push(t.clone()),
        }
    }
    out
}

/// Drops stop words; whitelisted pronouns always survive.
pub fn remove_stopwords(tokens: &[String], lex: &Lexicons) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| lex.pronoun_whitelist.contains(*t) || !lex.stopwords.contains(*t))
        .cloned()
        .collect()
}

/// Keeps nouns, adjectives, adverbs and pronouns. Words missing from the
/// lexicon are kept.
pub fn pos_filter(tokens: &[String], lex: &Lexicons) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| matches!(lex.pos(t), PosTag::Noun | PosTag::Adj | PosTag::Adv | PosTag::Pron | PosTag::Other))
        .cloned()
        .collect()
}

fn contains_vowel(s: &str) -> bool {
    s.bytes().any(|b| matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y'))
}

fn undouble(mut stem: String) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !matches!(b[n - 1], b'a' | b'e' | b'i' | b'o' | b'u' | b'l' | b's' | b'z') {
        stem.pop();
    }
    stem
}

/// Dictionary-informed reduction: exception map first, then a handful of
/// inflectional suffix rules, else the word itself.
pub fn lemmatize(word: &str, lex: &Lexicons) -> String {
    if let Some(l) = lex.lemma_exceptions.get(word) {
        return l.clone();
    }
    let n = word.len();
    if !word.is_ascii() {
        return word.to_string();
    }
    if word.ends_with("ies") && n > 4 {
        return format!("{}y", &word[..n - 3]);
    }
    if ["sses", "xes", "ches", "shes", "zzes"].iter().any(|s| word.ends_with(s)) {
        return word[..n - 2].to_string();
    }
    if word.ends_with('s') && n > 3 && !["ss", "us", "is"].iter().any(|s| word.ends_with(s)) {
        return word[..n - 1].to_string();
    }
    if word.ends_with("ing") && n > 5 && contains_vowel(&word[..n - 3]) {
        return undouble(word[..n - 3].to_string());
    }
    if word.ends_with("ed") && n > 4 && contains_vowel(&word[..n - 2]) {
        return undouble(word[..n - 2].to_string());
    }
    word.to_string()
}

/// Full pipeline for one raw tweet.
pub fn preprocess(text: &str, cfg: &PipelineConfig, lex: &Lexicons) -> Vec<String> {
    let mut tokens = tokenize(&normalize(text, cfg));
    if cfg.expand_slang {
        tokens = expand_slang(&tokens, lex);
    }
    if cfg.remove_stopwords {
        tokens = remove_stopwords(&tokens, lex);
    }
    if cfg.pos_filter {
        tokens = pos_filter(&tokens, lex);
    }
    match cfg.reducer {
        Reducer::Stem => tokens.iter_mut().for_each(|t| *t = porter_stem(t)),
        Reducer::Lemma => tokens.iter_mut().for_each(|t| *t = lemmatize(t, lex)),
        Reducer::None => {}
    }
    tokens.retain(|t| !t.is_empty());
    tokens
}

pub fn preprocess_doc(id: &str, text: &str, cfg: &PipelineConfig, lex: &Lexicons) -> TokenizedDoc {
    TokenizedDoc::new(id, preprocess(text, cfg, lex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn normalize_examples() {
        let cfg = PipelineConfig::default();
        assert_eq!(normalize("RT @bob check https://x.co/a NOW!!", &cfg), "");
        assert_eq!(normalize("@ann I'm SO sad... http://t.co/x", &cfg), "im so sad");
        assert_eq!(normalize("see www.example.com/page, ok", &cfg), "see ok");
        assert_eq!(normalize("email me@ mail_x", &cfg), "email me mail x");
        assert_eq!(normalize("don\u{2019}t", &cfg), "dont");
    }

    #[test]
    fn retweet_flag_off_keeps_text() {
        let cfg = PipelineConfig { drop_retweets: false, ..Default::default() };
        assert_eq!(normalize("RT @bob so sad", &cfg), "rt so sad");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("im so sad"), vec!["im", "so", "sad"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("  a  b "), vec!["a", "b"]);
    }

    #[test]
    fn slang_examples() {
        let lex = Lexicons::bundled();
        assert_eq!(expand_slang(&toks("gr8 day"), &lex), toks("great day"));
        assert_eq!(expand_slang(&toks("idk"), &lex), toks("i dont know"));
        let empty = Lexicons::default();
        assert_eq!(expand_slang(&toks("gr8 idk"), &empty), toks("gr8 idk"));
    }

    #[test]
    fn stopword_examples() {
        let lex = Lexicons::bundled();
        assert_eq!(remove_stopwords(&toks("i am so sad"), &lex), toks("i sad"));
        assert!(remove_stopwords(&[], &lex).is_empty());
        assert_eq!(remove_stopwords(&toks("sad lonely night"), &lex), toks("sad lonely night"));
    }

    #[test]
    fn lemma_examples() {
        let lex = Lexicons::bundled();
        assert_eq!(lemmatize("better", &lex), "good");
        assert_eq!(lemmatize("dogs", &lex), "dog");
        assert_eq!(lemmatize("ran", &lex), "ran");
        assert_eq!(lemmatize("ponies", &lex), "pony");
        assert_eq!(lemmatize("boxes", &lex), "box");
        assert_eq!(lemmatize("running", &lex), "run");
        assert_eq!(lemmatize("stopped", &lex), "stop");
        assert_eq!(lemmatize("falling", &lex), "fall");
        assert_eq!(lemmatize("class", &lex), "class");
    }

    #[test]
    fn pos_examples() {
        let lex = Lexicons::bundled();
        assert_eq!(pos_filter(&toks("i love coding"), &lex), toks("i coding"));
        assert_eq!(pos_filter(&toks("dog house tree"), &lex), toks("dog house tree"));
        assert!(pos_filter(&[], &lex).is_empty());
    }

    #[test]
    fn preprocess_examples() {
        let lex = Lexicons::bundled();
        let cfg = PipelineConfig::default();
        assert_eq!(preprocess("@ann I'm SO sad", &cfg, &lex), toks("i sad"));
        assert!(preprocess("https://t.co/abc", &cfg, &lex).is_empty());
        let raw = "  RT @x Hello,  WORLD!! ";
        assert_eq!(preprocess(raw, &PipelineConfig::passthrough(), &lex), toks(raw));
        let lower = PipelineConfig { lowercase: true, ..PipelineConfig::passthrough() };
        assert_eq!(preprocess(raw, &lower, &lex), toks(&raw.to_lowercase()));
    }

    #[test]
    fn preprocess_with_lemmas_and_pos() {
        let lex = Lexicons::bundled();
        let cfg = PipelineConfig { reducer: Reducer::Lemma, pos_filter: true, ..Default::default() };
        assert_eq!(preprocess("I love my dogs", &cfg, &lex), toks("i my dog"));
    }

    fn config_strategy() -> impl Strategy<Value = PipelineConfig> {
        (any::<[bool; 8]>(), 0..3u8).prop_map(|(f, r)| PipelineConfig {
            lowercase: f[0],
            strip_urls: f[1],
            strip_mentions: f[2],
            strip_nonalnum: f[3],
            drop_retweets: f[4],
            expand_slang: f[5],
            remove_stopwords: f[6],
            pos_filter: f[7],
            reducer: [Reducer::Stem, Reducer::Lemma, Reducer::None][r as usize],
        })
    }

    const TWEETY: &str = "(RT @[a-z]{1,4} )?([A-Za-z']{1,8}|@[a-z_]{1,5}|https?://[a-z./]{1,8}|www\\.[a-z]{1,4}|[!?.,#:;\u{2019} ]|gr8|idk|[0-9]{1,3}){0,12}";

    proptest! {
        #[test]
        fn normalize_idempotent_and_clean(text in TWEETY) {
            let cfg = PipelineConfig::default();
            let once = normalize(&text, &cfg);
            prop_assert_eq!(normalize(&once, &cfg), once.clone());
            prop_assert!(once.chars().all(|c| c == ' ' || c.is_lowercase() || c.is_numeric() || (c.is_alphanumeric() && !c.is_uppercase())));
            prop_assert!(!once.contains("  ") && !once.starts_with(' ') && !once.ends_with(' '));
        }

        #[test]
        fn whitelist_always_survives(stops in proptest::collection::btree_set("[a-z]{1,3}", 0..20), words in proptest::collection::vec("[a-z]{1,3}|i|you|she|they", 0..15)) {
            let mut lex = Lexicons::bundled();
            lex.stopwords = stops;
            lex.stopwords.extend(lex.pronoun_whitelist.iter().cloned());
            let tokens: Vec<String> = words;
            let kept = remove_stopwords(&tokens, &lex);
            let n_pron = tokens.iter().filter(|t| lex.pronoun_whitelist.contains(*t)).count();
            prop_assert_eq!(kept.iter().filter(|t| lex.pronoun_whitelist.contains(*t)).count(), n_pron);
        }

        #[test]
        fn preprocess_is_pure(text in TWEETY, cfg in config_strategy()) {
            let lex = Lexicons::bundled();
            prop_assert_eq!(preprocess(&text, &cfg, &lex), preprocess(&text, &cfg, &lex));
            prop_assert!(preprocess(&text, &cfg, &lex).iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
        }

        #[test]
        fn preprocess_preserves_order(text in TWEETY) {
            // With slang expansion off, every output token is the reduced
            // form of a distinct token of the normalized text, in order.
            let lex = Lexicons::bundled();
            let cfg = PipelineConfig { expand_slang: false, ..Default::default() };
            let base = tokenize(&normalize(&text, &cfg));
            let out = preprocess(&text, &cfg, &lex);
            let mut it = base.iter().map(|t| porter_stem(t));
            for o in &out {
                prop_assert!(it.any(|b| &b == o), "{:?} not a subsequence of {:?}", out, base);
            }
        }
    }
}
