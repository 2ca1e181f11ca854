use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize, tokenize, PipelineConfig};

/// Coarse part-of-speech tag from the closed-class lexicon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = "ADJ")]
    Adj,
    #[serde(rename = "ADV")]
    Adv,
    #[serde(rename = "PRON")]
    Pron,
    #[serde(rename = "OTHER")]
    Other,
}

impl PosTag {
    pub fn parse(s: &str) -> Option<PosTag> {
        Some(match s {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "PRON" => PosTag::Pron,
            "OTHER" => PosTag::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const PRONOUNS: &str = include_str!("../../data/pronouns.txt");
const SLANG: &str = include_str!("../../data/slang.tsv");
const POS: &str = include_str!("../../data/pos.tsv");
const LEMMAS: &str = include_str!("../../data/lemma_exceptions.tsv");

/// Word lists used by the preprocessing stages. Immutable once built.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicons {
    pub stopwords: BTreeSet<String>,
    pub pronoun_whitelist: BTreeSet<String>,
    /// Expansions are stored already normalized and tokenized.
    pub slang_map: BTreeMap<String, Vec<String>>,
    pub pos_lexicon: BTreeMap<String, PosTag>,
    pub lemma_exceptions: BTreeMap<String, String>,
}

/// Which lexicon a user-supplied file replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LexiconKind {
    Stopwords,
    Pronouns,
    Slang,
    Pos,
    Lemmas,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn clean_word(w: &str) -> String {
    normalize(w.trim(), &PipelineConfig::default())
}

fn word_set(text: &str) -> BTreeSet<String> {
    content_lines(text).map(|(_, l)| clean_word(l)).filter(|w| !w.is_empty()).collect()
}

fn pairs<'a>(text: &'a str, file: &str) -> Result<Vec<(usize, &'a str, &'a str)>, LexiconError> {
    content_lines(text)
        .map(|(line, l)| {
            l.split_once('\t').map(|(k, v)| (line, k.trim(), v.trim())).ok_or_else(|| LexiconError::Format {
                file: file.to_string(),
                line,
                message: "expected key<TAB>value".into(),
            })
        })
        .collect()
}

impl Lexicons {
    /// The lexicons shipped with the crate.
    pub fn bundled() -> Lexicons {
        let mut lex = Lexicons::default();
        for kind in [LexiconKind::Stopwords, LexiconKind::Pronouns, LexiconKind::Slang, LexiconKind::Pos, LexiconKind::Lemmas] {
            let text = match kind {
                LexiconKind::Stopwords => STOPWORDS,
                LexiconKind::Pronouns => PRONOUNS,
                LexiconKind::Slang => SLANG,
                LexiconKind::Pos => POS,
                LexiconKind::Lemmas => LEMMAS,
            };
            lex.replace(kind, text, "<bundled>").expect("bundled lexicons are well formed");
        }
        lex
    }

    /// Replaces one lexicon with the parsed contents of `text`.
    pub fn replace(&mut self, kind: LexiconKind, text: &str, file: &str) -> Result<(), LexiconError> {
        match kind {
            LexiconKind::Stopwords => self.stopwords = word_set(text),
            LexiconKind::Pronouns => self.pronoun_whitelist = word_set(text),
            LexiconKind::Slang => {
                let mut map = BTreeMap::new();
                for (_, k, v) in pairs(text, file)? {
                    let key = clean_word(k);
                    if !key.is_empty() {
                        map.insert(key, tokenize(&clean_word(v)));
                    }
                }
                self.slang_map = map;
            }
            LexiconKind::Pos => {
                let mut map = BTreeMap::new();
                for (line, k, v) in pairs(text, file)? {
                    let tag = PosTag::parse(v).ok_or_else(|| LexiconError::Format {
                        file: file.to_string(),
                        line,
                        message: format!("unknown tag {v:?}"),
                    })?;
                    map.insert(clean_word(k), tag);
                }
                self.pos_lexicon = map;
            }
            LexiconKind::Lemmas => {
                self.lemma_exceptions =
                    pairs(text, file)?.into_iter().map(|(_, k, v)| (clean_word(k), clean_word(v))).collect();
            }
        }
        Ok(())
    }

    pub fn replace_from_file(&mut self, kind: LexiconKind, path: &Path) -> Result<(), LexiconError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        self.replace(kind, &text, &path.display().to_string())
    }

    pub fn pos(&self, word: &str) -> PosTag {
        self.pos_lexicon.get(word).copied().unwrap_or(PosTag::Other)
    }
}
