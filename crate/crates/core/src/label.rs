use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary tweet class. `Depressive` is the positive class everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NonDepressive,
    Depressive,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NonDepressive, Label::Depressive];

    /// Class index used by the models: 0 = non_depressive, 1 = depressive.
    pub fn index(self) -> usize {
        match self {
            Label::NonDepressive => 0,
            Label::Depressive => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::NonDepressive
        } else {
            Label::Depressive
        }
    }

    /// +1 for depressive, -1 otherwise (SVM convention).
    pub fn sign(self) -> f64 {
        match self {
            Label::NonDepressive => -1.0,
            Label::Depressive => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NonDepressive => "non_depressive",
            Label::Depressive => "depressive",
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::NonDepressive => Label::Depressive,
            Label::Depressive => Label::NonDepressive,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?} (expected depressive or non_depressive)")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    /// Case-insensitive; `non-depressive` is accepted as a spelling of
    /// `non_depressive`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "depressive" => Ok(Label::Depressive),
            "non_depressive" | "non-depressive" => Ok(Label::NonDepressive),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}
