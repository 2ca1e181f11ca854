//! Profile-level flagging: a user is flagged when the share of their
//! tweets classified depressive is strictly above a threshold.

use serde::{Deserialize, Serialize};

use crate::label::Label;

pub const DEFAULT_THRESHOLD: f64 = 0.75;

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("profile has no tweets")]
    Empty,
    #[error("threshold must be strictly between 0 and 1, got {0}")]
    Threshold(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileResult {
    pub user: String,
    pub n_tweets: usize,
    pub n_depressive: usize,
    pub fraction: f64,
    pub threshold: f64,
    pub flagged: bool,
}

impl ProfileResult {
    /// One line, `key=value` pairs in a fixed order.
    pub fn summary_line(&self) -> String {
        format!(
            "user={} n_tweets={} fraction={:.4} threshold={} flagged={}",
            self.user, self.n_tweets, self.fraction, self.threshold, self.flagged
        )
    }
}

pub fn check_threshold(threshold: f64) -> Result<(), ProfileError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(ProfileError::Threshold(threshold))
    }
}

/// Aggregates per-tweet labels.
pub fn profile_from_labels(user: &str, labels: &[Label], threshold: f64) -> Result<ProfileResult, ProfileError> {
    check_threshold(threshold)?;
    if labels.is_empty() {
        return Err(ProfileError::Empty);
    }
    let n_depressive = labels.iter().filter(|&&l| l == Label::Depressive).count();
    Ok(from_counts(user, n_depressive, labels.len(), threshold))
}

fn from_counts(user: &str, n_depressive: usize, n_tweets: usize, threshold: f64) -> ProfileResult {
    let fraction = n_depressive as f64 / n_tweets as f64;
    ProfileResult { user: user.to_string(), n_tweets, n_depressive, fraction, threshold, flagged: fraction > threshold }
}

/// Classifies every tweet with `classify` and aggregates. Tweets are
/// classified independently, in parallel.
pub fn profile_user<F>(user: &str, tweets: &[&str], threshold: f64, classify: F) -> Result<ProfileResult, ProfileError>
where
    F: Fn(&str) -> Label + Sync,
{
    use rayon::prelude::*;
    check_threshold(threshold)?;
    if tweets.is_empty() {
        return Err(ProfileError::Empty);
    }
    let labels: Vec<Label> = tweets.par_iter().map(|t| classify(t)).collect();
    profile_from_labels(user, &labels, threshold)
}
