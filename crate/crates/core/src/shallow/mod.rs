//! Shallow classifiers over sparse feature vectors.

mod forest;
mod nb;
mod svm;

pub use forest::{grow_tree, oob_weight, rf_fit, root_split, DecisionTree, ForestConfig, Node, RFModel, SplitChoice, OOB_WEIGHT_FLOOR};
pub use nb::{nb_fit, MNBModel};
pub use svm::{svm_fit, SVMModel, SvmConfig};

use crate::label::Label;

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("training data contains a single class ({0})")]
    SingleClass(Label),
    #[error("no training examples")]
    Empty,
    #[error("{0} feature rows but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("multinomial naive bayes needs nonnegative counts: feature {feature} of row {row} is {value}")]
    Domain { row: usize, feature: usize, value: f64 },
    #[error("feature index {0} is outside the declared dimension {1}")]
    Dimension(usize, usize),
    #[error("invalid hyperparameter: {0}")]
    Config(String),
}

/// Class decision plus a model-specific score (posterior, decision value,
/// vote fraction or probability).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

pub(crate) fn check_training_set<T>(x: &[T], y: &[Label]) -> Result<(), FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch(x.len(), y.len()));
    }
    if y.is_empty() {
        return Err(FitError::Empty);
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(FitError::SingleClass(y[0]));
    }
    Ok(())
}
