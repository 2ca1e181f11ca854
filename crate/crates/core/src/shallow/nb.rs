use crate::label::Label;
use crate::vectorize::SparseVector;

use super::{check_training_set, FitError, Prediction};

/// Multinomial naive Bayes with additive smoothing.
///
/// `log_likelihoods` holds one row of `n_features` entries per class, in
/// [`Label::index`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct MNBModel {
    pub log_priors: [f64; 2],
    pub log_likelihoods: Vec<f64>,
    pub alpha: f64,
    pub n_features: usize,
}

/// `P(t|c) = (count(t,c) + alpha) / (total_c + alpha * V)`,
/// `P(c) = n_c / n`.
pub fn nb_fit(x: &[SparseVector], y: &[Label], alpha: f64, n_features: usize) -> Result<MNBModel, FitError> {
    check_training_set(x, y)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(FitError::Config(format!("smoothing alpha must be > 0, got {alpha}")));
    }
    if n_features == 0 {
        return Err(FitError::Config("need at least one feature".into()));
    }
    let mut counts = vec![0.0; 2 * n_features];
    let mut totals = [0.0; 2];
    let mut docs = [0usize; 2];
    for (row, (xi, &yi)) in x.iter().zip(y).enumerate() {
        let c = yi.index();
        docs[c] += 1;
        for (feature, value) in xi.iter() {
            if feature >= n_features {
                return Err(FitError::Dimension(feature, n_features));
            }
            if value < 0.0 || !value.is_finite() {
                return Err(FitError::Domain { row, feature, value });
            }
            counts[c * n_features + feature] += value;
            totals[c] += value;
        }
    }
    let n = y.len() as f64;
    let log_priors = [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()];
    let mut log_likelihoods = vec![0.0; 2 * n_features];
    for c in 0..2 {
        let denom = (totals[c] + alpha * n_features as f64).ln();
        for t in 0..n_features {
            log_likelihoods[c * n_features + t] = (counts[c * n_features + t] + alpha).ln() - denom;
        }
    }
    Ok(MNBModel { log_priors, log_likelihoods, alpha, n_features })
}

impl MNBModel {
    /// Unnormalized joint log-probabilities `ln P(c) + Σ x_t ln P(t|c)`.
    /// Out-of-range features are ignored.
    pub fn joint_log(&self, x: &SparseVector) -> [f64; 2] {
        let mut out = self.log_priors;
        for (t, v) in x.iter().filter(|(t, _)| *t < self.n_features) {
            for (c, o) in out.iter_mut().enumerate() {
                *o += v * self.log_likelihoods[c * self.n_features + t];
            }
        }
        out
    }

    /// Posterior class probabilities, normalized in log space.
    pub fn posteriors(&self, x: &SparseVector) -> [f64; 2] {
        let j = self.joint_log(x);
        let m = j[0].max(j[1]);
        let z = m + ((j[0] - m).exp() + (j[1] - m).exp()).ln();
        [(j[0] - z).exp(), (j[1] - z).exp()]
    }

    /// Argmax class (ties go to non_depressive) and the joint log-probabilities.
    pub fn nb_predict(&self, x: &SparseVector) -> (Label, [f64; 2]) {
        let j = self.joint_log(x);
        let label = if j[1] > j[0] { Label::Depressive } else { Label::NonDepressive };
        (label, j)
    }

    /// Score is the depressive posterior.
    pub fn predict(&self, x: &SparseVector) -> Prediction {
        let (label, _) = self.nb_predict(x);
        Prediction { label, score: self.posteriors(x)[1] }
    }

    pub fn likelihood(&self, label: Label, feature: usize) -> f64 {
        self.log_likelihoods[label.index() * self.n_features + feature].exp()
    }
}
