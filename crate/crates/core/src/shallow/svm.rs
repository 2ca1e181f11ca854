use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::label::Label;
use crate::rng;
use crate::vectorize::SparseVector;

use super::{check_training_set, FitError, Prediction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { lambda: 1e-4, epochs: 20, seed: 0 }
    }
}

/// Linear SVM `f(x) = w·x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SVMModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub cfg: SvmConfig,
    /// Primal objective at w = 0 followed by its value after each epoch.
    pub objective_trace: Vec<f64>,
}

/// `λ/2 ‖w‖² + (1/n) Σ max(0, 1 − y (w·x + b))`; the bias is not penalized.
pub fn objective(weights: &[f64], bias: f64, lambda: f64, x: &[SparseVector], y: &[Label]) -> f64 {
    let reg = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = x.iter().zip(y).map(|(xi, yi)| (1.0 - yi.sign() * (xi.dot(weights) + bias)).max(0.0)).sum();
    reg + hinge / x.len() as f64
}

/// Pegasos-style SGD on the hinge loss: step `1/(λt)`, one seeded shuffle
/// per epoch, weights start at zero.
///
/// `w` is stored as `scale * v` so the per-step shrink costs O(1).
pub fn svm_fit(x: &[SparseVector], y: &[Label], n_features: usize, cfg: &SvmConfig) -> Result<SVMModel, FitError> {
    check_training_set(x, y)?;
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) || cfg.epochs == 0 {
        return Err(FitError::Config(format!("need lambda > 0 and epochs >= 1, got {cfg:?}")));
    }
    if let Some(bad) = x.iter().filter_map(SparseVector::max_index).find(|&i| i >= n_features) {
        return Err(FitError::Dimension(bad, n_features));
    }
    let mut v = vec![0.0; n_features];
    let mut scale = 1.0f64;
    let mut bias = 0.0;
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = rng::seeded(cfg.seed);
    let mut trace = vec![objective(&v, bias, cfg.lambda, x, y)];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.lambda * t as f64);
            let yi = y[i].sign();
            let margin = yi * (scale * x[i].dot(&v) + bias);
            let shrink = 1.0 - eta * cfg.lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|a| *a = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * yi / scale;
                for (j, xj) in x[i].iter() {
                    v[j] += step * xj;
                }
                bias += eta * yi;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|a| *a *= scale);
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|a| a * scale).collect();
        trace.push(objective(&w, bias, cfg.lambda, x, y));
    }
    let weights = v.into_iter().map(|a| a * scale).collect();
    Ok(SVMModel { weights, bias, cfg: *cfg, objective_trace: trace })
}

impl SVMModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// Positive decision means depressive; exactly zero is non_depressive.
    pub fn predict(&self, x: &SparseVector) -> Prediction {
        let score = self.decision(x);
        let label = if score > 0.0 { Label::Depressive } else { Label::NonDepressive };
        Prediction { label, score }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const D: Label = Label::Depressive;
    const N: Label = Label::NonDepressive;

    fn pt(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    #[test]
    fn separates_two_points() {
        let x = vec![pt(&[2.0]), pt(&[-2.0])];
        let y = [D, N];
        let cfg = SvmConfig { lambda: 0.01, epochs: 100, seed: 3 };
        let m = svm_fit(&x, &y, 1, &cfg).unwrap();
        assert!(m.decision(&x[0]) > 0.0);
        assert_eq!(m.predict(&x[0]).label, D);
        assert_eq!(m.predict(&x[1]).label, N);
    }

    #[test]
    fn label_flip_negates_decisions() {
        let x = vec![pt(&[1.0, 0.5]), pt(&[-0.3, 2.0]), pt(&[0.7, -1.0]), pt(&[-1.5, -0.2])];
        let y = [D, N, D, N];
        let flipped: Vec<Label> = y.iter().map(|l| l.flip()).collect();
        let cfg = SvmConfig { lambda: 0.05, epochs: 7, seed: 11 };
        let a = svm_fit(&x, &y, 2, &cfg).unwrap();
        let b = svm_fit(&x, &flipped, 2, &cfg).unwrap();
        for xi in &x {
            assert_eq!(a.decision(xi), -b.decision(xi));
        }
    }

    #[test]
    fn objective_descends() {
        let x = vec![pt(&[1.0, 0.2]), pt(&[0.8, -0.1]), pt(&[-1.0, 0.3]), pt(&[-0.7, -0.4])];
        let m = svm_fit(&x, &[D, D, N, N], 2, &SvmConfig { lambda: 0.01, epochs: 30, seed: 1 }).unwrap();
        assert!(m.objective_trace.iter().all(|v| v.is_finite()));
        assert!(m.objective_trace.last().unwrap() <= &m.objective_trace[0]);
    }

    #[test]
    fn predict_examples() {
        let m = SVMModel { weights: vec![1.0, 0.0], bias: 0.0, cfg: SvmConfig::default(), objective_trace: vec![] };
        let p = m.predict(&pt(&[3.0, 5.0]));
        assert_eq!((p.label, p.score), (D, 3.0));
        let zero = m.predict(&SparseVector::default());
        assert_eq!((zero.label, zero.score), (N, 0.0));
    }

    #[test]
    fn rejects_single_class() {
        let x = vec![pt(&[1.0]), pt(&[2.0])];
        assert!(matches!(svm_fit(&x, &[D, D], 1, &SvmConfig::default()), Err(FitError::SingleClass(D))));
    }

    proptest! {
        #[test]
        fn decision_is_affine(w in proptest::collection::vec(-3.0f64..3.0, 3), b in -2.0f64..2.0,
                              a in proptest::collection::vec(-3.0f64..3.0, 3), c in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let m = SVMModel { weights: w, bias: b, cfg: SvmConfig::default(), objective_trace: vec![] };
            let sum: Vec<f64> = a.iter().zip(&c).map(|(p, q)| p + q).collect();
            let lhs = m.decision(&pt(&sum));
            let rhs = m.decision(&pt(&a)) + m.decision(&pt(&c)) - b;
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
