//! Generation and classification losses.
//!
//! The value-only functions work for any [`ConditionalLM`]; the `*_grad`
//! variants are specific to [`TinyLm`] and accumulate analytic gradients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classifier::{Classifier, ClassifierGrads, MarkedSentence, CLASSES};
use super::tiny_lm::{Condition, ConditionalLM, LmGrads, TinyLm};
use super::vocab::TokenId;
use crate::corpus::Polarity;

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LossError {
    #[error("{weights} weights for {targets} target tokens")]
    LengthMismatch { weights: usize, targets: usize },
}

/// A generation target: teacher-forced tokens with per-position weights and
/// the token ids whose probability mass is penalised at every position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenTarget {
    pub aspect: Vec<TokenId>,
    pub source: Vec<TokenId>,
    pub targets: Vec<TokenId>,
    pub weights: Vec<f64>,
    pub negatives: Vec<TokenId>,
    pub bos: TokenId,
}

impl GenTarget {
    pub fn condition(&self) -> Condition {
        Condition {
            aspect: self.aspect.clone(),
            source: self.source.clone(),
        }
    }

    /// `<s>` followed by the first `j` targets.
    pub fn prefix(&self, j: usize) -> Vec<TokenId> {
        let mut p = Vec::with_capacity(j + 1);
        p.push(self.bos);
        p.extend_from_slice(&self.targets[..j]);
        p
    }

    fn check(&self) -> Result<(), LossError> {
        if self.weights.len() != self.targets.len() {
            return Err(LossError::LengthMismatch {
                weights: self.weights.len(),
                targets: self.targets.len(),
            });
        }
        Ok(())
    }
}

fn clamped_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Distance-weighted negative log-likelihood of the target tokens.
pub fn loss_sdw<M: ConditionalLM + ?Sized>(model: &M, target: &GenTarget) -> Result<f64, LossError> {
    target.check()?;
    let cond = target.condition();
    let mut loss = 0.0;
    for (j, (&t, &h)) in target.targets.iter().zip(&target.weights).enumerate() {
        let p = model.next_token_distribution(&cond, &target.prefix(j));
        loss -= h * clamped_ln(p[t]);
    }
    Ok(loss)
}

/// Unlikelihood contrastive term: `-sum_j log(p_t / (p_t + sum_w p_w))` over
/// the negative ids `w`, all read from the same step distribution. Zero when
/// there are no negatives.
pub fn loss_ucr<M: ConditionalLM + ?Sized>(model: &M, target: &GenTarget) -> Result<f64, LossError> {
    target.check()?;
    if target.negatives.is_empty() {
        return Ok(0.0);
    }
    let cond = target.condition();
    let mut loss = 0.0;
    for (j, &t) in target.targets.iter().enumerate() {
        let p = model.next_token_distribution(&cond, &target.prefix(j));
        let neg: f64 = target.negatives.iter().map(|&w| p[w]).sum();
        loss += clamped_ln(p[t] + neg) - clamped_ln(p[t]);
    }
    Ok(loss)
}

/// Cross-entropy of the classifier prediction against `label`.
pub fn loss_cls(classifier: &Classifier, lm: &TinyLm, input: &MarkedSentence, label: Polarity) -> f64 {
    -clamped_ln(classifier.predict(lm, input)[label.index()])
}

/// Coefficients on the three loss terms; all 1.0 gives the plain sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub sdw: f64,
    pub ucr: f64,
    pub cls: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            sdw: 1.0,
            ucr: 1.0,
            cls: 1.0,
        }
    }
}

impl LossWeights {
    pub fn combine(&self, sdw: f64, ucr: f64, cls: f64) -> f64 {
        self.sdw * sdw + self.ucr * ucr + self.cls * cls
    }
}

pub fn loss_total(sdw: f64, ucr: f64, cls: f64) -> f64 {
    sdw + ucr + cls
}

impl TinyLm {
    /// [`loss_sdw`] plus `scale *` its gradient added into `grads`.
    pub fn sdw_loss_grad(&self, target: &GenTarget, scale: f64, grads: &mut LmGrads) -> Result<f64, LossError> {
        target.check()?;
        let cond = target.condition();
        let mut loss = 0.0;
        for (j, (&t, &h)) in target.targets.iter().zip(&target.weights).enumerate() {
            let step = self.step_forward(&cond, &target.prefix(j));
            let pt = step.probs[t];
            loss -= h * clamped_ln(pt);
            if pt < PROB_FLOOR || h == 0.0 || scale == 0.0 {
                continue;
            }
            let mut d_logits: Vec<f64> = step.probs.iter().map(|p| scale * h * p).collect();
            d_logits[t] -= scale * h;
            self.step_backward(&step, &d_logits, grads);
        }
        Ok(loss)
    }

    /// [`loss_ucr`] plus `scale *` its gradient added into `grads`.
    pub fn ucr_loss_grad(&self, target: &GenTarget, scale: f64, grads: &mut LmGrads) -> Result<f64, LossError> {
        target.check()?;
        if target.negatives.is_empty() {
            return Ok(0.0);
        }
        let cond = target.condition();
        let mut loss = 0.0;
        let mut counts = vec![0.0; self.vocab.len()];
        for &w in &target.negatives {
            counts[w] += 1.0;
        }
        for (j, &t) in target.targets.iter().enumerate() {
            let step = self.step_forward(&cond, &target.prefix(j));
            let p = &step.probs;
            let pt = p[t];
            let q = pt + target.negatives.iter().map(|&w| p[w]).sum::<f64>();
            loss += clamped_ln(q) - clamped_ln(pt);
            if scale == 0.0 || q < PROB_FLOOR {
                continue;
            }
            // d ln q / dz_k = c_k p_k / q - p_k, with c_k the multiplicity of k in {t} + negatives.
            let mut d_logits: Vec<f64> = p.iter().zip(&counts).map(|(pk, c)| scale * (c * pk / q - pk)).collect();
            d_logits[t] += scale * p[t] / q;
            if pt >= PROB_FLOOR {
                // minus d ln p_t / dz_k = -(delta_tk - p_k)
                for (d, pk) in d_logits.iter_mut().zip(p) {
                    *d += scale * pk;
                }
                d_logits[t] -= scale;
            }
            self.step_backward(&step, &d_logits, grads);
        }
        Ok(loss)
    }
}

impl Classifier {
    /// [`loss_cls`] plus `scale *` its gradient added into both buffers.
    pub fn cls_loss_grad(
        &self,
        lm: &TinyLm,
        input: &MarkedSentence,
        label: Polarity,
        scale: f64,
        lm_grads: &mut LmGrads,
        grads: &mut ClassifierGrads,
    ) -> f64 {
        let fwd = self.forward(lm, input);
        let y = label.index();
        let py = fwd.probs[y];
        let loss = -clamped_ln(py);
        if py >= PROB_FLOOR && scale != 0.0 {
            let mut d_logits: Vec<f64> = fwd.probs.iter().map(|p| scale * p).collect();
            d_logits[y] -= scale;
            debug_assert_eq!(d_logits.len(), CLASSES);
            self.backward(lm, input, &fwd, &d_logits, lm_grads, grads);
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Returns a fixed distribution regardless of context.
    struct Fixed(Vec<f64>);

    impl ConditionalLM for Fixed {
        fn vocab_size(&self) -> usize {
            self.0.len()
        }
        fn next_token_distribution(&self, _: &Condition, _: &[TokenId]) -> Vec<f64> {
            self.0.clone()
        }
    }

    fn target(targets: Vec<TokenId>, weights: Vec<f64>, negatives: Vec<TokenId>) -> GenTarget {
        GenTarget {
            aspect: vec![],
            source: vec![],
            targets,
            weights,
            negatives,
            bos: 0,
        }
    }

    #[test]
    fn sdw_arithmetic_identity() {
        let e2 = (-2.0f64).exp();
        let m = Fixed(vec![1.0 - e2, e2]);
        assert_abs_diff_eq!(
            loss_sdw(&m, &target(vec![1], vec![0.5], vec![])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sdw_all_ones_is_nll() {
        let m = Fixed(vec![0.2, 0.3, 0.5]);
        let t = target(vec![1, 2, 2], vec![1.0; 3], vec![]);
        let nll = -(0.3f64.ln() + 2.0 * 0.5f64.ln());
        assert_abs_diff_eq!(loss_sdw(&m, &t).unwrap(), nll, epsilon = 1e-12);
    }

    #[test]
    fn sdw_length_mismatch() {
        let m = Fixed(vec![0.5, 0.5]);
        assert_eq!(
            loss_sdw(&m, &target(vec![1, 1], vec![1.0], vec![])),
            Err(LossError::LengthMismatch { weights: 1, targets: 2 })
        );
    }

    #[test]
    fn ucr_examples() {
        let m = Fixed(vec![0.5, 0.0, 0.5]);
        assert_eq!(loss_ucr(&m, &target(vec![0], vec![1.0], vec![1])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            loss_ucr(&m, &target(vec![0], vec![1.0], vec![2])).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_eq!(loss_ucr(&m, &target(vec![0], vec![1.0], vec![])).unwrap(), 0.0);
    }

    #[test]
    fn total_is_plain_sum() {
        assert_eq!(loss_total(0.0, 0.0, 0.0), 0.0);
        assert_eq!(loss_total(1.0, 0.5, 0.25), 1.75);
        assert_eq!(LossWeights::default().combine(1.0, 0.5, 0.25), 1.75);
    }
}
