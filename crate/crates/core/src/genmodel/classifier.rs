use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tensor::{axpy, softmax, Matrix};
use super::tiny_lm::{LmGrads, TinyLm};
use super::vocab::{TokenId, Vocabulary};
use crate::corpus::Polarity;

/// Classifier input: token ids with the aspect bracketed by marker tokens,
/// and the span of the aspect tokens inside them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedSentence {
    pub tokens: Vec<TokenId>,
    pub aspect: Range<usize>,
}

impl MarkedSentence {
    /// `s[..from] <asp> s[from..to] </asp> s[to..]`, followed by
    /// `<sep> augmentation` when an augmentation is given.
    pub fn new<S: AsRef<str>>(
        vocab: &Vocabulary,
        sentence: &[S],
        aspect: Range<usize>,
        augmentation: Option<&[S]>,
    ) -> Self {
        let mut tokens = Vec::with_capacity(sentence.len() + 3);
        tokens.extend(vocab.encode(&sentence[..aspect.start]));
        tokens.push(vocab.aspect_open());
        let start = tokens.len();
        tokens.extend(vocab.encode(&sentence[aspect.clone()]));
        let end = tokens.len();
        tokens.push(vocab.aspect_close());
        tokens.extend(vocab.encode(&sentence[aspect.end..]));
        if let Some(aug) = augmentation {
            tokens.push(vocab.sep());
            tokens.extend(vocab.encode(aug));
        }
        Self {
            tokens,
            aspect: start..end,
        }
    }
}

/// Three-way sentiment head over pooled [`TinyLm`] embeddings.
///
/// The pooled vector concatenates the mean embedding of the whole marked
/// sentence with the mean embedding of the aspect tokens; a `tanh` hidden
/// layer and a softmax output follow.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub hidden: Matrix,
    pub hidden_bias: Vec<f64>,
    pub output: Matrix,
    pub output_bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGrads {
    pub hidden: Matrix,
    pub hidden_bias: Vec<f64>,
    pub output: Matrix,
    pub output_bias: Vec<f64>,
}

impl ClassifierGrads {
    pub fn zeros_like(c: &Classifier) -> Self {
        Self {
            hidden: Matrix::zeros(c.hidden.rows(), c.hidden.cols()),
            hidden_bias: vec![0.0; c.hidden_bias.len()],
            output: Matrix::zeros(c.output.rows(), c.output.cols()),
            output_bias: vec![0.0; c.output_bias.len()],
        }
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("hidden", self.hidden.as_slice()),
            ("hidden_bias", &self.hidden_bias),
            ("output", self.output.as_slice()),
            ("output_bias", &self.output_bias),
        ]
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &ClassifierGrads) {
        axpy(alpha, other.hidden.as_slice(), self.hidden.as_mut_slice());
        axpy(alpha, &other.hidden_bias, &mut self.hidden_bias);
        axpy(alpha, other.output.as_slice(), self.output.as_mut_slice());
        axpy(alpha, &other.output_bias, &mut self.output_bias);
    }
}

pub(crate) struct ClassifierForward {
    pooled: Vec<f64>,
    hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

pub const CLASSES: usize = 3;

impl Classifier {
    pub fn new(embedding_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let in_dim = 2 * embedding_dim;
        Self {
            hidden: Matrix::uniform(hidden_dim, in_dim, 1.0 / (in_dim as f64).sqrt(), &mut rng),
            hidden_bias: vec![0.0; hidden_dim],
            output: Matrix::uniform(CLASSES, hidden_dim, 1.0 / (hidden_dim as f64).sqrt(), &mut rng),
            output_bias: vec![0.0; CLASSES],
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden.as_slice().len() + self.hidden_bias.len() + self.output.as_slice().len() + self.output_bias.len()
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("hidden", self.hidden.as_slice()),
            ("hidden_bias", &self.hidden_bias),
            ("output", self.output.as_slice()),
            ("output_bias", &self.output_bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 4] {
        [
            ("hidden", self.hidden.as_mut_slice()),
            ("hidden_bias", &mut self.hidden_bias),
            ("output", self.output.as_mut_slice()),
            ("output_bias", &mut self.output_bias),
        ]
    }

    pub fn apply(&mut self, lr: f64, g: &ClassifierGrads) {
        axpy(-lr, g.hidden.as_slice(), self.hidden.as_mut_slice());
        axpy(-lr, &g.hidden_bias, &mut self.hidden_bias);
        axpy(-lr, g.output.as_slice(), self.output.as_mut_slice());
        axpy(-lr, &g.output_bias, &mut self.output_bias);
    }

    fn pool(lm: &TinyLm, input: &MarkedSentence) -> Vec<f64> {
        let mut pooled = lm.mean_embedding(&input.tokens);
        pooled.extend(lm.mean_embedding(&input.tokens[input.aspect.clone()]));
        pooled
    }

    pub(crate) fn forward(&self, lm: &TinyLm, input: &MarkedSentence) -> ClassifierForward {
        let pooled = Self::pool(lm, input);
        let mut pre = self.hidden.mul_vec(&pooled);
        axpy(1.0, &self.hidden_bias, &mut pre);
        let hidden: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
        let mut logits = self.output.mul_vec(&hidden);
        axpy(1.0, &self.output_bias, &mut logits);
        ClassifierForward {
            pooled,
            hidden,
            probs: softmax(&logits),
        }
    }

    /// Class probabilities in [`Polarity::index`] order.
    pub fn predict(&self, lm: &TinyLm, input: &MarkedSentence) -> [f64; CLASSES] {
        let p = self.forward(lm, input).probs;
        [p[0], p[1], p[2]]
    }

    pub fn predict_label(&self, lm: &TinyLm, input: &MarkedSentence) -> Polarity {
        let p = self.predict(lm, input);
        let best = (0..CLASSES)
            .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap().then(b.cmp(&a)))
            .unwrap();
        Polarity::from_index(best).unwrap()
    }

    pub(crate) fn backward(
        &self,
        lm: &TinyLm,
        input: &MarkedSentence,
        fwd: &ClassifierForward,
        d_logits: &[f64],
        lm_grads: &mut LmGrads,
        grads: &mut ClassifierGrads,
    ) {
        grads.output.add_outer(1.0, d_logits, &fwd.hidden);
        axpy(1.0, d_logits, &mut grads.output_bias);
        let d_hidden = self.output.vec_mul(d_logits);
        let d_pre: Vec<f64> = d_hidden
            .iter()
            .zip(&fwd.hidden)
            .map(|(g, h)| g * (1.0 - h * h))
            .collect();
        grads.hidden.add_outer(1.0, &d_pre, &fwd.pooled);
        axpy(1.0, &d_pre, &mut grads.hidden_bias);
        let d_pooled = self.hidden.vec_mul(&d_pre);
        let dim = lm.dim();
        lm.embedding_backward(&input.tokens, &d_pooled[..dim], lm_grads);
        lm.embedding_backward(&input.tokens[input.aspect.clone()], &d_pooled[dim..], lm_grads);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marks_aspect_and_appends_augmentation() {
        let vocab = Vocabulary::build(["the", "food", "was", "great"]);
        let s = ["the", "food", "was"];
        let m = MarkedSentence::new(&vocab, &s, 1..2, Some(&["great"][..]));
        let words = vocab.decode(&m.tokens);
        assert_eq!(words, vec!["the", "<asp>", "food", "</asp>", "was", "<sep>", "great"]);
        assert_eq!(&words[m.aspect.clone()], &["food".to_string()]);
        let plain = MarkedSentence::new(&vocab, &s, 0..3, None);
        assert_eq!(plain.tokens.len(), 5);
        assert_eq!(plain.aspect, 1..4);
    }

    #[test]
    fn output_is_simplex_point() {
        let vocab = Vocabulary::build(["a", "b"]);
        let lm = TinyLm::new(vocab.clone(), 6, 1);
        let c = Classifier::new(6, 5, 2);
        let m = MarkedSentence::new(&vocab, &["a", "b"], 0..1, None);
        let p = c.predict(&lm, &m);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| *x > 0.0));
    }
}
