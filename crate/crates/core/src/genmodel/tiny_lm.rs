use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::tensor::{axpy, softmax, Matrix};
use super::vocab::{TokenId, Vocabulary};

/// What the generator conditions on: the aspect term and source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Condition {
    pub aspect: Vec<TokenId>,
    pub source: Vec<TokenId>,
}

/// A next-token model conditioned on `(aspect, source)` and a decoded prefix.
pub trait ConditionalLM {
    fn vocab_size(&self) -> usize;

    /// Probability of every vocabulary entry following `prefix`. The result
    /// is non-negative and sums to 1.
    fn next_token_distribution(&self, condition: &Condition, prefix: &[TokenId]) -> Vec<f64>;
}

impl<M: ConditionalLM + ?Sized> ConditionalLM for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_token_distribution(&self, condition: &Condition, prefix: &[TokenId]) -> Vec<f64> {
        (**self).next_token_distribution(condition, prefix)
    }
}

/// Mean-of-embeddings conditional language model.
///
/// The context is `aspect <sep> source <sep> prefix`; its mean embedding `x`
/// produces logits `x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyLm {
    pub vocab: Vocabulary,
    pub embedding: Matrix,
    pub output: Matrix,
    pub bias: Vec<f64>,
}

/// Gradient buffers shaped like [`TinyLm`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LmGrads {
    pub embedding: Matrix,
    pub output: Matrix,
    pub bias: Vec<f64>,
}

impl LmGrads {
    pub fn zeros_like(lm: &TinyLm) -> Self {
        Self {
            embedding: Matrix::zeros(lm.embedding.rows(), lm.embedding.cols()),
            output: Matrix::zeros(lm.output.rows(), lm.output.cols()),
            bias: vec![0.0; lm.bias.len()],
        }
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 3] {
        [
            ("embedding", self.embedding.as_slice()),
            ("output", self.output.as_slice()),
            ("bias", &self.bias),
        ]
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &LmGrads) {
        axpy(alpha, other.embedding.as_slice(), self.embedding.as_mut_slice());
        axpy(alpha, other.output.as_slice(), self.output.as_mut_slice());
        axpy(alpha, &other.bias, &mut self.bias);
    }
}

/// Forward state of one decoding step, kept for the backward pass.
pub(crate) struct StepForward {
    pub context: Vec<TokenId>,
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

impl TinyLm {
    /// Small uniform initialisation from `seed`; the bias starts at zero.
    pub fn new(vocab: Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = vocab.len();
        let scale = 1.0 / (dim as f64).sqrt();
        let embedding = Matrix::uniform(v, dim, scale, &mut rng);
        let output = Matrix::uniform(dim, v, scale, &mut rng);
        Self {
            vocab,
            embedding,
            output,
            bias: vec![0.0; v],
        }
    }

    pub fn dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn parameter_count(&self) -> usize {
        self.embedding.as_slice().len() + self.output.as_slice().len() + self.bias.len()
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 3] {
        [
            ("embedding", self.embedding.as_mut_slice()),
            ("output", self.output.as_mut_slice()),
            ("bias", &mut self.bias),
        ]
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 3] {
        [
            ("embedding", self.embedding.as_slice()),
            ("output", self.output.as_slice()),
            ("bias", &self.bias),
        ]
    }

    pub fn apply(&mut self, lr: f64, grads: &LmGrads) {
        axpy(-lr, grads.embedding.as_slice(), self.embedding.as_mut_slice());
        axpy(-lr, grads.output.as_slice(), self.output.as_mut_slice());
        axpy(-lr, &grads.bias, &mut self.bias);
    }

    pub fn context(&self, condition: &Condition, prefix: &[TokenId]) -> Vec<TokenId> {
        let sep = self.vocab.sep();
        let mut ctx = Vec::with_capacity(condition.aspect.len() + condition.source.len() + prefix.len() + 2);
        ctx.extend_from_slice(&condition.aspect);
        ctx.push(sep);
        ctx.extend_from_slice(&condition.source);
        ctx.push(sep);
        ctx.extend_from_slice(prefix);
        ctx
    }

    /// Mean embedding of `tokens`.
    pub fn mean_embedding(&self, tokens: &[TokenId]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        if tokens.is_empty() {
            return x;
        }
        let w = 1.0 / tokens.len() as f64;
        for &t in tokens {
            axpy(w, self.embedding.row(t), &mut x);
        }
        x
    }

    pub(crate) fn step_forward(&self, condition: &Condition, prefix: &[TokenId]) -> StepForward {
        let context = self.context(condition, prefix);
        let hidden = self.mean_embedding(&context);
        let mut logits = self.output.vec_mul(&hidden);
        axpy(1.0, &self.bias, &mut logits);
        let probs = softmax(&logits);
        StepForward { context, hidden, probs }
    }

    /// Backpropagates `d loss / d logits` of one step into `grads`.
    pub(crate) fn step_backward(&self, step: &StepForward, d_logits: &[f64], grads: &mut LmGrads) {
        grads.output.add_outer(1.0, &step.hidden, d_logits);
        axpy(1.0, d_logits, &mut grads.bias);
        let d_hidden = self.output.mul_vec(d_logits);
        self.embedding_backward(&step.context, &d_hidden, grads);
    }

    /// Spreads `d loss / d mean` evenly over the embedding rows of `tokens`.
    pub(crate) fn embedding_backward(&self, tokens: &[TokenId], d_mean: &[f64], grads: &mut LmGrads) {
        if tokens.is_empty() {
            return;
        }
        let w = 1.0 / tokens.len() as f64;
        for &t in tokens {
            axpy(w, d_mean, grads.embedding.row_mut(t));
        }
    }

    /// SHA-256 over the little-endian bytes of every parameter.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (_, t) in self.tensors() {
            for v in t {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl ConditionalLM for TinyLm {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_token_distribution(&self, condition: &Condition, prefix: &[TokenId]) -> Vec<f64> {
        self.step_forward(condition, prefix).probs
    }
}
