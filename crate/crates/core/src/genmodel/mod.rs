//! Conditional generator, sentiment classifier, and their losses.
//!
//! [`TinyLm`] is a deliberately small conditional language model whose
//! gradients are written out by hand; anything implementing
//! [`ConditionalLM`] can drive the decoder.

mod checkpoint;
mod classifier;
mod loss;
mod tensor;
mod tiny_lm;
mod train;
mod vocab;

pub use checkpoint::{Checkpoint, CheckpointError, TensorBlob};
pub use classifier::{Classifier, ClassifierGrads, MarkedSentence, CLASSES};
pub use loss::{loss_cls, loss_sdw, loss_total, loss_ucr, GenTarget, LossError, LossWeights, PROB_FLOOR};
pub use tensor::{softmax, Matrix};
pub use tiny_lm::{Condition, ConditionalLM, LmGrads, TinyLm};
pub use train::{evaluate_losses, train, EpochLoss, Example, LossTrace, Optimizer, TrainConfig, TrainError, Weighting};
pub use vocab::{TokenId, Vocabulary, ASPECT_CLOSE, ASPECT_OPEN, BOS, EOS, RESERVED, SEP, UNK};
