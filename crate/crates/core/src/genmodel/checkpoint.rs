use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classifier::Classifier;
use super::tensor::Matrix;
use super::tiny_lm::TinyLm;
use super::vocab::Vocabulary;

pub const CHECKPOINT_FORMAT: &str = "sentaug-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (format {0:?})")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("tensor {name}: {message}")]
    Tensor { name: String, message: String },
    #[error("vocabulary: {0}")]
    Vocab(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBlob {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// JSON checkpoint: a shape header and row-major values for every tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub vocab: Vec<String>,
    pub tensors: Vec<TensorBlob>,
}

fn blob(name: &str, m: &Matrix) -> TensorBlob {
    TensorBlob {
        name: name.into(),
        shape: vec![m.rows(), m.cols()],
        values: m.as_slice().to_vec(),
    }
}

fn vector(name: &str, v: &[f64]) -> TensorBlob {
    TensorBlob {
        name: name.into(),
        shape: vec![v.len()],
        values: v.to_vec(),
    }
}

impl Checkpoint {
    pub fn new(lm: &TinyLm, cls: &Classifier) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            vocab: lm.vocab.tokens().to_vec(),
            tensors: vec![
                blob("lm.embedding", &lm.embedding),
                blob("lm.output", &lm.output),
                vector("lm.bias", &lm.bias),
                blob("cls.hidden", &cls.hidden),
                vector("cls.hidden_bias", &cls.hidden_bias),
                blob("cls.output", &cls.output),
                vector("cls.output_bias", &cls.output_bias),
            ],
        }
    }

    fn find(&self, name: &str, rank: usize) -> Result<&TensorBlob, CheckpointError> {
        let t = self
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| CheckpointError::Tensor {
                name: name.into(),
                message: "missing".into(),
            })?;
        if t.shape.len() != rank || t.shape.iter().product::<usize>() != t.values.len() {
            return Err(CheckpointError::Tensor {
                name: name.into(),
                message: format!("shape {:?} does not match {} values", t.shape, t.values.len()),
            });
        }
        Ok(t)
    }

    fn matrix(&self, name: &str) -> Result<Matrix, CheckpointError> {
        let t = self.find(name, 2)?;
        Ok(Matrix::from_vec(t.shape[0], t.shape[1], t.values.clone()).expect("shape checked"))
    }

    fn vector(&self, name: &str) -> Result<Vec<f64>, CheckpointError> {
        Ok(self.find(name, 1)?.values.clone())
    }

    pub fn restore(&self) -> Result<(TinyLm, Classifier), CheckpointError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(CheckpointError::Format(self.format.clone()));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(self.version));
        }
        let vocab = Vocabulary::from_tokens(self.vocab.clone()).map_err(CheckpointError::Vocab)?;
        let lm = TinyLm {
            embedding: self.matrix("lm.embedding")?,
            output: self.matrix("lm.output")?,
            bias: self.vector("lm.bias")?,
            vocab,
        };
        let cls = Classifier {
            hidden: self.matrix("cls.hidden")?,
            hidden_bias: self.vector("cls.hidden_bias")?,
            output: self.matrix("cls.output")?,
            output_bias: self.vector("cls.output_bias")?,
        };
        let v = lm.vocab.len();
        let d = lm.embedding.cols();
        let consistent = lm.embedding.rows() == v
            && lm.output.rows() == d
            && lm.output.cols() == v
            && lm.bias.len() == v
            && cls.hidden.cols() == 2 * d
            && cls.hidden_bias.len() == cls.hidden.rows()
            && cls.output.cols() == cls.hidden.rows()
            && cls.output.rows() == 3
            && cls.output_bias.len() == 3;
        if !consistent {
            return Err(CheckpointError::Tensor {
                name: "*".into(),
                message: "tensor shapes are inconsistent with each other".into(),
            });
        }
        Ok((lm, cls))
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, CheckpointError> {
        Ok(serde_json::from_str(s)?)
    }
}
