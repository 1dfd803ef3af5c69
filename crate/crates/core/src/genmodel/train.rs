use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classifier::{Classifier, ClassifierGrads, MarkedSentence};
use super::loss::{GenTarget, LossError, LossWeights};
use super::tiny_lm::{LmGrads, TinyLm};
use super::vocab::{Vocabulary, RESERVED};
use crate::corpus::Polarity;
use crate::selection::{stream_rng, TrainingTriplet};
use crate::syntax::{sdw_weights, syntax_distances};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training examples")]
    Empty,
    #[error("non-finite {component} loss at epoch {epoch}, example {example}")]
    NonFinite {
        epoch: usize,
        example: usize,
        component: &'static str,
    },
    #[error("non-finite gradient at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// How target positions are weighted in the generation loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `1 - softmax(d)` over dependency distances to the target's aspect.
    #[default]
    Syntax,
    /// Every position weighted 1.
    Uniform,
}

/// One training item: an optional generation target and an optional
/// classification target.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub gen: Option<GenTarget>,
    pub cls: Option<(MarkedSentence, Polarity)>,
}

impl Example {
    /// Encodes a selected triplet. The target is the positive sentence
    /// followed by `</s>`; the end marker takes weight 1. Targets without a
    /// dependency tree fall back to uniform weights.
    pub fn from_triplet(vocab: &Vocabulary, t: &TrainingTriplet, weighting: Weighting) -> Self {
        let pos = &t.positive_target;
        let mut targets = vocab.encode(&pos.tokens);
        targets.push(vocab.eos());
        let mut weights = match (weighting, pos.tree()) {
            (Weighting::Syntax, Some(Ok(tree))) => sdw_weights(&syntax_distances(&tree, pos.aspect_span())),
            _ => vec![1.0; pos.tokens.len()],
        };
        weights.push(1.0);
        let negatives: BTreeSet<_> = t
            .negative_words
            .iter()
            .filter_map(|w| vocab.get(w))
            .filter(|&id| id >= RESERVED.len())
            .collect();
        Self {
            gen: Some(GenTarget {
                aspect: vocab.encode(&t.aspect),
                source: vocab.encode(&t.input.tokens),
                targets,
                weights,
                negatives: negatives.into_iter().collect(),
                bos: vocab.bos(),
            }),
            cls: Some((
                MarkedSentence::new(vocab, &t.input.tokens, t.input.aspect_span(), None),
                t.input.polarity,
            )),
        }
    }

    pub fn classification(input: MarkedSentence, label: Polarity) -> Self {
        Self {
            gen: None,
            cls: Some((input, label)),
        }
    }
}

/// Update rule applied to each batch-mean gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// `theta -= lr * g`.
    #[default]
    Sgd,
    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            lr: 0.5,
            batch_size: 8,
            seed: 0,
            weights: LossWeights::default(),
            optimizer: Optimizer::Sgd,
        }
    }
}

/// Dataset-average losses after an epoch (epoch 0 is before training).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub sdw: f64,
    pub ucr: f64,
    pub cls: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace(pub Vec<EpochLoss>);

impl LossTrace {
    pub fn first(&self) -> Option<&EpochLoss> {
        self.0.first()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.0.last()
    }

    /// `epoch,sdw,ucr,cls,total` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,sdw,ucr,cls,total")?;
        for e in &self.0 {
            writeln!(out, "{},{},{},{},{}", e.epoch, e.sdw, e.ucr, e.cls, e.total)?;
        }
        Ok(())
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates, one buffer per parameter tensor in
/// the order LM tensors then classifier tensors.
struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl AdamState {
    fn new(lm: &TinyLm, cls: &Classifier) -> Self {
        let sizes: Vec<usize> = lm
            .tensors()
            .iter()
            .map(|(_, t)| t.len())
            .chain(cls.tensors().iter().map(|(_, t)| t.len()))
            .collect();
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, lr: f64, lm: &mut TinyLm, cls: &mut Classifier, lg: &LmGrads, cg: &ClassifierGrads) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        let grads = lg.tensors().into_iter().chain(cg.tensors()).map(|(_, g)| g);
        let params = lm.tensors_mut().into_iter().chain(cls.tensors_mut()).map(|(_, p)| p);
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

struct Losses {
    sdw: f64,
    ucr: f64,
    cls: f64,
}

fn example_losses(
    lm: &TinyLm,
    cls: &Classifier,
    ex: &Example,
    scale: Option<(f64, &LossWeights)>,
    lm_grads: &mut LmGrads,
    cls_grads: &mut ClassifierGrads,
) -> Result<Losses, LossError> {
    let (s, w) = match scale {
        Some((s, w)) => (s, *w),
        None => (0.0, LossWeights::default()),
    };
    let mut out = Losses {
        sdw: 0.0,
        ucr: 0.0,
        cls: 0.0,
    };
    if let Some(g) = &ex.gen {
        out.sdw = lm.sdw_loss_grad(g, s * w.sdw, lm_grads)?;
        out.ucr = lm.ucr_loss_grad(g, s * w.ucr, lm_grads)?;
    }
    if let Some((input, label)) = &ex.cls {
        out.cls = cls.cls_loss_grad(lm, input, *label, s * w.cls, lm_grads, cls_grads);
    }
    Ok(out)
}

/// Dataset-average losses without updating anything.
pub fn evaluate_losses(
    lm: &TinyLm,
    cls: &Classifier,
    examples: &[Example],
    weights: &LossWeights,
    epoch: usize,
) -> Result<EpochLoss, TrainError> {
    let mut lg = LmGrads::zeros_like(lm);
    let mut cg = ClassifierGrads::zeros_like(cls);
    let mut acc = EpochLoss {
        epoch,
        sdw: 0.0,
        ucr: 0.0,
        cls: 0.0,
        total: 0.0,
    };
    for (i, ex) in examples.iter().enumerate() {
        let l = example_losses(lm, cls, ex, None, &mut lg, &mut cg)?;
        for (component, v) in [("sdw", l.sdw), ("ucr", l.ucr), ("cls", l.cls)] {
            if !v.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    example: i,
                    component,
                });
            }
        }
        acc.sdw += l.sdw;
        acc.ucr += l.ucr;
        acc.cls += l.cls;
    }
    let n = examples.len().max(1) as f64;
    acc.sdw /= n;
    acc.ucr /= n;
    acc.cls /= n;
    acc.total = weights.combine(acc.sdw, acc.ucr, acc.cls);
    Ok(acc)
}

/// Mini-batch training on the weighted loss sum. Batches are drawn
/// from a per-epoch shuffle seeded by `config.seed`, and each update uses the
/// batch-mean gradient.
pub fn train(
    lm: &mut TinyLm,
    cls: &mut Classifier,
    examples: &[Example],
    config: &TrainConfig,
) -> Result<LossTrace, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::Empty);
    }
    let batch_size = config.batch_size.max(1);
    let mut trace = vec![evaluate_losses(lm, cls, examples, &config.weights, 0)?];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut adam = match config.optimizer {
        Optimizer::Adam => Some(AdamState::new(lm, cls)),
        Optimizer::Sgd => None,
    };
    for epoch in 1..=config.epochs {
        let mut rng = stream_rng(config.seed, epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let mut lg = LmGrads::zeros_like(lm);
            let mut cg = ClassifierGrads::zeros_like(cls);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let l = example_losses(lm, cls, &examples[i], Some((scale, &config.weights)), &mut lg, &mut cg)?;
                for (component, v) in [("sdw", l.sdw), ("ucr", l.ucr), ("cls", l.cls)] {
                    if !v.is_finite() {
                        return Err(TrainError::NonFinite {
                            epoch,
                            example: i,
                            component,
                        });
                    }
                }
            }
            let finite = lg
                .tensors()
                .iter()
                .chain(cg.tensors().iter())
                .all(|(_, t)| t.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(TrainError::NonFiniteGradient { epoch });
            }
            match adam.as_mut() {
                Some(state) => state.step(config.lr, lm, cls, &lg, &cg),
                None => {
                    lm.apply(config.lr, &lg);
                    cls.apply(config.lr, &cg);
                }
            }
        }
        trace.push(evaluate_losses(lm, cls, examples, &config.weights, epoch)?);
    }
    Ok(LossTrace(trace))
}
