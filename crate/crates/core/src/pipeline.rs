//! End-to-end orchestration: selection, generator training, augmentation,
//! classification, and evaluation.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{load_dataset, AspectInstance, CorpusError, Dataset, Polarity};
use crate::decoder::{generate, BeamSelect, ConstraintSet, DecodeConfig, Generation, Termination};
use crate::embeddings::{parse_embedding_table, EmbeddingError, EmbeddingTable, SimilarityMatrix};
use crate::genmodel::{
    train, Classifier, Condition, Example, LossTrace, LossWeights, MarkedSentence, Optimizer, TinyLm, TrainConfig,
    TrainError, Vocabulary, Weighting,
};
use crate::selection::{build_training_set_with, similar_aspects, stream_rng, Selection, SelectionConfig};
use crate::syntax::{import_conllu, ConlluError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{path}: {source}")]
    Conllu {
        path: PathBuf,
        #[source]
        source: ConlluError,
    },
    #[error("{path}: {source}")]
    Embeddings {
        path: PathBuf,
        #[source]
        source: EmbeddingError,
    },
    #[error("entropy of an empty prediction list")]
    EmptyPredictions,
    #[error("no training triplets could be selected")]
    NoTriplets,
    #[error("training: {0}")]
    Train(#[from] TrainError),
}

/// Every knob of a run. Field names double as the keys of the flat TOML
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k_c: usize,
    pub k_n: usize,
    pub beam_width: usize,
    pub top_z: usize,
    pub max_steps: usize,
    pub beam_select: BeamSelect,
    pub termination: Termination,
    pub optimizer: Optimizer,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss_sdw: f64,
    pub loss_ucr: f64,
    pub loss_cls: f64,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub train_conllu: Option<PathBuf>,
    pub test_conllu: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k_c: 2,
            k_n: 4,
            beam_width: 6,
            top_z: 3,
            max_steps: 30,
            beam_select: BeamSelect::Random,
            termination: Termination::Certified,
            optimizer: Optimizer::Sgd,
            lr: 0.5,
            batch_size: 8,
            epochs: 15,
            seed: 0,
            loss_sdw: 1.0,
            loss_ucr: 1.0,
            loss_cls: 1.0,
            embedding_dim: 16,
            hidden_dim: 16,
            train: None,
            test: None,
            train_conllu: None,
            test_conllu: None,
            embeddings: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = [
            ("k_c", self.k_c),
            ("k_n", self.k_n),
            ("beam_width", self.beam_width),
            ("top_z", self.top_z),
            ("max_steps", self.max_steps),
            ("batch_size", self.batch_size),
            ("embedding_dim", self.embedding_dim),
            ("hidden_dim", self.hidden_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(PipelineError::Config(format!("{name} must be at least 1")));
            }
        }
        let finite = [
            ("lr", self.lr),
            ("loss_sdw", self.loss_sdw),
            ("loss_ucr", self.loss_ucr),
            ("loss_cls", self.loss_cls),
        ];
        for (name, v) in finite {
            if !v.is_finite() || v < 0.0 {
                return Err(PipelineError::Config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            k_c: self.k_c,
            k_n: self.k_n,
            seed: self.seed,
        }
    }

    pub fn decode(&self) -> DecodeConfig {
        DecodeConfig {
            z: self.top_z,
            beam_width: self.beam_width,
            max_steps: self.max_steps,
            select: self.beam_select,
            termination: self.termination,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            sdw: self.loss_sdw,
            ucr: self.loss_ucr,
            cls: self.loss_cls,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            seed,
            weights: self.loss_weights(),
            optimizer: self.optimizer,
        }
    }

    pub fn required(&self, field: &'static str, value: &Option<PathBuf>) -> Result<PathBuf, PipelineError> {
        value
            .clone()
            .ok_or_else(|| PipelineError::Config(format!("missing path `{field}`")))
    }
}

// Stream offsets keep each stage's random draws independent of the others.
const GENERATION_STREAM: u64 = 1 << 32;
const CLASSIFIER_SEED_OFFSET: u64 = 0x5eed;

/// A dataset instance with its generated explicit sentence appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedInstance {
    pub base: AspectInstance,
    pub augmentation: Option<Vec<String>>,
    pub combined: Vec<String>,
}

impl AugmentedInstance {
    pub fn new(base: AspectInstance, augmentation: Option<Vec<String>>) -> Self {
        let mut combined = base.tokens.clone();
        if let Some(a) = &augmentation {
            combined.extend(a.iter().cloned());
        }
        Self {
            base,
            augmentation,
            combined,
        }
    }

    pub fn marked(&self, vocab: &Vocabulary) -> MarkedSentence {
        MarkedSentence::new(
            vocab,
            &self.base.tokens,
            self.base.aspect_span(),
            self.augmentation.as_deref(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub id: String,
    pub steps: usize,
    pub reason: String,
}

/// Forced aspects for an instance: its own aspect plus the `k_c` most similar.
pub fn constraints_for(
    vocab: &Vocabulary,
    sim: &SimilarityMatrix,
    inst: &AspectInstance,
    k_c: usize,
) -> Option<ConstraintSet> {
    let similar = similar_aspects(&inst.aspect_key(), sim, k_c);
    ConstraintSet::from_words(vocab, inst.aspect_tokens(), &similar)
}

/// Decodes one explicit sentence for `inst`; `index` selects its random stream.
pub fn generate_for(
    lm: &TinyLm,
    sim: &SimilarityMatrix,
    inst: &AspectInstance,
    config: &RunConfig,
    index: usize,
) -> Generation {
    let vocab = &lm.vocab;
    let condition = Condition {
        aspect: vocab.encode(inst.aspect_tokens()),
        source: vocab.encode(&inst.tokens),
    };
    let constraints = constraints_for(vocab, sim, inst, config.k_c).expect("aspect span is non-empty");
    let mut rng = stream_rng(config.seed, GENERATION_STREAM + index as u64);
    generate(
        lm,
        &condition,
        &constraints,
        vocab.bos(),
        vocab.eos(),
        &config.decode(),
        &mut rng,
    )
}

/// One augmented instance per input. Failed generations keep the original
/// sentence and are listed in the returned log.
pub fn augment_dataset(
    dataset: &Dataset,
    lm: &TinyLm,
    sim: &SimilarityMatrix,
    config: &RunConfig,
) -> (Vec<AugmentedInstance>, Vec<GenerationFailure>) {
    let results: Vec<_> = dataset
        .instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| match generate_for(lm, sim, inst, config, i) {
            Generation::Finished(s) => (
                AugmentedInstance::new(inst.clone(), Some(lm.vocab.decode(s.body(lm.vocab.eos())))),
                None,
            ),
            Generation::Failed(r) => (
                AugmentedInstance::new(inst.clone(), None),
                Some(GenerationFailure {
                    id: inst.id.clone(),
                    steps: r.steps,
                    reason: if r.best_prefix.is_some() {
                        "no end marker after a forced aspect within the step budget".into()
                    } else {
                        "no forced aspect generated within the step budget".into()
                    },
                }),
            ),
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (a, f) in results {
        out.push(a);
        failures.extend(f);
    }
    (out, failures)
}

/// Mean Shannon entropy (natural log) of 3-way predictions, `0 ln 0 = 0`.
pub fn avg_entropy(predictions: &[[f64; 3]]) -> Result<f64, PipelineError> {
    if predictions.is_empty() {
        return Err(PipelineError::EmptyPredictions);
    }
    let total: f64 = predictions
        .iter()
        .map(|p| -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
        .sum();
    Ok(total / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub implicit: bool,
    pub label: Polarity,
    pub predicted: Polarity,
    pub probs: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub entropy: f64,
}

/// Metrics over all instances and the explicit and implicit subsets. A
/// subset with no instances is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub all: Option<SplitMetrics>,
    pub explicit: Option<SplitMetrics>,
    pub implicit: Option<SplitMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub all: Option<(usize, f64)>,
    pub explicit: Option<(usize, f64)>,
    pub implicit: Option<(usize, f64)>,
}

pub fn entropy_report(predictions: &[Prediction]) -> EntropyReport {
    let part = |keep: &dyn Fn(&Prediction) -> bool| {
        let probs: Vec<[f64; 3]> = predictions.iter().filter(|p| keep(p)).map(|p| p.probs).collect();
        avg_entropy(&probs).ok().map(|h| (probs.len(), h))
    };
    EntropyReport {
        all: part(&|_| true),
        explicit: part(&|p| !p.implicit),
        implicit: part(&|p| p.implicit),
    }
}

pub fn accuracy(preds: &[Prediction]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().filter(|p| p.label == p.predicted).count() as f64 / preds.len() as f64
}

/// Unweighted mean of per-class F1 over the classes that occur as a gold
/// label or a prediction.
pub fn macro_f1(preds: &[Prediction]) -> f64 {
    let mut f1s = Vec::new();
    for c in Polarity::ALL {
        let tp = preds.iter().filter(|p| p.label == c && p.predicted == c).count() as f64;
        let gold = preds.iter().filter(|p| p.label == c).count() as f64;
        let predicted = preds.iter().filter(|p| p.predicted == c).count() as f64;
        if gold == 0.0 && predicted == 0.0 {
            continue;
        }
        f1s.push(if tp == 0.0 { 0.0 } else { 2.0 * tp / (gold + predicted) });
    }
    if f1s.is_empty() {
        0.0
    } else {
        f1s.iter().sum::<f64>() / f1s.len() as f64
    }
}

fn split_metrics(preds: &[Prediction]) -> Option<SplitMetrics> {
    let probs: Vec<[f64; 3]> = preds.iter().map(|p| p.probs).collect();
    let entropy = avg_entropy(&probs).ok()?;
    Some(SplitMetrics {
        n: preds.len(),
        accuracy: accuracy(preds),
        macro_f1: macro_f1(preds),
        entropy,
    })
}

pub fn metrics(preds: &[Prediction]) -> Metrics {
    let (implicit, explicit): (Vec<Prediction>, Vec<Prediction>) = preds.iter().cloned().partition(|p| p.implicit);
    Metrics {
        all: split_metrics(preds),
        explicit: split_metrics(&explicit),
        implicit: split_metrics(&implicit),
    }
}

pub fn predict(lm: &TinyLm, cls: &Classifier, instances: &[AugmentedInstance]) -> Vec<Prediction> {
    instances
        .iter()
        .map(|a| {
            let m = a.marked(&lm.vocab);
            let probs = cls.predict(lm, &m);
            Prediction {
                id: a.base.id.clone(),
                implicit: a.base.implicit,
                label: a.base.polarity,
                predicted: cls.predict_label(lm, &m),
                probs,
            }
        })
        .collect()
}

/// Vocabulary over every token of the given datasets.
pub fn vocabulary_for<'a>(datasets: impl IntoIterator<Item = &'a Dataset>) -> Vocabulary {
    Vocabulary::build(
        datasets
            .into_iter()
            .flat_map(|d| d.iter().flat_map(|i| i.tokens.iter())),
    )
}

/// Similarity matrix over the aspects of the given datasets.
pub fn similarity_for<'a>(table: &EmbeddingTable, datasets: impl IntoIterator<Item = &'a Dataset>) -> SimilarityMatrix {
    let aspects: Vec<Vec<String>> = datasets
        .into_iter()
        .flat_map(|d| d.iter().map(|i| i.aspect_tokens().to_vec()))
        .collect();
    SimilarityMatrix::build(table, aspects)
}

/// Output of [`train_generator`].
pub struct TrainedGenerator {
    pub lm: TinyLm,
    pub classifier: Classifier,
    pub selection: Selection,
    pub trace: LossTrace,
}

/// Selects triplets from `train` and fits generator and classifier jointly
/// on the weighted loss sum.
pub fn train_generator(
    train_set: &Dataset,
    vocab: &Vocabulary,
    sim: &SimilarityMatrix,
    config: &RunConfig,
    weighting: Weighting,
) -> Result<TrainedGenerator, PipelineError> {
    let selection = build_training_set_with(train_set, &config.selection(), sim);
    if selection.triplets.is_empty() {
        return Err(PipelineError::NoTriplets);
    }
    let examples: Vec<Example> = selection
        .triplets
        .iter()
        .map(|t| Example::from_triplet(vocab, t, weighting))
        .collect();
    let mut lm = TinyLm::new(vocab.clone(), config.embedding_dim, config.seed);
    let mut classifier = Classifier::new(
        config.embedding_dim,
        config.hidden_dim,
        config.seed.wrapping_add(CLASSIFIER_SEED_OFFSET),
    );
    let trace = train(&mut lm, &mut classifier, &examples, &config.train_config(config.seed))?;
    Ok(TrainedGenerator {
        lm,
        classifier,
        selection,
        trace,
    })
}

/// Trains the classifier (and shared embeddings) on `instances` with the
/// classification loss only.
pub fn train_classifier(
    lm: &mut TinyLm,
    classifier: &mut Classifier,
    instances: &[AugmentedInstance],
    epochs: usize,
    config: &RunConfig,
) -> Result<LossTrace, PipelineError> {
    let examples: Vec<Example> = instances
        .iter()
        .map(|a| Example::classification(a.marked(&lm.vocab), a.base.polarity))
        .collect();
    let tc = TrainConfig {
        epochs,
        lr: config.lr,
        batch_size: config.batch_size,
        seed: config.seed.wrapping_add(CLASSIFIER_SEED_OFFSET),
        weights: LossWeights {
            sdw: 0.0,
            ucr: 0.0,
            cls: 1.0,
        },
        optimizer: config.optimizer,
    };
    Ok(train(lm, classifier, &examples, &tc)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub metrics: Metrics,
    pub final_cls_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub all_accuracy: Option<f64>,
    pub explicit_accuracy: Option<f64>,
    pub implicit_accuracy: Option<f64>,
    pub all_entropy: Option<f64>,
    pub implicit_entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub triplets: usize,
    pub skipped: usize,
    pub generation_failures: usize,
    pub generator_loss_first: f64,
    pub generator_loss_last: f64,
    pub baseline: ArmReport,
    pub augmented: ArmReport,
    pub delta: Delta,
}

impl ExperimentReport {
    /// Plain-text summary: one row per arm and subset.
    pub fn table(&self) -> String {
        let mut out = format!(
            "seed {}  train {}  test {}  triplets {}  skipped {}  generation failures {}\n",
            self.seed, self.train_size, self.test_size, self.triplets, self.skipped, self.generation_failures
        );
        out.push_str(&format!(
            "{:<10} {:<9} {:>5} {:>9} {:>9} {:>9}\n",
            "arm", "subset", "n", "accuracy", "macro-f1", "entropy"
        ));
        for (arm, r) in [("baseline", &self.baseline), ("augmented", &self.augmented)] {
            for (subset, m) in [
                ("all", r.metrics.all),
                ("explicit", r.metrics.explicit),
                ("implicit", r.metrics.implicit),
            ] {
                match m {
                    Some(m) => out.push_str(&format!(
                        "{arm:<10} {subset:<9} {:>5} {:>9.4} {:>9.4} {:>9.4}\n",
                        m.n, m.accuracy, m.macro_f1, m.entropy
                    )),
                    None => out.push_str(&format!(
                        "{arm:<10} {subset:<9} {:>5} {:>9} {:>9} {:>9}\n",
                        0, "-", "-", "-"
                    )),
                }
            }
        }
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:+.4}"));
        out.push_str(&format!(
            "delta accuracy all {} explicit {} implicit {}; entropy all {} implicit {}\n",
            fmt(self.delta.all_accuracy),
            fmt(self.delta.explicit_accuracy),
            fmt(self.delta.implicit_accuracy),
            fmt(self.delta.all_entropy),
            fmt(self.delta.implicit_entropy)
        ));
        out
    }
}

fn diff(a: Option<SplitMetrics>, b: Option<SplitMetrics>, f: fn(&SplitMetrics) -> f64) -> Option<f64> {
    Some(f(&b?) - f(&a?))
}

/// Baseline classifier on raw sentences versus the full augmentation
/// pipeline, both from the same seed.
///
/// The baseline trains fresh embeddings and a fresh classifier for
/// `epochs`. The augmented arm first fits the generator on the selected
/// triplets, generates `s'` for every train and test instance, then trains a
/// fresh classifier head on the combined sentences for `epochs`, starting
/// from the generator's embeddings.
pub fn run_experiment(
    train_set: &Dataset,
    test_set: &Dataset,
    table: &EmbeddingTable,
    config: &RunConfig,
) -> Result<ExperimentReport, PipelineError> {
    config.validate()?;
    let vocab = vocabulary_for([train_set, test_set]);
    let sim = similarity_for(table, [train_set, test_set]);
    let plain =
        |d: &Dataset| -> Vec<AugmentedInstance> { d.iter().map(|i| AugmentedInstance::new(i.clone(), None)).collect() };
    let fresh_head = || {
        Classifier::new(
            config.embedding_dim,
            config.hidden_dim,
            config.seed.wrapping_add(CLASSIFIER_SEED_OFFSET),
        )
    };

    let mut lm_b = TinyLm::new(vocab.clone(), config.embedding_dim, config.seed);
    let mut cls_b = fresh_head();
    let trace_b = train_classifier(&mut lm_b, &mut cls_b, &plain(train_set), config.epochs, config)?;
    let baseline = ArmReport {
        metrics: metrics(&predict(&lm_b, &cls_b, &plain(test_set))),
        final_cls_loss: trace_b.last().map_or(f64::NAN, |e| e.cls),
    };

    let TrainedGenerator {
        lm, selection, trace, ..
    } = train_generator(train_set, &vocab, &sim, config, Weighting::Syntax)?;
    let (train_aug, train_fail) = augment_dataset(train_set, &lm, &sim, config);
    let (test_aug, test_fail) = augment_dataset(test_set, &lm, &sim, config);
    let mut lm_a = lm;
    let mut cls_a = fresh_head();
    let trace_a = train_classifier(&mut lm_a, &mut cls_a, &train_aug, config.epochs, config)?;
    let augmented = ArmReport {
        metrics: metrics(&predict(&lm_a, &cls_a, &test_aug)),
        final_cls_loss: trace_a.last().map_or(f64::NAN, |e| e.cls),
    };

    let (b, a) = (&baseline.metrics, &augmented.metrics);
    let delta = Delta {
        all_accuracy: diff(b.all, a.all, |m| m.accuracy),
        explicit_accuracy: diff(b.explicit, a.explicit, |m| m.accuracy),
        implicit_accuracy: diff(b.implicit, a.implicit, |m| m.accuracy),
        all_entropy: diff(b.all, a.all, |m| m.entropy),
        implicit_entropy: diff(b.implicit, a.implicit, |m| m.entropy),
    };
    Ok(ExperimentReport {
        seed: config.seed,
        train_size: train_set.len(),
        test_size: test_set.len(),
        triplets: selection.triplets.len(),
        skipped: selection.skipped.len(),
        generation_failures: train_fail.len() + test_fail.len(),
        generator_loss_first: trace.first().map_or(f64::NAN, |e| e.total),
        generator_loss_last: trace.last().map_or(f64::NAN, |e| e.total),
        baseline,
        augmented,
        delta,
    })
}

pub fn read_dataset(path: &Path, conllu: Option<&Path>) -> Result<Dataset, PipelineError> {
    let file = File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    let mut ds = load_dataset(BufReader::new(file), name).map_err(|source| PipelineError::Corpus {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(c) = conllu {
        let file = File::open(c).map_err(|source| PipelineError::Io {
            path: c.to_path_buf(),
            source,
        })?;
        let sentences = import_conllu(BufReader::new(file)).map_err(|source| PipelineError::Conllu {
            path: c.to_path_buf(),
            source,
        })?;
        ds.attach_heads(&sentences).map_err(|source| PipelineError::Corpus {
            path: c.to_path_buf(),
            source,
        })?;
    }
    Ok(ds)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable, PipelineError> {
    let file = File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_embedding_table(BufReader::new(file)).map_err(|source| PipelineError::Embeddings {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every input named by `config` and runs [`run_experiment`].
pub fn run_experiment_from_config(config: &RunConfig) -> Result<ExperimentReport, PipelineError> {
    config.validate()?;
    let train_path = config.required("train", &config.train)?;
    let test_path = config.required("test", &config.test)?;
    let emb_path = config.required("embeddings", &config.embeddings)?;
    let train_set = read_dataset(&train_path, config.train_conllu.as_deref())?;
    let test_set = read_dataset(&test_path, config.test_conllu.as_deref())?;
    let table = read_embeddings(&emb_path)?;
    run_experiment(&train_set, &test_set, &table, config)
}
