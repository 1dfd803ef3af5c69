//! Explicit sentiment augmentation for aspect-based sentiment analysis.
//!
//! Implicit-sentiment examples are enriched with a generated explicit
//! sentence: training triplets are selected through aspect similarity, a
//! small conditional generator is fitted with syntax-weighted and contrastive
//! losses, and a constrained beam search forces the aspect into every
//! generation.

pub mod corpus;
pub mod decoder;
pub mod embeddings;
pub mod genmodel;
pub mod pipeline;
pub mod selection;
pub mod syntax;
pub mod synthetic;

pub use corpus::{load_dataset, AspectInstance, CorpusError, Dataset, Polarity, Statistics};
pub use decoder::{generate, BeamSelect, ConstraintSet, DecodeConfig, Generation, Termination};
pub use embeddings::{parse_embedding_table, EmbeddingError, EmbeddingTable, SimilarityMatrix};
pub use genmodel::{Classifier, ConditionalLM, TinyLm, Vocabulary};
pub use pipeline::{run_experiment, ExperimentReport, PipelineError, RunConfig};
pub use selection::{build_training_set, Selection, SelectionConfig, TrainingTriplet};
pub use syntax::{import_conllu, DependencyTree};
