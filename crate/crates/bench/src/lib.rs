//! Shared fixtures for the benchmarks.

use sentaug::genmodel::{TinyLm, Vocabulary};
use sentaug::pipeline::{similarity_for, vocabulary_for};
use sentaug::synthetic::{generate_corpus, SyntheticConfig, SyntheticCorpus};
use sentaug::SimilarityMatrix;

pub struct Fixture {
    pub corpus: SyntheticCorpus,
    pub vocab: Vocabulary,
    pub sim: SimilarityMatrix,
    pub lm: TinyLm,
}

/// Synthetic corpus with an untrained generator of embedding size `dim`.
pub fn fixture(dim: usize) -> Fixture {
    let corpus = generate_corpus(&SyntheticConfig::default());
    let vocab = vocabulary_for([&corpus.train, &corpus.test]);
    let table = corpus.embeddings().expect("synthetic embeddings are well formed");
    let sim = similarity_for(&table, [&corpus.train, &corpus.test]);
    let lm = TinyLm::new(vocab.clone(), dim, 0);
    Fixture { corpus, vocab, sim, lm }
}
