//! Rule-based collection of generator training pairs.
//!
//! For each input instance a positive target is drawn from explicit
//! instances that share its polarity and carry one of the `k_c` aspects most
//! similar to the input aspect. A negative target (same aspect, opposite
//! polarity) supplies the words the generator is discouraged from emitting.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AspectInstance, Dataset, Polarity};
use crate::embeddings::{EmbeddingTable, SimilarityMatrix};
use crate::syntax::negative_word_set;

/// Independent, portable random stream for item `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_c: usize,
    pub k_n: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k_c: 2,
            k_n: 4,
            seed: 0,
        }
    }
}

/// Positive <-> negative; neutral maps to either, drawn from `rng`.
pub fn opposite_polarity<R: Rng + ?Sized>(p: Polarity, rng: &mut R) -> Polarity {
    match p {
        Polarity::Positive => Polarity::Negative,
        Polarity::Negative => Polarity::Positive,
        Polarity::Neutral => {
            if rng.gen_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            }
        }
    }
}

/// One generator training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingTriplet {
    pub input: AspectInstance,
    pub positive_target: AspectInstance,
    pub aspect: Vec<String>,
    pub negative_target: Option<AspectInstance>,
    pub negative_words: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// The input aspect has no usable embedding.
    AspectOutOfVocabulary,
    /// No explicit instance matched the aspect and polarity rules.
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub id: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    pub triplets: Vec<TrainingTriplet>,
    pub skipped: Vec<Skip>,
}

/// Explicit instances whose aspect is among the `k_c` aspects most similar to
/// the input's and whose polarity matches. `k_c` is capped at the size of the
/// aspect set; an aspect missing from `sim` yields no candidates.
pub fn build_candidates<'a>(
    input: &AspectInstance,
    explicit: &'a [AspectInstance],
    sim: &SimilarityMatrix,
    k_c: usize,
) -> Vec<&'a AspectInstance> {
    let similar = similar_aspects(&input.aspect_key(), sim, k_c);
    if similar.is_empty() {
        return Vec::new();
    }
    explicit
        .iter()
        .filter(|c| {
            !c.implicit && c.id != input.id && c.polarity == input.polarity && similar.contains(&c.aspect_key())
        })
        .collect()
}

/// The aspect set used both for candidate filtering and as forced words at
/// generation time.
pub fn similar_aspects(aspect_key: &str, sim: &SimilarityMatrix, k_c: usize) -> Vec<String> {
    if !sim.contains(aspect_key) || sim.is_empty() {
        return Vec::new();
    }
    sim.top_k_similar(aspect_key, k_c.clamp(1, sim.len()))
        .map(|v| v.into_iter().map(|(a, _)| a).collect())
        .unwrap_or_default()
}

/// Builds the training set. Instance `i` draws from its own random stream so
/// the result does not depend on evaluation order.
pub fn build_training_set(dataset: &Dataset, config: &SelectionConfig, table: &EmbeddingTable) -> Selection {
    let sim = SimilarityMatrix::build(table, dataset.iter().map(|i| i.aspect_tokens().to_vec()));
    build_training_set_with(dataset, config, &sim)
}

pub fn build_training_set_with(dataset: &Dataset, config: &SelectionConfig, sim: &SimilarityMatrix) -> Selection {
    let (explicit, _) = dataset.split_explicit();
    let explicit = explicit.instances;

    let results: Vec<Result<TrainingTriplet, Skip>> = dataset
        .instances
        .par_iter()
        .enumerate()
        .map(|(i, input)| {
            let mut rng = stream_rng(config.seed, i as u64);
            select_one(input, &explicit, sim, config, &mut rng)
        })
        .collect();

    let mut out = Selection::default();
    for r in results {
        match r {
            Ok(t) => out.triplets.push(t),
            Err(s) => out.skipped.push(s),
        }
    }
    out
}

fn select_one(
    input: &AspectInstance,
    explicit: &[AspectInstance],
    sim: &SimilarityMatrix,
    config: &SelectionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainingTriplet, Skip> {
    let key = input.aspect_key();
    if !sim.contains(&key) {
        return Err(Skip {
            id: input.id.clone(),
            reason: SkipReason::AspectOutOfVocabulary,
        });
    }
    let candidates = build_candidates(input, explicit, sim, config.k_c);
    if candidates.is_empty() {
        return Err(Skip {
            id: input.id.clone(),
            reason: SkipReason::NoCandidates,
        });
    }
    let positive = candidates[rng.gen_range(0..candidates.len())].clone();

    let wanted = opposite_polarity(input.polarity, rng);
    let pool: Vec<&AspectInstance> = explicit
        .iter()
        .filter(|c| c.polarity == wanted && c.aspect_key() == key)
        .collect();
    let negative = (!pool.is_empty()).then(|| pool[rng.gen_range(0..pool.len())].clone());

    let exclude: HashSet<String> = positive.tokens.iter().map(|t| t.to_lowercase()).collect();
    let negative_words = negative
        .as_ref()
        .and_then(|neg| {
            let tree = neg.tree()?.ok()?;
            Some(negative_word_set(
                &tree,
                neg.aspect_span(),
                &neg.tokens,
                config.k_n,
                &exclude,
            ))
        })
        .unwrap_or_default();

    Ok(TrainingTriplet {
        aspect: input.aspect_tokens().to_vec(),
        input: input.clone(),
        positive_target: positive,
        negative_target: negative,
        negative_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::parse_embedding_table;

    fn inst(id: &str, tokens: &str, aspect: usize, p: Polarity, implicit: bool) -> AspectInstance {
        let tokens: Vec<String> = tokens.split(' ').map(str::to_string).collect();
        let n = tokens.len();
        AspectInstance {
            id: id.into(),
            tokens,
            aspect_from: aspect,
            aspect_to: aspect + 1,
            polarity: p,
            implicit,
            heads: Some((0..n).map(|i| if i + 1 == n { 0 } else { n }).collect()),
        }
    }

    fn table() -> EmbeddingTable {
        parse_embedding_table("food 1 0 0\nmeal 0.9 0.1 0\nstaff 0 1 0\nprice 0 0 1\n".as_bytes()).unwrap()
    }

    #[test]
    fn opposite_is_forced_for_signed_polarities() {
        let mut rng = stream_rng(1, 0);
        assert_eq!(opposite_polarity(Polarity::Positive, &mut rng), Polarity::Negative);
        assert_eq!(opposite_polarity(Polarity::Negative, &mut rng), Polarity::Positive);
    }

    #[test]
    fn neutral_opposite_is_seed_stable() {
        let draw = |seed| opposite_polarity(Polarity::Neutral, &mut stream_rng(seed, 0));
        assert_eq!(draw(42), draw(42));
        // Regression anchor pinned from the first run.
        assert_eq!(draw(42), Polarity::Negative);
        let draws: HashSet<Polarity> = (0..32).map(draw).collect();
        assert_eq!(draws.len(), 2);
    }

    #[test]
    fn candidates_empty_and_single() {
        let t = table();
        let input = inst("a", "the food was fine", 1, Polarity::Positive, true);
        let sim = SimilarityMatrix::build(&t, [input.aspect_tokens().to_vec()]);
        assert!(build_candidates(&input, &[], &sim, 2).is_empty());
        let other = inst("b", "great food here", 1, Polarity::Positive, false);
        let pool = vec![other.clone()];
        assert_eq!(build_candidates(&input, &pool, &sim, 2), vec![&other]);
    }

    #[test]
    fn two_explicit_pick_each_other() {
        let ds = Dataset::new(
            "d",
            vec![
                inst("a", "good food", 1, Polarity::Positive, false),
                inst("b", "tasty food", 1, Polarity::Positive, false),
            ],
        );
        let sel = build_training_set(&ds, &SelectionConfig::default(), &table());
        assert_eq!(sel.triplets.len(), 2);
        assert_eq!(sel.triplets[0].positive_target.id, "b");
        assert_eq!(sel.triplets[1].positive_target.id, "a");
        assert!(sel.skipped.is_empty());
    }

    #[test]
    fn lone_aspects_are_all_skipped() {
        let ds = Dataset::new(
            "d",
            vec![
                inst("a", "good food", 1, Polarity::Positive, false),
                inst("b", "rude staff", 1, Polarity::Negative, false),
                inst("c", "fair price", 1, Polarity::Neutral, false),
                inst("d", "odd thing", 1, Polarity::Neutral, false),
            ],
        );
        let config = SelectionConfig {
            k_c: 1,
            ..Default::default()
        };
        let sel = build_training_set(&ds, &config, &table());
        assert!(sel.triplets.is_empty());
        assert_eq!(sel.skipped.len(), 4);
        assert_eq!(sel.skipped[3].reason, SkipReason::AspectOutOfVocabulary);
        assert_eq!(sel.skipped[0].reason, SkipReason::NoCandidates);
    }

    #[test]
    fn negative_words_avoid_positive_target_words() {
        let ds = Dataset::new(
            "d",
            vec![
                inst("in", "the food", 1, Polarity::Positive, true),
                inst("pos", "good food here", 1, Polarity::Positive, false),
                inst("neg", "bad awful food here", 2, Polarity::Negative, false),
            ],
        );
        let sel = build_training_set(&ds, &SelectionConfig::default(), &table());
        let t = sel.triplets.iter().find(|t| t.input.id == "in").unwrap();
        assert_eq!(t.positive_target.id, "pos");
        assert_eq!(t.negative_target.as_ref().unwrap().id, "neg");
        assert_eq!(t.negative_words, vec!["bad", "awful"]);
    }
}
