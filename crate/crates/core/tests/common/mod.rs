//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the code it checks.

#![allow(dead_code)]

pub mod gradients;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use sentaug::genmodel::{Condition, ConditionalLM, TokenId};
use sentaug::selection::TrainingTriplet;
use sentaug::synthetic::{generate_corpus, SyntheticConfig};
use sentaug::{AspectInstance, Dataset, Polarity};

/// Random tree over `n` nodes as a 1-based head vector (0 = root).
pub fn random_heads<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        heads[order[k]] = parent + 1;
    }
    heads
}

/// All-pairs shortest paths over the undirected head graph.
pub fn floyd_warshall(heads: &[usize]) -> Vec<Vec<usize>> {
    let n = heads.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        if heads[i] > 0 {
            let h = heads[i] - 1;
            d[i][h] = 1;
            d[h][i] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Distance from each node to the nearest node of `span`.
pub fn span_distances(all_pairs: &[Vec<usize>], span: std::ops::Range<usize>) -> Vec<usize> {
    (0..all_pairs.len())
        .map(|j| span.clone().map(|a| all_pairs[j][a]).min().unwrap())
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Full descending sort by cosine, ties by name; returns names.
pub fn brute_force_ranking(names: &[String], vectors: &[Vec<f64>], query: usize) -> Vec<String> {
    let mut all: Vec<(String, f64)> = names
        .iter()
        .zip(vectors)
        .map(|(n, v)| {
            (
                n.clone(),
                if n == &names[query] {
                    1.0
                } else {
                    cosine(&vectors[query], v)
                },
            )
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.into_iter().map(|(n, _)| n).collect()
}

/// A model whose next-token distribution is a fixed random function of the
/// prefix, so repeated queries agree.
pub struct TableModel {
    pub size: usize,
    pub salt: u64,
}

impl TableModel {
    fn logits(&self, prefix: &[TokenId]) -> Vec<f64> {
        // splitmix64 over (salt, prefix)
        let mut state = self.salt ^ 0x9e37_79b9_7f4a_7c15;
        for &t in prefix {
            state = mix(state ^ (t as u64 + 1));
        }
        (0..self.size)
            .map(|i| {
                state = mix(state.wrapping_add(i as u64));
                (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0
            })
            .collect()
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ConditionalLM for TableModel {
    fn vocab_size(&self) -> usize {
        self.size
    }

    fn next_token_distribution(&self, _: &Condition, prefix: &[TokenId]) -> Vec<f64> {
        let l = self.logits(prefix);
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = l.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }
}

fn contains_run(tokens: &[TokenId], forced: &[Vec<TokenId>]) -> bool {
    forced
        .iter()
        .any(|f| tokens.windows(f.len()).any(|w| w == f.as_slice()))
}

/// Best `<s> x1 .. xL` with `xL = </s>`, `L <= max_len`, no earlier `</s>`,
/// containing one of `forced`, by exhaustive enumeration.
pub fn brute_force_best<M: ConditionalLM>(
    model: &M,
    forced: &[Vec<TokenId>],
    bos: TokenId,
    eos: TokenId,
    max_len: usize,
) -> Option<(Vec<TokenId>, f64)> {
    let cond = Condition::default();
    let mut best: Option<(Vec<TokenId>, f64)> = None;
    let mut stack = vec![(vec![bos], 0.0)];
    while let Some((prefix, score)) = stack.pop() {
        if prefix.len() > max_len {
            continue;
        }
        let dist = model.next_token_distribution(&cond, &prefix);
        for (w, &p) in dist.iter().enumerate() {
            let mut next = prefix.clone();
            next.push(w);
            let s = score + p.ln();
            if w == eos {
                if contains_run(&next, forced) && best.as_ref().is_none_or(|b| s > b.1) {
                    best = Some((next, s));
                }
            } else {
                stack.push((next, s));
            }
        }
    }
    best
}

/// Checks one triplet against the selection rules using the raw embedding
/// rows. Returns a description of the first violated rule.
pub fn recheck_triplet(
    t: &TrainingTriplet,
    dataset: &Dataset,
    rows: &HashMap<String, Vec<f64>>,
    k_c: usize,
) -> Result<(), String> {
    let key = |i: &AspectInstance| i.aspect_tokens().join(" ").to_lowercase();
    let vector = |k: &str| -> Option<Vec<f64>> {
        let words: Vec<&Vec<f64>> = k.split(' ').filter_map(|w| rows.get(w)).collect();
        let first = words.first()?;
        let mut v = vec![0.0; first.len()];
        for w in &words {
            for (a, b) in v.iter_mut().zip(w.iter()) {
                *a += b / words.len() as f64;
            }
        }
        Some(v)
    };
    let input = &t.input;
    let pos = &t.positive_target;
    if pos.polarity != input.polarity {
        return Err("positive polarity differs".into());
    }
    if pos.implicit {
        return Err("positive target is implicit".into());
    }
    if pos.id == input.id {
        return Err("input selected itself".into());
    }
    let mut names: Vec<String> = dataset.iter().map(key).collect();
    names.sort();
    names.dedup();
    names.retain(|n| vector(n).is_some());
    let vectors: Vec<Vec<f64>> = names.iter().map(|n| vector(n).unwrap()).collect();
    let q = names
        .iter()
        .position(|n| *n == key(input))
        .ok_or("input aspect missing")?;
    let ranking = brute_force_ranking(&names, &vectors, q);
    let top = &ranking[..k_c.min(ranking.len())];
    if !top.contains(&key(pos)) {
        return Err(format!(
            "positive aspect {} not in top-{k_c} of {}: {top:?}",
            key(pos),
            key(input)
        ));
    }
    if let Some(neg) = &t.negative_target {
        if key(neg) != key(input) {
            return Err("negative target aspect differs".into());
        }
        if neg.implicit {
            return Err("negative target is implicit".into());
        }
        let ok = match input.polarity {
            Polarity::Positive => neg.polarity == Polarity::Negative,
            Polarity::Negative => neg.polarity == Polarity::Positive,
            Polarity::Neutral => neg.polarity != Polarity::Neutral,
        };
        if !ok {
            return Err(format!(
                "negative polarity {:?} for input {:?}",
                neg.polarity, input.polarity
            ));
        }
    } else if !t.negative_words.is_empty() {
        return Err("negative words without a negative target".into());
    }
    for w in &t.negative_words {
        if pos.tokens.iter().any(|p| p.to_lowercase() == *w) {
            return Err(format!("negative word {w} occurs in the positive target"));
        }
    }
    Ok(())
}

/// A synthetic corpus cut to exactly `n` instances with its embedding rows.
pub fn synthetic_instances(n: usize, seed: u64) -> (Dataset, HashMap<String, Vec<f64>>, sentaug::EmbeddingTable) {
    let cfg = SyntheticConfig {
        seed,
        train_sentences: n,
        ..Default::default()
    };
    let corpus = generate_corpus(&cfg);
    let mut instances = corpus.train.instances.clone();
    assert!(instances.len() >= n);
    instances.truncate(n);
    let rows = corpus.embedding_rows.iter().cloned().collect();
    (Dataset::new("synthetic", instances), rows, corpus.embeddings().unwrap())
}

/// Direct evaluation of `-sum p ln p` averaged over rows.
pub fn entropy_oracle(rows: &[[f64; 3]]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|r| r.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>())
        .sum();
    total / rows.len() as f64
}
