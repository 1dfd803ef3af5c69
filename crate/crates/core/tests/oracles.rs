//! Library output compared against brute-force reference implementations.

mod common;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentaug::decoder::{generate, BeamSelect, ConstraintSet, DecodeConfig, Generation, Termination};
use sentaug::genmodel::{loss_sdw, loss_total, loss_ucr, Condition, ConditionalLM, GenTarget};
use sentaug::selection::{build_training_set, SelectionConfig};
use sentaug::syntax::{negative_word_set, syntax_distances, DependencyTree};
use sentaug::{parse_embedding_table, SimilarityMatrix};

use common::*;

#[test]
fn distances_match_all_pairs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let n = rng.gen_range(1..=15);
        let heads = random_heads(n, &mut rng);
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(from + 1..=n.min(from + 3));
        let tree = DependencyTree::from_heads(heads.clone()).unwrap();
        let fw = floyd_warshall(&heads);
        assert_eq!(
            syntax_distances(&tree, from..to),
            span_distances(&fw, from..to),
            "heads {heads:?}"
        );
    }
}

#[test]
fn distances_respect_tree_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.gen_range(2..=15);
        let heads = random_heads(n, &mut rng);
        let a = rng.gen_range(0..n);
        let d = syntax_distances(&DependencyTree::from_heads(heads.clone()).unwrap(), a..a + 1);
        let fw = floyd_warshall(&heads);
        for j in 0..n {
            assert!(d[j] < n);
            for k in 0..n {
                assert!(d[j].abs_diff(d[k]) <= fw[j][k]);
            }
        }
    }
}

/// 50 words of 10 dimensions drawn from a fixed seed, with a few exact
/// duplicates so ties occur.
fn embedding_fixture() -> (Vec<String>, Vec<Vec<f64>>, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut names = Vec::new();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for i in 0..50 {
        names.push(format!("w{i:02}"));
        let v = if i % 10 == 9 {
            vectors[i - 1].iter().map(|x| x * 3.0).collect()
        } else {
            (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        vectors.push(v);
    }
    let text = names
        .iter()
        .zip(&vectors)
        .map(|(n, v)| {
            let nums: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("{n} {}\n", nums.join(" "))
        })
        .collect();
    (names, vectors, text)
}

#[test]
fn top_k_matches_full_sort() {
    let (names, vectors, text) = embedding_fixture();
    let table = parse_embedding_table(text.as_bytes()).unwrap();
    let sim = SimilarityMatrix::build(&table, names.iter().map(|n| vec![n.clone()]));
    for q in 0..names.len() {
        let oracle = brute_force_ranking(&names, &vectors, q);
        for k in [1, 2, 5, 17, 50] {
            let got: Vec<String> = sim
                .top_k_similar(&names[q], k)
                .unwrap()
                .into_iter()
                .map(|(n, _)| n)
                .collect();
            assert_eq!(got, oracle[..k], "query {} k {k}", names[q]);
        }
    }
}

#[test]
fn cosine_is_symmetric_and_bounded() {
    let (names, _, text) = embedding_fixture();
    let table = parse_embedding_table(text.as_bytes()).unwrap();
    let sim = SimilarityMatrix::build(&table, names.iter().map(|n| vec![n.clone()]));
    for i in 0..sim.len() {
        for j in 0..sim.len() {
            assert_eq!(sim.get(i, j), sim.get(j, i));
            assert!(sim.get(i, j).abs() <= 1.0 + 1e-12);
        }
    }
}

pub fn cbs_oracle_case(salt: u64) -> Result<(), String> {
    let model = TableModel { size: 6, salt };
    let (bos, eos) = (0, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(salt);
    let forced: Vec<Vec<usize>> = match salt % 3 {
        0 => vec![vec![rng.gen_range(2..6)]],
        1 => vec![vec![2, 3]],
        _ => vec![vec![rng.gen_range(2..6)], vec![4, 5]],
    };
    let constraints = ConstraintSet::new(forced.clone()).unwrap();
    let config = DecodeConfig {
        z: 6,
        beam_width: 6usize.pow(5),
        max_steps: 5,
        select: BeamSelect::Random,
        termination: Termination::Certified,
    };
    let got = generate(&model, &Condition::default(), &constraints, bos, eos, &config, &mut rng);
    let want = brute_force_best(&model, &forced, bos, eos, 5);
    match (got, want) {
        (Generation::Finished(g), Some((tokens, score))) => {
            if g.tokens != tokens || (g.logprob - score).abs() > 1e-9 {
                return Err(format!(
                    "salt {salt}: got {:?} {} want {tokens:?} {score}",
                    g.tokens, g.logprob
                ));
            }
            Ok(())
        }
        (Generation::Failed(_), None) => Ok(()),
        (g, w) => Err(format!("salt {salt}: got {g:?} want {w:?}")),
    }
}

#[test]
fn cbs_equals_exhaustive_search() {
    for salt in 0..40 {
        cbs_oracle_case(salt).unwrap();
    }
}

#[test]
fn selection_passes_independent_recheck() {
    let (dataset, rows, table) = synthetic_instances(200, 5);
    for k_c in [1, 2, 3] {
        let config = SelectionConfig { k_c, k_n: 4, seed: 9 };
        let sel = build_training_set(&dataset, &config, &table);
        assert_eq!(sel.triplets.len() + sel.skipped.len(), dataset.len());
        for t in &sel.triplets {
            recheck_triplet(t, &dataset, &rows, k_c).unwrap();
            assert!(t.negative_words.len() <= 4);
        }
        let ids: HashSet<_> = sel
            .triplets
            .iter()
            .map(|t| &t.input.id)
            .chain(sel.skipped.iter().map(|s| &s.id))
            .collect();
        assert_eq!(ids.len(), dataset.len());
    }
}

#[test]
fn negative_words_disjoint_from_exclusions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let words = ["a", "b", "c", "d", "e", "f", "g"];
    for _ in 0..300 {
        let n = rng.gen_range(2..=12);
        let heads = random_heads(n, &mut rng);
        let tokens: Vec<&str> = (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect();
        let a = rng.gen_range(0..n);
        let exclude: HashSet<String> = words
            .iter()
            .filter(|_| rng.gen_bool(0.3))
            .map(|w| w.to_string())
            .collect();
        let tree = DependencyTree::from_heads(heads).unwrap();
        let out = negative_word_set(&tree, a..a + 1, &tokens, 4, &exclude);
        assert!(out.len() <= 4);
        for w in &out {
            assert!(!exclude.contains(w));
            assert_ne!(w, tokens[a]);
        }
    }
}

/// A fixed table of next-token distributions indexed by prefix length.
struct StepTable(Vec<Vec<f64>>);

impl ConditionalLM for StepTable {
    fn vocab_size(&self) -> usize {
        self.0[0].len()
    }

    fn next_token_distribution(&self, _: &Condition, prefix: &[usize]) -> Vec<f64> {
        self.0[prefix.len() - 1].clone()
    }
}

#[test]
fn losses_match_hand_evaluation() {
    // Five target steps over a 7-token vocabulary.
    let probs = vec![
        vec![0.05, 0.05, 0.4, 0.2, 0.1, 0.1, 0.1],
        vec![0.1, 0.1, 0.1, 0.3, 0.2, 0.1, 0.1],
        vec![0.2, 0.1, 0.1, 0.1, 0.3, 0.1, 0.1],
        vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.4, 0.1],
        vec![0.1, 0.5, 0.1, 0.1, 0.1, 0.05, 0.05],
    ];
    let model = StepTable(probs.clone());
    let target = GenTarget {
        aspect: vec![4],
        source: vec![2, 3],
        targets: vec![2, 3, 4, 5, 1],
        weights: vec![0.9, 0.5, 0.99, 0.7, 1.0],
        negatives: vec![5, 6],
        bos: 0,
    };
    let sdw: f64 =
        -(0.9 * 0.4f64.ln() + 0.5 * 0.3f64.ln() + 0.99 * 0.3f64.ln() + 0.7 * 0.4f64.ln() + 1.0 * 0.5f64.ln());
    let ucr: f64 = [(0.4, 0.2), (0.3, 0.2), (0.3, 0.2), (0.4, 0.5), (0.5, 0.1)]
        .iter()
        .map(|&(t, n): &(f64, f64)| (t + n).ln() - t.ln())
        .sum();
    let got_sdw = loss_sdw(&model, &target).unwrap();
    let got_ucr = loss_ucr(&model, &target).unwrap();
    assert!((got_sdw - sdw).abs() < 1e-12, "{got_sdw} vs {sdw}");
    assert!((got_ucr - ucr).abs() < 1e-12, "{got_ucr} vs {ucr}");
    assert!((loss_total(got_sdw, got_ucr, 0.25) - (sdw + ucr + 0.25)).abs() < 1e-12);
}

#[test]
fn zero_probability_is_clamped() {
    let model = StepTable(vec![vec![0.5, 0.5, 0.0]]);
    let target = GenTarget {
        aspect: vec![],
        source: vec![],
        targets: vec![2],
        weights: vec![1.0],
        negatives: vec![1],
        bos: 0,
    };
    let l = loss_sdw(&model, &target).unwrap();
    assert!((l - -(1e-12f64).ln()).abs() < 1e-9);
    assert!(loss_ucr(&model, &target).unwrap().is_finite());
}
