//! Small generated restaurant-review corpus with gold dependency heads and a
//! matching aspect embedding table.
//!
//! Explicit sentences carry an opinion word. Some also carry a cue verb
//! whose polarity agrees with the label most of the time. Implicit
//! instances are produced by deleting the opinion word from cue sentences,
//! leaving the cue as the only sentiment signal.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AspectInstance, Dataset, Polarity};
use crate::embeddings::{EmbeddingError, EmbeddingTable};
use crate::selection::stream_rng;

const CLUSTERS: &[&[&str]] = &[
    &["food", "pizza", "pasta", "dessert"],
    &["service", "staff", "waiter"],
    &["price", "bill"],
    &["ambience", "music", "decor"],
    &["wine list", "drinks", "coffee"],
];

fn opinions(p: Polarity) -> &'static [&'static str] {
    match p {
        Polarity::Positive => &["great", "excellent", "lovely", "superb"],
        Polarity::Negative => &["awful", "terrible", "poor", "dreadful"],
        Polarity::Neutral => &["okay", "average", "ordinary"],
    }
}

fn cues(p: Polarity) -> &'static [&'static str] {
    match p {
        Polarity::Positive => &["returned", "recommended"],
        Polarity::Negative => &["waited", "complained"],
        Polarity::Neutral => &["ordered", "noticed"],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Number of sentences (two-aspect sentences yield two instances).
    pub train_sentences: usize,
    pub test_sentences: usize,
    /// Probability that a cue sentence loses its opinion word.
    pub train_implicit_rate: f64,
    pub test_implicit_rate: f64,
    /// Share of sentences with two contrasting aspects.
    pub contrast_rate: f64,
    /// Share of single-aspect sentences that carry a cue verb.
    pub cue_rate: f64,
    /// Probability that a cue agrees with the label.
    pub cue_reliability: f64,
    pub dimension: usize,
    pub noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_sentences: 130,
            test_sentences: 60,
            train_implicit_rate: 0.25,
            test_implicit_rate: 0.7,
            contrast_rate: 0.2,
            cue_rate: 0.6,
            cue_reliability: 0.9,
            dimension: 8,
            noise: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub train: Dataset,
    pub test: Dataset,
    /// Embedding rows in a fixed order, one per aspect word.
    pub embedding_rows: Vec<(String, Vec<f64>)>,
}

impl SyntheticCorpus {
    pub fn embeddings(&self) -> Result<EmbeddingTable, EmbeddingError> {
        EmbeddingTable::from_entries(self.embedding_rows.clone())
    }

    /// Whitespace-separated text form readable by the embedding parser.
    pub fn write_embeddings<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (word, v) in &self.embedding_rows {
            write!(out, "{word}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Word(&'static str),
    Aspect(usize),
    Opinion(usize),
    Cue,
}

/// Template slots with 1-based heads (0 = root) in slot positions.
fn single(cue: bool) -> Vec<(Slot, usize)> {
    use Slot::*;
    if cue {
        // we CUE and the ASP was OP .
        vec![
            (Word("we"), 2),
            (Cue, 7),
            (Word("and"), 7),
            (Word("the"), 5),
            (Aspect(0), 7),
            (Word("was"), 7),
            (Opinion(0), 0),
            (Word("."), 7),
        ]
    } else {
        vec![
            (Word("the"), 2),
            (Aspect(0), 4),
            (Word("was"), 4),
            (Opinion(0), 0),
            (Word("."), 4),
        ]
    }
}

fn implicit_single() -> Vec<(Slot, usize)> {
    use Slot::*;
    // we CUE and the ASP was .
    vec![
        (Word("we"), 2),
        (Cue, 0),
        (Word("and"), 2),
        (Word("the"), 5),
        (Aspect(0), 2),
        (Word("was"), 5),
        (Word("."), 2),
    ]
}

fn contrast() -> Vec<(Slot, usize)> {
    use Slot::*;
    // the ASP1 was OP1 but the ASP2 was OP2 .
    vec![
        (Word("the"), 2),
        (Aspect(0), 4),
        (Word("was"), 4),
        (Opinion(0), 0),
        (Word("but"), 9),
        (Word("the"), 7),
        (Aspect(1), 9),
        (Word("was"), 9),
        (Opinion(1), 4),
        (Word("."), 4),
    ]
}

struct Filled {
    tokens: Vec<String>,
    heads: Vec<usize>,
    spans: Vec<(usize, usize)>,
}

/// Expands slots into tokens. Multi-word aspects become a head-final chain
/// whose earlier words attach to the last one.
fn fill(template: &[(Slot, usize)], aspects: &[&str], opinion_words: &[&str], cue: &str) -> Filled {
    let mut tokens = Vec::new();
    let mut slot_head_pos = Vec::new();
    let mut pieces: Vec<Vec<String>> = Vec::new();
    for (slot, _) in template {
        let words: Vec<String> = match *slot {
            Slot::Word(w) => vec![w.to_string()],
            Slot::Aspect(k) => aspects[k].split(' ').map(str::to_string).collect(),
            Slot::Opinion(k) => vec![opinion_words[k].to_string()],
            Slot::Cue => vec![cue.to_string()],
        };
        tokens.extend(words.iter().cloned());
        slot_head_pos.push(tokens.len()); // 1-based position of the slot's last word
        pieces.push(words);
    }
    let mut heads = Vec::with_capacity(tokens.len());
    let mut spans = vec![(0, 0); aspects.len()];
    let mut pos = 0;
    for (i, ((slot, head), words)) in template.iter().zip(&pieces).enumerate() {
        let last = slot_head_pos[i];
        for _ in 0..words.len() - 1 {
            heads.push(last);
        }
        heads.push(if *head == 0 { 0 } else { slot_head_pos[head - 1] });
        if let Slot::Aspect(k) = slot {
            spans[*k] = (pos, pos + words.len());
        }
        pos += words.len();
    }
    Filled { tokens, heads, spans }
}

fn draw_polarity<R: Rng>(rng: &mut R) -> Polarity {
    let u: f64 = rng.gen();
    if u < 0.42 {
        Polarity::Positive
    } else if u < 0.78 {
        Polarity::Negative
    } else {
        Polarity::Neutral
    }
}

fn draw_cue<R: Rng>(p: Polarity, reliability: f64, rng: &mut R) -> &'static str {
    let source = if rng.gen::<f64>() < reliability {
        p
    } else {
        let others: Vec<Polarity> = Polarity::ALL.into_iter().filter(|&q| q != p).collect();
        *others.choose(rng).unwrap()
    };
    cues(source).choose(rng).unwrap()
}

fn all_aspects() -> Vec<&'static str> {
    CLUSTERS.iter().flat_map(|c| c.iter().copied()).collect()
}

fn split(prefix: &str, sentences: usize, implicit_rate: f64, cfg: &SyntheticConfig, stream: u64) -> Dataset {
    let mut rng = stream_rng(cfg.seed, stream);
    let aspects = all_aspects();
    let mut instances = Vec::new();
    for s in 0..sentences {
        let kind: f64 = rng.gen();
        if kind < cfg.contrast_rate {
            let a1 = *aspects.choose(&mut rng).unwrap();
            let a2 = loop {
                let a = *aspects.choose(&mut rng).unwrap();
                if a != a1 {
                    break a;
                }
            };
            let (p1, p2) = (draw_polarity(&mut rng), draw_polarity(&mut rng));
            let o1 = *opinions(p1).choose(&mut rng).unwrap();
            let o2 = *opinions(p2).choose(&mut rng).unwrap();
            let f = fill(&contrast(), &[a1, a2], &[o1, o2], "");
            for (k, p) in [p1, p2].into_iter().enumerate() {
                instances.push(AspectInstance {
                    id: format!("{prefix}-{s}-{k}"),
                    tokens: f.tokens.clone(),
                    aspect_from: f.spans[k].0,
                    aspect_to: f.spans[k].1,
                    polarity: p,
                    implicit: false,
                    heads: Some(f.heads.clone()),
                });
            }
            continue;
        }
        let a = *aspects.choose(&mut rng).unwrap();
        let p = draw_polarity(&mut rng);
        let o = *opinions(p).choose(&mut rng).unwrap();
        let with_cue = rng.gen::<f64>() < cfg.cue_rate;
        let cue = draw_cue(p, cfg.cue_reliability, &mut rng);
        let implicit = with_cue && rng.gen::<f64>() < implicit_rate;
        let template = if implicit { implicit_single() } else { single(with_cue) };
        let f = fill(&template, &[a], &[o], cue);
        instances.push(AspectInstance {
            id: format!("{prefix}-{s}"),
            tokens: f.tokens,
            aspect_from: f.spans[0].0,
            aspect_to: f.spans[0].1,
            polarity: p,
            implicit,
            heads: Some(f.heads),
        });
    }
    Dataset::new(prefix, instances)
}

fn embedding_rows(cfg: &SyntheticConfig) -> Vec<(String, Vec<f64>)> {
    let mut rng = stream_rng(cfg.seed, 3);
    let mut rows = Vec::new();
    for cluster in CLUSTERS {
        let centre: Vec<f64> = (0..cfg.dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for aspect in cluster.iter() {
            for word in aspect.split(' ') {
                if rows.iter().any(|(w, _)| w == word) {
                    continue;
                }
                let v = centre
                    .iter()
                    .map(|c| c + cfg.noise * rng.gen_range(-1.0..1.0))
                    .collect();
                rows.push((word.to_string(), v));
            }
        }
    }
    rows
}

pub fn generate_corpus(cfg: &SyntheticConfig) -> SyntheticCorpus {
    SyntheticCorpus {
        train: split("train", cfg.train_sentences, cfg.train_implicit_rate, cfg, 1),
        test: split("test", cfg.test_sentences, cfg.test_implicit_rate, cfg, 2),
        embedding_rows: embedding_rows(cfg),
    }
}
