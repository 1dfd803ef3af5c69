//! Constrained beam search.
//!
//! Every step expands each prefix with the `z` most probable next tokens
//! plus the tokens needed to make progress on a forced aspect term. A
//! candidate finishes once it contains a forced aspect and ends with `</s>`.
//! Surplus candidates are cut back to the beam width either uniformly at
//! random or by score.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::genmodel::{Condition, ConditionalLM, TokenId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrefix {
    /// Starts with `<s>`.
    pub tokens: Vec<TokenId>,
    /// Sum of the model log-probabilities of every token after `<s>`.
    pub logprob: f64,
}

impl ScoredPrefix {
    pub fn start(bos: TokenId) -> Self {
        Self {
            tokens: vec![bos],
            logprob: 0.0,
        }
    }

    /// Generated tokens without the leading `<s>` or a trailing `</s>`.
    pub fn body(&self, eos: TokenId) -> &[TokenId] {
        let t = &self.tokens[1.min(self.tokens.len())..];
        match t.last() {
            Some(&last) if last == eos => &t[..t.len() - 1],
            _ => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Beam {
    pub prefixes: Vec<ScoredPrefix>,
    /// Best finished sentence seen so far (certified termination only).
    pub best_finished: Option<ScoredPrefix>,
}

impl Beam {
    pub fn start(bos: TokenId) -> Self {
        Self {
            prefixes: vec![ScoredPrefix::start(bos)],
            best_finished: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    forced: Vec<Vec<TokenId>>,
}

impl ConstraintSet {
    /// `forced[0]` is the input aspect; the rest are its similar aspects.
    /// Empty members and duplicates are dropped; `None` if nothing remains.
    pub fn new(forced: Vec<Vec<TokenId>>) -> Option<Self> {
        let mut out: Vec<Vec<TokenId>> = Vec::new();
        for f in forced {
            if !f.is_empty() && !out.contains(&f) {
                out.push(f);
            }
        }
        (!out.is_empty()).then_some(Self { forced: out })
    }

    /// Builds the set from the input aspect tokens and similar aspect strings
    /// (space-separated tokens).
    pub fn from_words<S: AsRef<str>>(vocab: &Vocabulary, aspect: &[S], similar: &[String]) -> Option<Self> {
        let mut forced = vec![vocab.encode(aspect)];
        for s in similar {
            let words: Vec<&str> = s.split(' ').filter(|w| !w.is_empty()).collect();
            forced.push(vocab.encode(&words));
        }
        Self::new(forced)
    }

    pub fn forced(&self) -> &[Vec<TokenId>] {
        &self.forced
    }

    /// True when some forced aspect occurs contiguously in `tokens`.
    pub fn is_satisfied(&self, tokens: &[TokenId]) -> bool {
        self.forced
            .iter()
            .any(|f| tokens.windows(f.len()).any(|w| w == f.as_slice()))
    }

    /// Tokens that extend a (possibly empty) partial match of an unmatched
    /// forced aspect at the end of `prefix`. Empty once any aspect matched.
    pub fn pending_tokens(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        if self.is_satisfied(prefix) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for f in &self.forced {
            for k in 0..f.len() {
                if k <= prefix.len() && prefix[prefix.len() - k..] == f[..k] && !out.contains(&f[k]) {
                    out.push(f[k]);
                }
            }
        }
        out
    }
}

/// The `z` most probable tokens (ties to the lower id) followed by any
/// pending forced tokens not already present.
pub fn candidate_words(dist: &[f64], z: usize, constraints: &ConstraintSet, prefix: &[TokenId]) -> Vec<TokenId> {
    let mut ranked: Vec<TokenId> = (0..dist.len()).collect();
    ranked.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    ranked.truncate(z);
    for t in constraints.pending_tokens(prefix) {
        if !ranked.contains(&t) {
            ranked.push(t);
        }
    }
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSelect {
    /// Keep a uniformly random subset of the candidates.
    #[default]
    Random,
    /// Keep the highest-scoring candidates.
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Stop once no live prefix can still beat the best finished sentence;
    /// prefixes scoring at or below it are pruned.
    #[default]
    Certified,
    /// Stop at the first step that produces any finished sentence.
    FirstHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub z: usize,
    pub beam_width: usize,
    pub max_steps: usize,
    pub select: BeamSelect,
    pub termination: Termination,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            z: 3,
            beam_width: 6,
            max_steps: 30,
            select: BeamSelect::Random,
            termination: Termination::Certified,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Finished(ScoredPrefix),
    Continue(Beam),
}

fn better(a: &ScoredPrefix, b: &ScoredPrefix) -> bool {
    a.logprob > b.logprob
}

/// One expansion step.
pub fn cbs_step<M, R>(
    beam: Beam,
    model: &M,
    condition: &Condition,
    constraints: &ConstraintSet,
    eos: TokenId,
    config: &DecodeConfig,
    rng: &mut R,
) -> StepOutcome
where
    M: ConditionalLM + ?Sized,
    R: Rng + ?Sized,
{
    let mut live = Vec::new();
    let mut best: Option<ScoredPrefix> = None;
    for g in &beam.prefixes {
        let dist = model.next_token_distribution(condition, &g.tokens);
        for w in candidate_words(&dist, config.z, constraints, &g.tokens) {
            if dist[w] <= 0.0 {
                continue;
            }
            let mut tokens = g.tokens.clone();
            tokens.push(w);
            let cand = ScoredPrefix {
                tokens,
                logprob: g.logprob + dist[w].ln(),
            };
            if w == eos {
                if constraints.is_satisfied(&cand.tokens) && best.as_ref().is_none_or(|b| better(&cand, b)) {
                    best = Some(cand);
                }
            } else {
                live.push(cand);
            }
        }
    }

    let incumbent = match config.termination {
        Termination::FirstHit => {
            if let Some(b) = best {
                return StepOutcome::Finished(b);
            }
            None
        }
        Termination::Certified => {
            let inc = match (beam.best_finished, best) {
                (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
                (a, b) => a.or(b),
            };
            if let Some(inc) = &inc {
                live.retain(|c| c.logprob > inc.logprob);
                if live.is_empty() {
                    return StepOutcome::Finished(inc.clone());
                }
            }
            inc
        }
    };

    if live.len() > config.beam_width {
        live = match config.select {
            BeamSelect::Random => {
                let mut keep = sample(rng, live.len(), config.beam_width).into_vec();
                keep.sort_unstable();
                keep.into_iter().map(|i| live[i].clone()).collect()
            }
            BeamSelect::Top => {
                live.sort_by(|a, b| b.logprob.partial_cmp(&a.logprob).unwrap_or(Ordering::Equal));
                live.truncate(config.beam_width);
                live
            }
        };
    }
    StepOutcome::Continue(Beam {
        prefixes: live,
        best_finished: incumbent,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    /// Highest-scoring prefix that contained a forced aspect, finished or not.
    pub best_prefix: Option<ScoredPrefix>,
    pub final_beam: Vec<ScoredPrefix>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generation {
    Finished(ScoredPrefix),
    Failed(FailureReport),
}

impl Generation {
    pub fn finished(&self) -> Option<&ScoredPrefix> {
        match self {
            Generation::Finished(s) => Some(s),
            Generation::Failed(_) => None,
        }
    }
}

/// Runs [`cbs_step`] from `<s>` for at most `config.max_steps` steps. Under
/// certified termination a finished sentence found within the step budget
/// is returned even if the search was not exhausted.
pub fn generate<M, R>(
    model: &M,
    condition: &Condition,
    constraints: &ConstraintSet,
    bos: TokenId,
    eos: TokenId,
    config: &DecodeConfig,
    rng: &mut R,
) -> Generation
where
    M: ConditionalLM + ?Sized,
    R: Rng + ?Sized,
{
    let mut beam = Beam::start(bos);
    let mut best_prefix: Option<ScoredPrefix> = None;
    let mut steps = 0;
    while steps < config.max_steps && !beam.prefixes.is_empty() {
        steps += 1;
        match cbs_step(beam, model, condition, constraints, eos, config, rng) {
            StepOutcome::Finished(s) => return Generation::Finished(s),
            StepOutcome::Continue(next) => beam = next,
        }
        let seen = beam
            .prefixes
            .iter()
            .chain(beam.best_finished.iter())
            .filter(|p| constraints.is_satisfied(&p.tokens));
        for p in seen {
            if best_prefix.as_ref().is_none_or(|b| better(p, b)) {
                best_prefix = Some(p.clone());
            }
        }
    }
    if let Some(f) = beam.best_finished.take() {
        return Generation::Finished(f);
    }
    Generation::Failed(FailureReport {
        best_prefix,
        final_beam: beam.prefixes,
        steps,
    })
}
