//! Labeled aspect instances, JSON-Lines I/O, and the explicit/implicit split.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::aspect_key;
use crate::syntax::{ConlluSentence, DependencyTree, TreeError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    Invalid {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("dependency alignment: {0}")]
    Alignment(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

    /// Class index used by the classifier output layer.
    pub fn index(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
            Polarity::Neutral => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        })
    }
}

/// One (sentence, aspect) record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectInstance {
    pub id: String,
    pub tokens: Vec<String>,
    pub aspect_from: usize,
    pub aspect_to: usize,
    pub polarity: Polarity,
    pub implicit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<Vec<usize>>,
}

impl AspectInstance {
    pub fn aspect_span(&self) -> Range<usize> {
        self.aspect_from..self.aspect_to
    }

    pub fn aspect_tokens(&self) -> &[String] {
        &self.tokens[self.aspect_span()]
    }

    /// Lowercased, space-joined aspect string.
    pub fn aspect_key(&self) -> String {
        aspect_key(self.aspect_tokens())
    }

    /// The dependency tree, when heads are attached. Heads are validated at
    /// load time so this only fails for hand-built instances.
    pub fn tree(&self) -> Option<Result<DependencyTree, TreeError>> {
        self.heads.as_ref().map(|h| DependencyTree::from_heads(h.clone()))
    }

    /// Checks the span and head invariants.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.id.is_empty() {
            return Err(("id", "must be non-empty".into()));
        }
        let m = self.tokens.len();
        if self.aspect_from >= self.aspect_to || self.aspect_to > m {
            let field = if self.aspect_to > m { "aspect_to" } else { "aspect_from" };
            return Err((
                field,
                format!(
                    "span [{}, {}) invalid for {} tokens",
                    self.aspect_from, self.aspect_to, m
                ),
            ));
        }
        if let Some(heads) = &self.heads {
            if heads.len() != m {
                return Err(("heads", format!("{} heads for {} tokens", heads.len(), m)));
            }
            DependencyTree::from_heads(heads.clone()).map_err(|e| ("heads", e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub name: String,
    pub instances: Vec<AspectInstance>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<AspectInstance>) -> Self {
        Self {
            name: name.into(),
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AspectInstance> {
        self.instances.iter()
    }

    /// Partitions by the `implicit` flag, keeping order: `(explicit, implicit)`.
    pub fn split_explicit(&self) -> (Dataset, Dataset) {
        let (implicit, explicit): (Vec<_>, Vec<_>) = self.instances.iter().cloned().partition(|i| i.implicit);
        (
            Dataset::new(format!("{}-explicit", self.name), explicit),
            Dataset::new(format!("{}-implicit", self.name), implicit),
        )
    }

    pub fn statistics(&self) -> Statistics {
        let mut s = Statistics::default();
        for inst in &self.instances {
            match inst.polarity {
                Polarity::Positive => s.positive += 1,
                Polarity::Negative => s.negative += 1,
                Polarity::Neutral => s.neutral += 1,
            }
            if inst.implicit {
                s.implicit += 1;
            }
        }
        s
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for inst in &self.instances {
            serde_json::to_writer(&mut out, inst)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Attaches heads from CoNLL-U sentences. The k-th distinct token sequence
    /// (in first-appearance order) pairs with the k-th CoNLL-U sentence.
    pub fn attach_heads(&mut self, sentences: &[ConlluSentence]) -> Result<(), CorpusError> {
        let mut order: HashMap<Vec<String>, usize> = HashMap::new();
        for inst in &self.instances {
            let next = order.len();
            order.entry(inst.tokens.clone()).or_insert(next);
        }
        if order.len() != sentences.len() {
            return Err(CorpusError::Alignment(format!(
                "{} distinct sentences in dataset but {} in CoNLL-U input",
                order.len(),
                sentences.len()
            )));
        }
        for inst in &mut self.instances {
            let sent = &sentences[order[&inst.tokens]];
            if sent.forms != inst.tokens {
                return Err(CorpusError::Alignment(format!(
                    "instance {:?}: tokens differ from CoNLL-U forms {:?}",
                    inst.id, sent.forms
                )));
            }
            inst.heads = Some(sent.tree.heads().to_vec());
        }
        Ok(())
    }
}

/// Per-instance polarity counts and the number of implicit instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Statistics {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
    pub implicit: usize,
}

impl Statistics {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral
    }
}

/// Reads and validates a JSON-Lines dataset. Blank lines are skipped.
pub fn load_dataset<R: BufRead>(reader: R, name: &str) -> Result<Dataset, CorpusError> {
    let mut instances = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: AspectInstance = serde_json::from_str(&line).map_err(|e| {
            // Unknown polarity strings surface as serde "unknown variant" errors.
            if e.is_data() && e.to_string().contains("unknown variant") {
                CorpusError::Invalid {
                    line: line_no,
                    field: "polarity",
                    message: e.to_string(),
                }
            } else {
                CorpusError::Json {
                    line: line_no,
                    message: e.to_string(),
                }
            }
        })?;
        inst.validate().map_err(|(field, message)| CorpusError::Invalid {
            line: line_no,
            field,
            message,
        })?;
        if !ids.insert(inst.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: inst.id,
            });
        }
        instances.push(inst);
    }
    Ok(Dataset::new(name, instances))
}
