//! Text-format word embedding tables and aspect-term similarity.
//!
//! Tables use the common one-record-per-line layout (`word v1 v2 ... vD`)
//! with no header. Multi-word aspects are represented by the mean of their
//! in-vocabulary token vectors.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding table is empty")]
    Empty,
    #[error("line {line}: invalid vector component {token:?}")]
    BadComponent { line: usize, token: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: record has no vector components")]
    MissingVector { line: usize },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { line: usize, word: String },
    #[error("cosine of zero-norm vector")]
    ZeroNorm,
    #[error("vectors differ in dimension ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("aspect {0:?} is not in the similarity matrix")]
    UnknownAspect(String),
    #[error("k = {k} is outside 1..={available}")]
    BadK { k: usize, available: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Word to vector map with a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory entries, checking dimension and finiteness.
    pub fn from_entries<I>(entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut map = HashMap::new();
        let mut dimension = None;
        for (idx, (word, vector)) in entries.into_iter().enumerate() {
            let line = idx + 1;
            if vector.is_empty() {
                return Err(EmbeddingError::MissingVector { line });
            }
            let expected = *dimension.get_or_insert(vector.len());
            if vector.len() != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    line,
                    expected,
                    found: vector.len(),
                });
            }
            if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
                return Err(EmbeddingError::BadComponent {
                    line,
                    token: bad.to_string(),
                });
            }
            if map.insert(word.clone(), vector).is_some() {
                return Err(EmbeddingError::DuplicateWord { line, word });
            }
        }
        match dimension {
            Some(dimension) => Ok(Self {
                dimension,
                entries: map,
            }),
            None => Err(EmbeddingError::Empty),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact lookup first, then the lowercased form.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries
            .get(word)
            .or_else(|| self.entries.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Mean of the in-vocabulary token vectors of `aspect`.
    pub fn aspect_vector<S: AsRef<str>>(&self, aspect: &[S]) -> AspectVector {
        let mut vector = vec![0.0; self.dimension];
        let mut found = 0usize;
        for token in aspect {
            if let Some(v) = self.get(token.as_ref()) {
                for (acc, x) in vector.iter_mut().zip(v) {
                    *acc += x;
                }
                found += 1;
            }
        }
        if found > 0 {
            let n = found as f64;
            vector.iter_mut().for_each(|x| *x /= n);
        }
        AspectVector {
            aspect: aspect.iter().map(|s| s.as_ref().to_string()).collect(),
            vector,
            oov_count: aspect.len() - found,
        }
    }
}

/// Reads a whitespace-separated embedding table. The dimension is fixed by
/// the first record; blank lines are ignored.
pub fn parse_embedding_table<R: BufRead>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut entries: HashMap<String, Vec<f64>> = HashMap::new();
    let mut dimension: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let vector = fields
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| EmbeddingError::BadComponent {
                        line: line_no,
                        token: tok.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vector.is_empty() {
            return Err(EmbeddingError::MissingVector { line: line_no });
        }
        let expected = *dimension.get_or_insert(vector.len());
        if vector.len() != expected {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected,
                found: vector.len(),
            });
        }
        if entries.contains_key(word) {
            return Err(EmbeddingError::DuplicateWord {
                line: line_no,
                word: word.to_string(),
            });
        }
        entries.insert(word.to_string(), vector);
    }
    match dimension {
        Some(dimension) => Ok(EmbeddingTable { dimension, entries }),
        None => Err(EmbeddingError::Empty),
    }
}

/// Averaged representation of a (possibly multi-word) aspect term.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectVector {
    pub aspect: Vec<String>,
    pub vector: Vec<f64>,
    pub oov_count: usize,
}

impl AspectVector {
    /// False when every token was missing from the table.
    pub fn is_valid(&self) -> bool {
        self.oov_count < self.aspect.len()
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Canonical key for an aspect term: lowercased tokens joined by a space.
pub fn aspect_key<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Above this many aspects rows are computed on demand instead of stored.
pub const DENSE_LIMIT: usize = 10_000;

/// Pairwise cosine similarities over the valid aspect set.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    aspects: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
    dense: Option<Vec<f64>>,
    excluded: Vec<String>,
}

impl SimilarityMatrix {
    /// Builds the matrix for the distinct aspects (by [`aspect_key`]) found in
    /// `aspects`. Aspects with no in-vocabulary token, or a zero vector, are
    /// left out and listed by [`SimilarityMatrix::excluded`].
    pub fn build<I, T>(table: &EmbeddingTable, aspects: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[String]>,
    {
        let mut seen = HashMap::new();
        let mut names = Vec::new();
        let mut vectors = Vec::new();
        let mut excluded = Vec::new();
        for tokens in aspects {
            let tokens = tokens.as_ref();
            let key = aspect_key(tokens);
            if seen.contains_key(&key) {
                continue;
            }
            seen.insert(key.clone(), ());
            let av = table.aspect_vector(tokens);
            if av.is_valid() && av.vector.iter().any(|x| *x != 0.0) {
                names.push(key);
                vectors.push(av.vector);
            } else {
                excluded.push(key);
            }
        }
        Self::from_vectors(names, vectors, excluded)
    }

    fn from_vectors(aspects: Vec<String>, vectors: Vec<Vec<f64>>, excluded: Vec<String>) -> Self {
        let n = aspects.len();
        let index = aspects.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let dense = (n <= DENSE_LIMIT).then(|| {
            let mut values = vec![0.0; n * n];
            for i in 0..n {
                values[i * n + i] = 1.0;
                for j in (i + 1)..n {
                    let c = cosine(&vectors[i], &vectors[j]).unwrap_or(0.0);
                    values[i * n + j] = c;
                    values[j * n + i] = c;
                }
            }
            values
        });
        Self {
            aspects,
            index,
            vectors,
            dense,
            excluded,
        }
    }

    pub fn aspects(&self) -> &[String] {
        &self.aspects
    }

    pub fn len(&self) -> usize {
        self.aspects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aspects.is_empty()
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    pub fn contains(&self, aspect: &str) -> bool {
        self.index.contains_key(&aspect.to_lowercase())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        match &self.dense {
            Some(values) => values[i * n + j],
            None if i == j => 1.0,
            None => cosine(&self.vectors[i], &self.vectors[j]).unwrap_or(0.0),
        }
    }

    /// Row `i` of C.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|j| self.get(i, j)).collect()
    }

    /// The `k` most similar aspects to `aspect`, descending by similarity with
    /// ties broken by ascending aspect string. The query itself is eligible.
    pub fn top_k_similar(&self, aspect: &str, k: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
        let key = aspect.to_lowercase();
        let &i = self
            .index
            .get(&key)
            .ok_or_else(|| EmbeddingError::UnknownAspect(key.clone()))?;
        if k == 0 || k > self.len() {
            return Err(EmbeddingError::BadK {
                k,
                available: self.len(),
            });
        }
        let mut ranked: Vec<(usize, f64)> = self.row(i).into_iter().enumerate().collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.aspects[a.0].cmp(&self.aspects[b.0]))
        });
        Ok(ranked
            .into_iter()
            .take(k)
            .map(|(j, c)| (self.aspects[j].clone(), c))
            .collect())
    }
}
