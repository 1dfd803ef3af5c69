//! Dependency trees, syntax distances to an aspect span, and the weights
//! derived from them.

use std::collections::{HashSet, VecDeque};
use std::io::BufRead;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree has no tokens")]
    Empty,
    #[error("token {token}: head {head} out of range 0..={n}")]
    HeadOutOfRange { token: usize, head: usize, n: usize },
    #[error("token {0} is its own head")]
    SelfLoop(usize),
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("cycle through token {0}")]
    Cycle(usize),
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: bad token index {value:?}")]
    BadIndex { line: usize, value: String },
    #[error("line {line}: non-integer head {value:?}")]
    BadHead { line: usize, value: String },
    #[error("line {line}: token index {found} out of sequence (expected {expected})")]
    Sequence { line: usize, expected: usize, found: usize },
    #[error("sentence ending at line {line}: {source}")]
    Tree {
        line: usize,
        #[source]
        source: TreeError,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Head-index tree over `n` tokens. `heads[i]` is the 1-based head of token
/// `i + 1`, with 0 marking the root attachment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTree {
    heads: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

impl DependencyTree {
    pub fn from_heads(heads: Vec<usize>) -> Result<Self, TreeError> {
        let n = heads.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        for (i, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(TreeError::HeadOutOfRange {
                    token: i + 1,
                    head: h,
                    n,
                });
            }
            if h == i + 1 {
                return Err(TreeError::SelfLoop(i + 1));
            }
        }
        // Every token must reach the root by following heads.
        let mut state = vec![0u8; n]; // 0 unvisited, 1 on path, 2 reaches root
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            loop {
                match state[cur] {
                    2 => break,
                    1 => return Err(TreeError::Cycle(cur + 1)),
                    _ => {}
                }
                state[cur] = 1;
                path.push(cur);
                match heads[cur] {
                    0 => break,
                    h => cur = h - 1,
                }
            }
            for p in path {
                state[p] = 2;
            }
        }
        let roots = heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(TreeError::RootCount(roots));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, &h) in heads.iter().enumerate() {
            if h > 0 {
                adjacency[i].push(h - 1);
                adjacency[h - 1].push(i);
            }
        }
        Ok(Self { heads, adjacency })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    /// 0-based index of the root token.
    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).unwrap_or(0)
    }

    /// Undirected neighbours of 0-based token `i`.
    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }
}

/// One sentence block from a CoNLL-U file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConlluSentence {
    pub forms: Vec<String>,
    pub tree: DependencyTree,
}

/// Reads the word lines of a CoNLL-U stream. Multiword token ranges (`3-4`)
/// and empty nodes (`3.1`) are skipped, as are `#` comments.
pub fn import_conllu<R: BufRead>(reader: R) -> Result<Vec<ConlluSentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut forms = Vec::new();
    let mut heads = Vec::new();
    let mut last_line = 0;

    let mut flush = |forms: &mut Vec<String>, heads: &mut Vec<usize>, line: usize| -> Result<(), ConlluError> {
        if forms.is_empty() {
            return Ok(());
        }
        let tree =
            DependencyTree::from_heads(std::mem::take(heads)).map_err(|source| ConlluError::Tree { line, source })?;
        sentences.push(ConlluSentence {
            forms: std::mem::take(forms),
            tree,
        });
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut forms, &mut heads, line_no)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Columns {
                line: line_no,
                found: cols.len(),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0].parse().map_err(|_| ConlluError::BadIndex {
            line: line_no,
            value: cols[0].to_string(),
        })?;
        if index != forms.len() + 1 {
            return Err(ConlluError::Sequence {
                line: line_no,
                expected: forms.len() + 1,
                found: index,
            });
        }
        let head: usize = cols[6].parse().map_err(|_| ConlluError::BadHead {
            line: line_no,
            value: cols[6].to_string(),
        })?;
        forms.push(cols[1].to_string());
        heads.push(head);
    }
    flush(&mut forms, &mut heads, last_line)?;
    Ok(sentences)
}

/// Minimum undirected edge count from each token to any token of the
/// aspect span (0-based, half-open).
pub fn syntax_distances(tree: &DependencyTree, aspect: Range<usize>) -> Vec<usize> {
    let n = tree.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let span = aspect.start.min(n)..aspect.end.min(n);
    dist[span.clone()].fill(0);
    queue.extend(span);
    while let Some(u) = queue.pop_front() {
        for &v in tree.neighbours(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// `1 - softmax(d)`, computed with max subtraction.
///
/// A single-token input yields `[0.0]`: the softmax of a singleton is 1.
pub fn sdw_weights(distances: &[usize]) -> Vec<f64> {
    if distances.is_empty() {
        return Vec::new();
    }
    let max = *distances.iter().max().unwrap() as f64;
    let exps: Vec<f64> = distances.iter().map(|&d| (d as f64 - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| 1.0 - e / z).collect()
}

/// Up to `k` distinct lowercased words nearest to the aspect span, skipping
/// aspect words and anything in `exclude` (which must hold lowercased words).
/// Distance ties go to the earlier token position.
pub fn negative_word_set<S: AsRef<str>>(
    tree: &DependencyTree,
    aspect: Range<usize>,
    tokens: &[S],
    k: usize,
    exclude: &HashSet<String>,
) -> Vec<String> {
    let dist = syntax_distances(tree, aspect.clone());
    let aspect_words: HashSet<String> = tokens[aspect.clone()]
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .collect();
    let mut order: Vec<usize> = (0..tokens.len().min(dist.len()))
        .filter(|i| !aspect.contains(i))
        .collect();
    order.sort_by_key(|&i| (dist[i], i));

    let mut out: Vec<String> = Vec::new();
    for i in order {
        if out.len() >= k {
            break;
        }
        let word = tokens[i].as_ref().to_lowercase();
        if aspect_words.contains(&word) || exclude.contains(&word) || out.contains(&word) {
            continue;
        }
        out.push(word);
    }
    out
}
