//! Structure-derived features used as model inputs.
//!
//! Everything here is computed from the dot-bracket structure and the BPP
//! matrix; no folding happens in this crate. Loop labels follow the
//! convention of the public data files: `E` marks an unpaired run touching a
//! molecule end, `X` an unpaired run between top-level stems. (Some
//! published legends swap these two names; the data files win here so real
//! `predicted_loop_type` strings validate.)

use crate::data::{BppMatrix, Construct};
use crate::{Error, Result};

/// Nested pair table for one structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairTable {
    partner: Vec<Option<usize>>,
}

impl PairTable {
    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    pub fn partner(&self, i: usize) -> Option<usize> {
        self.partner[i]
    }

    pub fn is_paired(&self, i: usize) -> bool {
        self.partner[i].is_some()
    }

    /// Pairs `(i, j)` with `i < j`, in order of the opening position.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.filter(|&j| i < j).map(|j| (i, j)))
            .collect()
    }
}

/// Parse a dot-bracket string into a nested pair table.
///
/// Only `(`, `)`, and `.` are accepted; pseudoknot brackets are rejected as
/// unsupported notation rather than silently dropped.
pub fn pair_table(structure: &str) -> Result<PairTable> {
    let n = structure.len();
    let mut partner = vec![None; n];
    let mut stack = Vec::new();
    for (i, ch) in structure.chars().enumerate() {
        match ch {
            '(' => stack.push(i),
            ')' => {
                let j = stack.pop().ok_or_else(|| {
                    Error::UnsupportedNotation(format!("unmatched ')' at position {i}"))
                })?;
                partner[j] = Some(i);
                partner[i] = Some(j);
            }
            '.' => {}
            '[' | ']' | '{' | '}' | '<' | '>' => {
                return Err(Error::UnsupportedNotation(format!(
                    "pseudoknot bracket '{ch}' at position {i}"
                )))
            }
            _ => {
                return Err(Error::UnsupportedNotation(format!(
                    "illegal character '{ch}' at position {i}"
                )))
            }
        }
    }
    if let Some(&j) = stack.last() {
        return Err(Error::UnsupportedNotation(format!(
            "unmatched '(' at position {j}"
        )));
    }
    Ok(PairTable { partner })
}

/// Label every position with its loop context: S H B I M E X.
///
/// Paired positions are `S`. Each maximal unpaired run takes a single label
/// from the loop that contains it: `H` inside a pair with no child helix,
/// `B`/`I` for the empty/non-empty gap pattern around a single child helix,
/// `M` inside a pair enclosing two or more child helices, and at top level
/// `E` when the run touches an end of the molecule, `X` otherwise.
pub fn annotate_loops(pt: &PairTable) -> String {
    let n = pt.len();
    let mut labels = vec!['S'; n];

    // Top level: runs between (and outside) top-level stems.
    let tops = child_pairs(pt, 0, n);
    let mut gaps = Vec::new();
    let mut cursor = 0usize;
    for &(a, b) in &tops {
        if cursor < a {
            gaps.push((cursor, a));
        }
        cursor = b + 1;
    }
    if cursor < n {
        gaps.push((cursor, n));
    }
    for (lo, hi) in gaps {
        let label = if lo == 0 || hi == n { 'E' } else { 'X' };
        for l in labels.iter_mut().take(hi).skip(lo) {
            *l = label;
        }
    }

    // Interior loops: classify the region enclosed by each pair.
    for (p, q) in pt.pairs() {
        let children = child_pairs(pt, p + 1, q);
        let label = match children.len() {
            0 => 'H',
            1 => {
                let (a, b) = children[0];
                let left = a - (p + 1);
                let right = q - (b + 1);
                if left > 0 && right > 0 {
                    'I'
                } else {
                    'B'
                }
            }
            _ => 'M',
        };
        let mut cursor = p + 1;
        let mut segs = Vec::new();
        for &(a, b) in &children {
            if cursor < a {
                segs.push((cursor, a));
            }
            cursor = b + 1;
        }
        if cursor < q {
            segs.push((cursor, q));
        }
        for (lo, hi) in segs {
            for l in labels.iter_mut().take(hi).skip(lo) {
                *l = label;
            }
        }
    }

    labels.into_iter().collect()
}

/// Direct child pairs inside the half-open region `[lo, hi)`.
fn child_pairs(pt: &PairTable, lo: usize, hi: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = lo;
    while i < hi {
        if let Some(j) = pt.partner(i) {
            out.push((i, j));
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Exact all-pairs shortest-path matrix on the structure graph.
///
/// Edges are the backbone `(i, i+1)` plus one edge per base pair. Computed
/// by breadth-first search from every node; the graph is connected, so every
/// entry is finite.
pub fn graph_distances(pt: &PairTable) -> Vec<Vec<u32>> {
    graph_distances_capped(pt, None)
}

/// [`graph_distances`] with distances clamped to `cap` when given.
pub fn graph_distances_capped(pt: &PairTable, cap: Option<u32>) -> Vec<Vec<u32>> {
    let n = pt.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(3); n];
    for i in 0..n.saturating_sub(1) {
        adj[i].push(i + 1);
        adj[i + 1].push(i);
    }
    for (i, j) in pt.pairs() {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut dist = vec![vec![0u32; n]; n];
    let mut queue = std::collections::VecDeque::with_capacity(n);
    for start in 0..n {
        let row = &mut dist[start];
        let mut seen = vec![false; n];
        seen[start] = true;
        queue.clear();
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(c) = cap {
            for d in row.iter_mut() {
                *d = (*d).min(c);
            }
        }
    }
    dist
}

/// For each position, the sequence-index distance to the nearest paired and
/// nearest unpaired position. When no such position exists the sentinel is
/// `n`, the sequence length.
pub fn nearest_pair_distances(pt: &PairTable) -> (Vec<usize>, Vec<usize>) {
    let n = pt.len();
    let to_paired = nearest_matching(n, |i| pt.is_paired(i));
    let to_unpaired = nearest_matching(n, |i| !pt.is_paired(i));
    (to_paired, to_unpaired)
}

fn nearest_matching(n: usize, pred: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut dist = vec![n; n];
    let mut last: Option<usize> = None;
    for i in 0..n {
        if pred(i) {
            last = Some(i);
        }
        if let Some(j) = last {
            dist[i] = i - j;
        }
    }
    last = None;
    for i in (0..n).rev() {
        if pred(i) {
            last = Some(i);
        }
        if let Some(j) = last {
            dist[i] = dist[i].min(j - i);
        }
    }
    dist
}

/// Per-row BPP summaries: `rowsum[i] = sum_j p[i][j]` and
/// `zeros[i]` = fraction of off-diagonal entries in row `i` below 1e-12.
pub fn bpp_summary(bpp: &BppMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = bpp.n();
    let mut rowsum = Vec::with_capacity(n);
    let mut zeros = Vec::with_capacity(n);
    for i in 0..n {
        let row = bpp.row(i);
        rowsum.push(row.iter().sum());
        if n < 2 {
            zeros.push(1.0);
        } else {
            let z = row
                .iter()
                .enumerate()
                .filter(|&(j, &v)| j != i && v < 1e-12)
                .count();
            zeros.push(z as f64 / (n - 1) as f64);
        }
    }
    (rowsum, zeros)
}

/// Inverse sequence-distance matrix: `1/|i-j|` off the diagonal, 0 on it.
pub fn inverse_distance_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i][j] = 1.0 / (i.abs_diff(j) as f64);
            }
        }
    }
    m
}

/// All structure features for one construct, bundled for emission.
#[derive(Debug, Clone)]
pub struct FeatureBundle {
    pub loop_string: String,
    pub dist_to_paired: Vec<usize>,
    pub dist_to_unpaired: Vec<usize>,
    pub graph_dist: Vec<Vec<u32>>,
    pub inv_dist: Vec<Vec<f64>>,
    pub bpp_rowsum: Vec<f64>,
    pub bpp_zeros: Vec<f64>,
}

/// Compute the full feature bundle from a construct and its BPP matrix.
pub fn feature_bundle(c: &Construct, bpp: &BppMatrix) -> Result<FeatureBundle> {
    if bpp.n() != c.seq_length {
        return Err(Error::Dimension(format!(
            "BPP is {}x{} but construct '{}' has length {}",
            bpp.n(),
            bpp.n(),
            c.id,
            c.seq_length
        )));
    }
    let pt = pair_table(&c.structure)?;
    let (dist_to_paired, dist_to_unpaired) = nearest_pair_distances(&pt);
    let (bpp_rowsum, bpp_zeros) = bpp_summary(bpp);
    Ok(FeatureBundle {
        loop_string: annotate_loops(&pt),
        dist_to_paired,
        dist_to_unpaired,
        graph_dist: graph_distances(&pt),
        inv_dist: inverse_distance_matrix(c.seq_length),
        bpp_rowsum,
        bpp_zeros,
    })
}

/// Reversal augmentation: reverse the molecule end for end.
///
/// The sequence, loop string, profiles, error arrays, and scored mask are
/// all reversed together; brackets swap orientation. The id gains a `_rev`
/// suffix and `seq_scored` is preserved (the scored window becomes a suffix
/// in index terms, tracked by the mask).
pub fn reverse_augment(c: &Construct) -> Construct {
    let structure: String = c
        .structure
        .chars()
        .rev()
        .map(|ch| match ch {
            '(' => ')',
            ')' => '(',
            other => other,
        })
        .collect();
    let rev_arrays = |m: &std::collections::BTreeMap<String, Vec<f64>>| {
        m.iter()
            .map(|(k, v)| (k.clone(), v.iter().rev().copied().collect()))
            .collect()
    };
    Construct {
        id: format!("{}_rev", c.id),
        sequence: c.sequence.chars().rev().collect(),
        structure,
        loop_string: c.loop_string.chars().rev().collect(),
        seq_length: c.seq_length,
        seq_scored: c.seq_scored,
        scored_mask: c.scored_mask.iter().rev().copied().collect(),
        profiles: rev_arrays(&c.profiles),
        profile_errors: rev_arrays(&c.profile_errors),
        signal_to_noise: c.signal_to_noise,
        sn_pass: c.sn_pass,
        synthetic: c.synthetic,
    }
}
