//! Normalized Levenshtein distances between word lists.

use serde::Serialize;

use crate::corpus::{DistanceMatrix, WordList, SWADESH_CONCEPTS};
use crate::error::{Error, Result};

/// Plain edit distance over Unicode scalar values, unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Length-normalized edit distance: lev / max(|a|,|b|), in [0,1].
/// Undefined (error) when both strings are empty.
pub fn ldn(a: &str, b: &str) -> Result<f64> {
    let la = a.chars().count();
    let lb = b.chars().count();
    let denom = la.max(lb);
    if denom == 0 {
        return Err(Error::UndefinedPair);
    }
    Ok(levenshtein(a, b) as f64 / denom as f64)
}

/// Per-pair aggregation detail.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseLdnBreakdown {
    pub shared_concepts: usize,
    pub sum_ldn: f64,
    pub distance: f64,
}

/// Aggregate LDN over a doculect pair. With complete 200-concept lists this
/// is the plain mean over 200; with gaps it averages over shared concepts.
pub fn doculect_distance(a: &WordList, b: &WordList) -> Result<PairwiseLdnBreakdown> {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for (concept, wa) in &a.entries {
        if let Some(wb) = b.entries.get(concept) {
            sum += ldn(wa, wb)?;
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(Error::IncomparablePair(a.doculect_id.clone(), b.doculect_id.clone()));
    }
    let full = usize::from(SWADESH_CONCEPTS);
    let denom = if a.entries.len() == full && b.entries.len() == full { full } else { shared };
    Ok(PairwiseLdnBreakdown { shared_concepts: shared, sum_ldn: sum, distance: sum / denom as f64 })
}

/// All-pairs distance matrix in word-list order.
pub fn build_matrix(lists: &[WordList]) -> Result<DistanceMatrix> {
    let n = lists.len();
    if n < 2 {
        return Err(Error::TooFew { need: 2, got: n });
    }
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = doculect_distance(&lists[i], &lists[j])?.distance;
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    DistanceMatrix::new(lists.iter().map(|l| l.doculect_id.clone()).collect(), values)
}

/// Mean distance of each doculect to all others, sorted descending;
/// ties broken by matrix (registry) order.
pub fn average_distances(m: &DistanceMatrix) -> Vec<(String, f64)> {
    let n = m.n();
    let mut rows: Vec<(usize, f64)> = (0..n)
        .map(|i| {
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j)).sum();
            (i, s / (n - 1) as f64)
        })
        .collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    rows.into_iter().map(|(i, d)| (m.labels()[i].clone(), d)).collect()
}

/// Distances from a single reference doculect (e.g. an outgroup) to every
/// other, ascending.
pub fn outgroup_compare(m: &DistanceMatrix, reference: &str) -> Result<Vec<(String, f64)>> {
    let r = m.index_of(reference)?;
    let mut rows: Vec<(usize, f64)> = (0..m.n()).filter(|&j| j != r).map(|j| (j, m.get(r, j))).collect();
    rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(rows.into_iter().map(|(j, d)| (m.labels()[j].clone(), d)).collect())
}
