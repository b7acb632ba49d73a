//! Tree building: separation-time transform, UPGMA, neighbor-joining,
//! midpoint rooting, and an ultrametricity check.

pub mod newick;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::DistanceMatrix;
use crate::error::{Error, Result};

/// Rooted tree stored as an arena. `root` has no parent and zero length.
#[derive(Debug, Clone)]
pub struct PhyloTree {
    pub nodes: Vec<Node>,
    pub root: usize,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Branch length to the parent (0 at the root).
    pub length: f64,
    /// Leaf label; internal nodes are unlabeled.
    pub label: Option<String>,
    /// Distance from this node down to any leaf (ultrametric trees only;
    /// 0 for trees built by other means).
    pub height: f64,
}

impl PhyloTree {
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty()).collect()
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaves()
            .into_iter()
            .filter_map(|i| self.nodes[i].label.clone())
            .collect()
    }

    /// Sorted labels of all leaves below `node` (including `node` itself
    /// if it is a leaf).
    pub fn clade(&self, node: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![node];
        while let Some(k) = stack.pop() {
            if self.nodes[k].children.is_empty() {
                if let Some(l) = &self.nodes[k].label {
                    out.insert(l.clone());
                }
            } else {
                stack.extend(&self.nodes[k].children);
            }
        }
        out
    }

    /// The two label sets split by the root.
    pub fn root_bipartition(&self) -> Vec<BTreeSet<String>> {
        self.nodes[self.root].children.iter().map(|&c| self.clade(c)).collect()
    }

    /// Sum of branch lengths from the root down to `node`.
    pub fn depth(&self, mut node: usize) -> f64 {
        let mut d = 0.0;
        while let Some(p) = self.nodes[node].parent {
            d += self.nodes[node].length;
            node = p;
        }
        d
    }

    /// Root-to-leaf distance of an ultrametric tree (root node height).
    pub fn root_height(&self) -> f64 {
        self.nodes[self.root].height
    }
}

/// Converts lexical distance to years before the survey date.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeScale {
    /// Replacement-rate constant (per year).
    pub rate: f64,
    pub survey_year: f64,
}

impl TimeScale {
    pub fn new(rate: f64, survey_year: f64) -> Result<TimeScale> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidTimeScale { rate, survey_year, root_year: f64::NAN });
        }
        Ok(TimeScale { rate, survey_year })
    }

    /// Calibrate the rate so that the UPGMA root of this matrix sits at
    /// `survey_year - root_year` years: rate = (unscaled root height) / span.
    pub fn calibrate(m: &DistanceMatrix, survey_year: f64, root_year: f64) -> Result<TimeScale> {
        let span = survey_year - root_year;
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::InvalidTimeScale { rate: f64::NAN, survey_year, root_year });
        }
        let unscaled = upgma(m, &TimeScale { rate: 1.0, survey_year })?;
        let h = unscaled.root_height();
        if h <= 0.0 {
            return Err(Error::DegenerateTree);
        }
        TimeScale::new(h / span, survey_year)
    }

    /// Separation time in years: t = -ln(1 - d) / rate. Saturates at d >= 1.
    pub fn separation_years(&self, d: f64) -> Result<f64> {
        if d >= 1.0 {
            return Err(Error::Saturated(d));
        }
        Ok(-(1.0 - d).ln() / self.rate)
    }

    pub fn year_of(&self, years_before_survey: f64) -> f64 {
        self.survey_year - years_before_survey
    }
}

/// UPGMA on separation times. Node height = merge distance / 2, so the
/// result is ultrametric and root height is the age of the deepest split.
///
/// Ties on the minimum are broken by the lexicographically smallest pair of
/// cluster leaf-label sets, so output is independent of input order.
pub fn upgma(m: &DistanceMatrix, scale: &TimeScale) -> Result<PhyloTree> {
    let n = m.n();
    if n < 2 {
        return Err(Error::TooFew { need: 2, got: n });
    }
    // Working distances in time units.
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dist[i][j] = scale.separation_years(m.get(i, j))?;
            }
        }
    }

    let mut nodes: Vec<Node> = m
        .labels()
        .iter()
        .map(|l| Node {
            parent: None,
            children: Vec::new(),
            length: 0.0,
            label: Some(l.clone()),
            height: 0.0,
        })
        .collect();

    // Active clusters: (node index, size, smallest leaf label, row index in dist).
    struct Cluster {
        node: usize,
        size: usize,
        min_label: String,
        row: usize,
    }
    let mut clusters: Vec<Cluster> = (0..n)
        .map(|i| Cluster { node: i, size: 1, min_label: m.labels()[i].clone(), row: i })
        .collect();
    // dist grows: new rows appended for merged clusters.
    let mut rows = dist;

    let pair_key = |x: &Cluster, y: &Cluster| -> (String, String) {
        let (a, b) = (x.min_label.clone(), y.min_label.clone());
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    };

    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let d = rows[clusters[a].row][clusters[b].row];
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => {
                        if d < bd {
                            true
                        } else if d > bd {
                            false
                        } else {
                            pair_key(&clusters[a], &clusters[b])
                                < pair_key(&clusters[ba], &clusters[bb])
                        }
                    }
                };
                if better {
                    best = Some((d, a, b));
                }
            }
        }
        let (dmin, a, b) = best.unwrap();

        let (ca, cb) = (clusters[a].node, clusters[b].node);
        let (sa, sb) = (clusters[a].size, clusters[b].size);
        let height = dmin / 2.0;
        let parent = nodes.len();
        nodes.push(Node {
            parent: None,
            children: vec![ca, cb],
            length: 0.0,
            label: None,
            height,
        });
        nodes[ca].parent = Some(parent);
        nodes[ca].length = height - nodes[ca].height;
        nodes[cb].parent = Some(parent);
        nodes[cb].length = height - nodes[cb].height;

        // Arithmetic-mean update weighted by cluster sizes.
        let new_row = rows.len();
        let total = (sa + sb) as f64;
        let mut extended: Vec<f64> = vec![0.0; new_row + 1];
        for c in &clusters {
            extended[c.row] =
                (sa as f64 * rows[clusters[a].row][c.row] + sb as f64 * rows[clusters[b].row][c.row]) / total;
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row.push(extended[r]);
        }
        rows.push(extended);

        let min_label = clusters[a].min_label.clone().min(clusters[b].min_label.clone());
        // Remove b first (higher index), then a.
        clusters.remove(b);
        clusters.remove(a);
        clusters.push(Cluster { node: parent, size: sa + sb, min_label, row: new_row });
    }

    let root = clusters[0].node;
    Ok(PhyloTree { nodes, root })
}

/// Unrooted binary tree from neighbor-joining, stored as an edge list.
#[derive(Debug, Clone)]
pub struct UnrootedTree {
    /// One entry per node; leaves carry labels.
    pub labels: Vec<Option<String>>,
    /// Undirected edges (u, v, length).
    pub edges: Vec<(usize, usize, f64)>,
}

/// Neighbor-joining with the standard Q criterion. Negative branch lengths
/// are clamped to zero with a warning.
pub fn neighbor_joining(m: &DistanceMatrix) -> Result<UnrootedTree> {
    let n = m.n();
    if n < 3 {
        return Err(Error::TooFew { need: 3, got: n });
    }
    let mut labels: Vec<Option<String>> = m.labels().iter().map(|l| Some(l.clone())).collect();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();

    // Active node ids and the current distance matrix over them.
    let mut active: Vec<usize> = (0..n).collect();
    let mut d: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();

    while active.len() > 3 {
        let r = active.len();
        let sums: Vec<f64> = (0..r).map(|i| d[i].iter().sum()).collect();
        // Minimize Q(i,j) = (r-2) d_ij - S_i - S_j; ties by smallest (i,j).
        let mut best = (f64::INFINITY, 0usize, 1usize);
        for i in 0..r {
            for j in (i + 1)..r {
                let q = (r as f64 - 2.0) * d[i][j] - sums[i] - sums[j];
                if q < best.0 {
                    best = (q, i, j);
                }
            }
        }
        let (_, i, j) = best;
        let dij = d[i][j];
        let li = 0.5 * dij + (sums[i] - sums[j]) / (2.0 * (r as f64 - 2.0));
        let lj = dij - li;
        let u = labels.len();
        labels.push(None);
        edges.push((active[i], u, clamp_branch(li)));
        edges.push((active[j], u, clamp_branch(lj)));

        // New distances to u.
        let du: Vec<f64> = (0..r)
            .filter(|&k| k != i && k != j)
            .map(|k| 0.5 * (d[i][k] + d[j][k] - dij))
            .collect();
        // Rebuild the reduced matrix with u appended.
        let keep: Vec<usize> = (0..r).filter(|&k| k != i && k != j).collect();
        let mut nd = vec![vec![0.0; keep.len() + 1]; keep.len() + 1];
        for (a, &ka) in keep.iter().enumerate() {
            for (b, &kb) in keep.iter().enumerate() {
                nd[a][b] = d[ka][kb];
            }
        }
        for (a, _) in keep.iter().enumerate() {
            nd[a][keep.len()] = du[a];
            nd[keep.len()][a] = du[a];
        }
        let mut na: Vec<usize> = keep.iter().map(|&k| active[k]).collect();
        na.push(u);
        active = na;
        d = nd;
    }

    // Final three nodes join at one internal vertex.
    let u = labels.len();
    labels.push(None);
    let l0 = 0.5 * (d[0][1] + d[0][2] - d[1][2]);
    let l1 = 0.5 * (d[0][1] + d[1][2] - d[0][2]);
    let l2 = 0.5 * (d[0][2] + d[1][2] - d[0][1]);
    edges.push((active[0], u, clamp_branch(l0)));
    edges.push((active[1], u, clamp_branch(l1)));
    edges.push((active[2], u, clamp_branch(l2)));

    Ok(UnrootedTree { labels, edges })
}

fn clamp_branch(l: f64) -> f64 {
    if l < 0.0 {
        log::warn!("clamping negative branch length {l} to 0");
        0.0
    } else {
        l
    }
}

impl UnrootedTree {
    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.labels.len()];
        for &(u, v, l) in &self.edges {
            adj[u].push((v, l));
            adj[v].push((u, l));
        }
        adj
    }

    /// Path (as node sequence) and its length between two nodes.
    fn path(&self, from: usize, to: usize) -> (Vec<usize>, f64) {
        let adj = self.adjacency();
        let mut prev = vec![usize::MAX; adj.len()];
        let mut dist = vec![f64::INFINITY; adj.len()];
        let mut stack = vec![from];
        dist[from] = 0.0;
        prev[from] = from;
        while let Some(u) = stack.pop() {
            for &(v, l) in &adj[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    dist[v] = dist[u] + l;
                    stack.push(v);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        (path, dist[to])
    }

    /// Root at the midpoint of the longest leaf-to-leaf path. The most
    /// distant pair is chosen deterministically (smallest label pair on ties).
    pub fn midpoint_root(&self) -> Result<PhyloTree> {
        let leaves: Vec<usize> = (0..self.labels.len()).filter(|&i| self.labels[i].is_some()).collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, &la) in leaves.iter().enumerate() {
            for &lb in &leaves[a + 1..] {
                let (_, d) = self.path(la, lb);
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        d > bd
                            || (d == bd
                                && (self.labels[la].clone(), self.labels[lb].clone())
                                    < (self.labels[bi].clone(), self.labels[bj].clone()))
                    }
                };
                if better {
                    best = Some((d, la, lb));
                }
            }
        }
        let (total, la, lb) = best.ok_or(Error::DegenerateTree)?;
        if total <= 0.0 {
            return Err(Error::DegenerateTree);
        }
        let (path, _) = self.path(la, lb);
        let half = total / 2.0;

        // Walk the path until the midpoint edge.
        let adj = self.adjacency();
        let edge_len = |u: usize, v: usize| -> f64 {
            adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, l)| l).unwrap()
        };
        let mut acc = 0.0;
        let mut k = 0;
        while acc + edge_len(path[k], path[k + 1]) < half && k + 2 < path.len() {
            acc += edge_len(path[k], path[k + 1]);
            k += 1;
        }
        let (u, v) = (path[k], path[k + 1]);
        let luv = edge_len(u, v);
        let off_u = half - acc; // distance from u along (u,v)

        // Build a rooted arena: new root splits edge (u,v).
        let mut nodes: Vec<Node> = self
            .labels
            .iter()
            .map(|l| Node { parent: None, children: Vec::new(), length: 0.0, label: l.clone(), height: 0.0 })
            .collect();
        let root = nodes.len();
        nodes.push(Node { parent: None, children: Vec::new(), length: 0.0, label: None, height: 0.0 });

        // Orient all edges away from the root by BFS over the split tree.
        let attach = |nodes: &mut Vec<Node>, parent: usize, child: usize, len: f64| {
            nodes[child].parent = Some(parent);
            nodes[child].length = len;
            nodes[parent].children.push(child);
        };
        attach(&mut nodes, root, u, off_u);
        attach(&mut nodes, root, v, luv - off_u);
        let mut queue = vec![u, v];
        while let Some(w) = queue.pop() {
            for &(x, l) in &adj[w] {
                if x != nodes[w].parent.unwrap() && !(w == u && x == v) && !(w == v && x == u) {
                    attach(&mut nodes, w, x, l);
                    queue.push(x);
                }
            }
        }
        Ok(PhyloTree { nodes, root })
    }
}

/// A triple of labels violating the ultrametric inequality.
#[derive(Debug, Clone, Serialize)]
pub struct UltrametricViolation {
    pub triple: [String; 3],
    /// Gap between the two largest pairwise distances.
    pub gap: f64,
}

/// Report every triple (i,j,k) whose two largest pairwise distances differ
/// by more than `tol`.
pub fn check_ultrametric(m: &DistanceMatrix, tol: f64) -> Vec<UltrametricViolation> {
    let n = m.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut ds = [m.get(i, j), m.get(i, k), m.get(j, k)];
                ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let gap = ds[2] - ds[1];
                if gap > tol {
                    out.push(UltrametricViolation {
                        triple: [
                            m.labels()[i].clone(),
                            m.labels()[j].clone(),
                            m.labels()[k].clone(),
                        ],
                        gap,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::matrix_from_cognacy;

    fn small_matrix() -> DistanceMatrix {
        // Perfectly ultrametric 4-taxon example (already in time-like units
        // after the log transform is approximately linear for small d).
        DistanceMatrix::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                vec![0.0, 0.10, 0.30, 0.30],
                vec![0.10, 0.0, 0.30, 0.30],
                vec![0.30, 0.30, 0.0, 0.20],
                vec![0.30, 0.30, 0.20, 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn upgma_topology_and_heights() {
        let m = small_matrix();
        let scale = TimeScale::new(1.0, 2010.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        let parts = t.root_bipartition();
        assert_eq!(parts.len(), 2);
        let ab: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert!(parts.contains(&ab));
        // Root height = separation_years(0.30)/2.
        let expect = -(1.0f64 - 0.30).ln() / 2.0;
        assert!((t.root_height() - expect).abs() < 1e-12);
    }

    #[test]
    fn upgma_is_ultrametric() {
        let m = crate::fixtures::reference_matrix();
        let scale = TimeScale::new(1.0, 2010.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        let h = t.root_height();
        for leaf in t.leaves() {
            assert!((t.depth(leaf) - h).abs() < 1e-9);
        }
    }

    #[test]
    fn calibration_sets_root_to_target() {
        let m = crate::fixtures::reference_matrix();
        let scale = TimeScale::calibrate(&m, 2010.0, 650.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        assert!((t.root_height() - 1360.0).abs() < 1e-6);
        assert!((scale.year_of(t.root_height()) - 650.0).abs() < 1e-6);
    }

    #[test]
    fn separation_time_saturates() {
        let scale = TimeScale::new(1.0, 2010.0).unwrap();
        assert!(matches!(scale.separation_years(1.0), Err(Error::Saturated(_))));
        assert_eq!(scale.separation_years(0.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_scale_rejected() {
        assert!(TimeScale::new(0.0, 2010.0).is_err());
        assert!(TimeScale::new(-1.0, 2010.0).is_err());
        let m = small_matrix();
        assert!(TimeScale::calibrate(&m, 650.0, 2010.0).is_err());
    }

    #[test]
    fn nj_recovers_quartet() {
        // Additive quartet: ((a:1,b:2):1,(c:3,d:4)) style distances.
        let m = DistanceMatrix::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                vec![0.0, 0.03, 0.08, 0.09],
                vec![0.03, 0.0, 0.09, 0.10],
                vec![0.08, 0.09, 0.0, 0.07],
                vec![0.09, 0.10, 0.07, 0.0],
            ],
        )
        .unwrap();
        let u = neighbor_joining(&m).unwrap();
        let t = u.midpoint_root().unwrap();
        // a+b must form a clade on one side.
        let parts = t.root_bipartition();
        let ab: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let cd: BTreeSet<String> = ["c", "d"].iter().map(|s| s.to_string()).collect();
        assert!(parts.contains(&ab) || parts.contains(&cd), "parts = {parts:?}");
    }

    #[test]
    fn nj_path_lengths_match_additive_input() {
        // Exact additive metric from a known tree.
        let m = DistanceMatrix::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
            vec![
                vec![0.00, 0.05, 0.09, 0.10, 0.08],
                vec![0.05, 0.00, 0.10, 0.11, 0.09],
                vec![0.09, 0.10, 0.00, 0.07, 0.05],
                vec![0.10, 0.11, 0.07, 0.00, 0.06],
                vec![0.08, 0.09, 0.05, 0.06, 0.00],
            ],
        )
        .unwrap();
        let u = neighbor_joining(&m).unwrap();
        for i in 0..5 {
            for j in (i + 1)..5 {
                let (_, d) = u.path(i, j);
                assert!((d - m.get(i, j)).abs() < 1e-9, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn midpoint_root_is_equidistant_from_extremes() {
        let m = crate::fixtures::reference_matrix();
        let u = neighbor_joining(&m).unwrap();
        let t = u.midpoint_root().unwrap();
        let depths: Vec<f64> = t.leaves().iter().map(|&l| t.depth(l)).collect();
        let max = depths.iter().cloned().fold(f64::MIN, f64::max);
        // Exactly two leaves at maximal depth within tolerance (the pair
        // defining the midpoint), each at half the tree diameter.
        let at_max = depths.iter().filter(|&&d| (d - max).abs() < 1e-9).count();
        assert!(at_max >= 2);
    }

    #[test]
    fn ultrametric_check_flags_cognacy_example() {
        let m = matrix_from_cognacy(
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                vec![100.0, 92.0, 86.0],
                vec![92.0, 100.0, 92.0],
                vec![86.0, 92.0, 100.0],
            ],
        )
        .unwrap();
        let v = check_ultrametric(&m, 0.01);
        assert_eq!(v.len(), 1);
        assert!((v[0].gap - 0.06).abs() < 1e-12);
        assert!(check_ultrametric(&m, 0.07).is_empty());
    }

    #[test]
    fn upgma_output_is_exactly_ultrametric() {
        let m = crate::fixtures::reference_matrix();
        let scale = TimeScale::new(2e-4, 2010.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        // Heights are monotone root-down.
        for (i, node) in t.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                assert!(t.nodes[p].height >= node.height - 1e-12, "node {i}");
                assert!(node.length >= -1e-12);
            }
        }
    }
}
