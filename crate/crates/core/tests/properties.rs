//! Randomized property suites. None of these touch the bundled dataset;
//! they exercise algorithmic contracts on generated inputs.

use std::collections::HashMap;

use proptest::prelude::*;

use glottokit_core::corpus::DistanceMatrix;
use glottokit_core::lexdist::{ldn, levenshtein};
use glottokit_core::phylo::{neighbor_joining, upgma, TimeScale};
use glottokit_core::sca::jacobi;

/// Textbook recursive definition with memoization — an independent oracle
/// for the iterative implementation.
fn lev_oracle(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]);
        let del = go(a, b, i - 1, j, memo) + 1;
        let ins = go(a, b, i, j - 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    go(a, b, a.len(), b.len(), memo)
}

fn word() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::char::range('a', 'e'), 0..=12)
        .prop_map(|cs| cs.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn levenshtein_matches_recursive_oracle(a in word(), b in word()) {
        let ca: Vec<char> = a.chars().collect();
        let cb: Vec<char> = b.chars().collect();
        let mut memo = HashMap::new();
        prop_assert_eq!(levenshtein(&a, &b), lev_oracle(&ca, &cb, &mut memo));
    }

    #[test]
    fn levenshtein_metric_axioms(a in word(), b in word(), c in word()) {
        let dab = levenshtein(&a, &b);
        let dba = levenshtein(&b, &a);
        prop_assert_eq!(dab, dba);
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert!((dab == 0) == (a == b));
        let dac = levenshtein(&a, &c);
        let dcb = levenshtein(&c, &b);
        prop_assert!(dab <= dac + dcb, "triangle: {} > {} + {}", dab, dac, dcb);
    }

    #[test]
    fn ldn_bounded_and_symmetric(a in word(), b in word()) {
        if !(a.is_empty() && b.is_empty()) {
            let d = ldn(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ldn(&b, &a).unwrap());
        }
    }
}

/// Random binary tree over `n` leaves with the given edge lengths; returns
/// leaf-to-leaf path distances.
fn random_additive_distances(n: usize, seed: u64) -> Vec<Vec<f64>> {
    // Simple LCG so the test has no extra dependencies.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    // Build by sequential leaf attachment: start with a 2-leaf tree, then
    // attach each new leaf to the middle of a random existing edge.
    // Nodes: adjacency with lengths.
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 2];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let len = |r: f64| 0.002 + 0.02 * r;
    let mut add_edge = |adj: &mut Vec<Vec<(usize, f64)>>, edges: &mut Vec<(usize, usize)>, u: usize, v: usize, l: f64| {
        adj[u].push((v, l));
        adj[v].push((u, l));
        edges.push((u, v));
    };
    let l0 = len(next());
    add_edge(&mut adj, &mut edges, 0, 1, l0);
    let mut leaves = vec![0usize, 1usize];
    while leaves.len() < n {
        let (u, v) = edges[(next() * edges.len() as f64) as usize % edges.len()];
        let l_uv = adj[u].iter().find(|&&(w, _)| w == v).unwrap().1;
        // Split (u,v) at an interior point and hang the new leaf there.
        let mid = adj.len();
        adj.push(Vec::new());
        let leaf = adj.len();
        adj.push(Vec::new());
        let frac = 0.25 + 0.5 * next();
        adj[u].retain(|&(w, _)| w != v);
        adj[v].retain(|&(w, _)| w != u);
        edges.retain(|&(a, b)| !(a == u && b == v || a == v && b == u));
        add_edge(&mut adj, &mut edges, u, mid, l_uv * frac);
        add_edge(&mut adj, &mut edges, mid, v, l_uv * (1.0 - frac));
        add_edge(&mut adj, &mut edges, mid, leaf, len(next()));
        leaves.push(leaf);
    }
    // All-pairs leaf distances by DFS from each leaf.
    let mut out = vec![vec![0.0; n]; n];
    for (a, &la) in leaves.iter().enumerate() {
        let mut dist = vec![f64::NAN; adj.len()];
        dist[la] = 0.0;
        let mut stack = vec![la];
        while let Some(x) = stack.pop() {
            for &(y, l) in &adj[x] {
                if dist[y].is_nan() {
                    dist[y] = dist[x] + l;
                    stack.push(y);
                }
            }
        }
        for (b, &lb) in leaves.iter().enumerate() {
            out[a][b] = dist[lb];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn nj_recovers_additive_trees(n in 4usize..=10, seed in any::<u64>()) {
        let d = random_additive_distances(n, seed);
        let labels: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let m = DistanceMatrix::new(labels, d.clone()).unwrap();
        let tree = neighbor_joining(&m).unwrap();
        // NJ is exact on additive inputs: every leaf-to-leaf path length
        // must equal the input distance.
        let rooted = tree.midpoint_root().unwrap();
        let mut leaf_of = std::collections::HashMap::new();
        for l in rooted.leaves() {
            leaf_of.insert(rooted.nodes[l].label.clone().unwrap(), l);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (leaf_of[&format!("t{i}")], leaf_of[&format!("t{j}")]);
                let got = path_length(&rooted, a, b);
                prop_assert!((got - d[i][j]).abs() < 1e-9,
                    "pair ({i},{j}): got {got}, want {}", d[i][j]);
            }
        }
    }
}

fn path_length(t: &glottokit_core::PhyloTree, a: usize, b: usize) -> f64 {
    // Climb to root collecting depth maps, then combine at the LCA.
    let mut da = HashMap::new();
    let mut x = a;
    let mut acc = 0.0;
    loop {
        da.insert(x, acc);
        match t.nodes[x].parent {
            Some(p) => {
                acc += t.nodes[x].length;
                x = p;
            }
            None => {
                da.insert(x, acc);
                break;
            }
        }
    }
    let mut y = b;
    let mut accb = 0.0;
    loop {
        if let Some(&d) = da.get(&y) {
            return accb + d;
        }
        accb += t.nodes[y].length;
        y = t.nodes[y].parent.expect("shared root");
    }
}

fn random_distance_matrix() -> impl Strategy<Value = DistanceMatrix> {
    (3usize..=12).prop_flat_map(|n| {
        proptest::collection::vec(0.01f64..0.9, n * (n - 1) / 2).prop_map(move |v| {
            let mut rows = vec![vec![0.0; n]; n];
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    rows[i][j] = v[k];
                    rows[j][i] = v[k];
                    k += 1;
                }
            }
            let labels = (0..n).map(|i| format!("d{i:02}")).collect();
            DistanceMatrix::new(labels, rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn upgma_output_is_ultrametric(m in random_distance_matrix()) {
        let scale = TimeScale::new(1.0, 2010.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        let h = t.root_height();
        for leaf in t.leaves() {
            prop_assert!((t.depth(leaf) - h).abs() < 1e-9);
        }
        // Branch lengths are non-negative.
        for node in &t.nodes {
            prop_assert!(node.length >= -1e-12);
        }
    }

    #[test]
    fn jacobi_residual_and_orthonormality(
        n in 2usize..=30,
        seed in any::<u64>(),
    ) {
        // Random symmetric matrix from a cheap deterministic generator.
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = next();
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let e = jacobi::eigh(&a).unwrap();
        for (k, vec) in e.vectors.iter().enumerate() {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i][j] * vec[j]).sum();
                prop_assert!((av - e.values[k] * vec[i]).abs() < 1e-9,
                    "residual at ({k},{i})");
            }
        }
        for p in 0..n {
            for q in 0..n {
                let dot: f64 = (0..n).map(|i| e.vectors[p][i] * e.vectors[q][i]).sum();
                let want = if p == q { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-9, "orthonormality at ({p},{q})");
            }
        }
    }

    #[test]
    fn diversity_invariant_under_homogeneous_scaling(
        m in random_distance_matrix(),
        c in 0.1f64..1.0,
        seed in any::<u64>(),
    ) {
        use glottokit_core::corpus::{GeoPoint, GeoTable};
        use glottokit_core::homeland::diversity;
        let n = m.n();
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let geo: GeoTable = m.labels().iter().map(|l| {
            (l.clone(), GeoPoint { lat: -25.0 + 12.0 * next(), lon: 43.0 + 7.0 * next() })
        }).collect();
        let base = match diversity(&m, &geo) {
            Ok(r) => r,
            // Degenerate geometry (e.g. colinear/duplicate points) is not
            // what this property is about.
            Err(_) => return Ok(()),
        };
        let scaled_rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| m.get(i, j) * c).collect())
            .collect();
        let ms = DistanceMatrix::new(m.labels().to_vec(), scaled_rows).unwrap();
        let scaled = diversity(&ms, &geo).unwrap();
        // Scores are unchanged, so the ranking can only differ on exact
        // ties (whose order float rounding may legitimately flip).
        for a in &base.entries {
            let b = scaled.get(&a.id).unwrap();
            prop_assert!((a.diversity - b.diversity).abs() < 1e-9);
            prop_assert!((a.normalized - b.normalized).abs() < 1e-9);
        }
        if base.entries[0].diversity - base.entries[1].diversity > 1e-9 {
            prop_assert_eq!(&base.entries[0].id, &scaled.entries[0].id);
        }
    }
}
