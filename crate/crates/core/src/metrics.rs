//! Bottleneck distance between persistence diagrams.

use std::collections::VecDeque;

use crate::diagram::PersistenceDiagram;

fn points(d: &PersistenceDiagram, dim: usize) -> Vec<(f64, f64)> {
    d.in_dim(dim).map(|i| (i.birth_value(), i.death_value())).collect()
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// ℓ∞ distance from a point to the diagonal.
fn diagonal_cost(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Bottleneck distance between the `dim`-bars of two diagrams. Open bars are
/// compared through their recorded coordinates.
pub fn bottleneck_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: usize) -> f64 {
    bottleneck_points(&points(a, dim), &points(b, dim))
}

/// Per-dimension distances for `0..=max_dim` and their maximum.
pub fn bottleneck_by_dim(a: &PersistenceDiagram, b: &PersistenceDiagram, max_dim: usize) -> (Vec<f64>, f64) {
    let per_dim: Vec<f64> = (0..=max_dim).map(|k| bottleneck_distance(a, b, k)).collect();
    let max = per_dim.iter().copied().fold(0.0, f64::max);
    (per_dim, max)
}

/// Exact bottleneck distance between two finite point sets, each point
/// allowed to match the diagonal.
///
/// The optimum is one of the finitely many pairwise or diagonal costs, so
/// binary search over the sorted candidates with a perfect-matching test.
pub fn bottleneck_points(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut candidates: Vec<f64> = a
        .iter()
        .flat_map(|&p| b.iter().map(move |&q| linf(p, q)))
        .chain(a.iter().chain(b).map(|&p| diagonal_cost(p)))
        .chain(std::iter::once(0.0))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_within(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Whether the augmented bipartite graph has a perfect matching using only
/// edges of cost at most `t`. Left side: `a` then one diagonal copy per
/// point of `b`. Right side: `b` then one diagonal copy per point of `a`.
fn perfect_matching_within(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> bool {
    let (n, m) = (a.len(), b.len());
    let size = n + m;
    let adjacency: Vec<Vec<usize>> = (0..size)
        .map(|u| {
            if u < n {
                let mut e: Vec<usize> = (0..m).filter(|&j| linf(a[u], b[j]) <= t).collect();
                if diagonal_cost(a[u]) <= t {
                    e.push(m + u);
                }
                e
            } else {
                let j = u - n;
                let mut e = Vec::new();
                if diagonal_cost(b[j]) <= t {
                    e.push(j);
                }
                e.extend(m..m + n);
                e
            }
        })
        .collect();
    hopcroft_karp(&adjacency, size) == size
}

/// Maximum matching size of a bipartite graph given as left adjacency lists.
fn hopcroft_karp(adjacency: &[Vec<usize>], right: usize) -> usize {
    const NIL: usize = usize::MAX;
    let left = adjacency.len();
    let mut match_l = vec![NIL; left];
    let mut match_r = vec![NIL; right];
    let mut dist = vec![0usize; left];
    let mut matched = 0;

    loop {
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                match match_r[v] {
                    NIL => found = true,
                    w if dist[w] == usize::MAX => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            return matched;
        }

        fn augment(
            u: usize,
            adjacency: &[Vec<usize>],
            match_l: &mut [usize],
            match_r: &mut [usize],
            dist: &mut [usize],
        ) -> bool {
            for &v in &adjacency[u] {
                let w = match_r[v];
                if w == usize::MAX
                    || (dist[w] == dist[u] + 1 && augment(w, adjacency, match_l, match_r, dist))
                {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = usize::MAX;
            false
        }

        for u in 0..left {
            if match_l[u] == NIL && augment(u, adjacency, &mut match_l, &mut match_r, &mut dist) {
                matched += 1;
            }
        }
    }
}
