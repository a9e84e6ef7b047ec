//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use dzp::complex::{Simplex, SimplicialComplex};
use dzp::graph::{NodeId, Snapshot, WindowSequence};
use dzp::zigzag::ZigzagFiltration;
use dzp::adaptor::AdaptorNetwork;
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_graph<R: Rng>(rng: &mut R, index: usize, n: u32, p: f64) -> Snapshot {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Snapshot::new(index, 0..n, edges)
}

/// Random spanning tree plus independent extra edges.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: u32, p: f64) -> Snapshot {
    let mut edges: Vec<(NodeId, NodeId)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Snapshot::new(1, 0..n, edges)
}

/// Consecutive random snapshots over a node pool of size `n`, each keeping a
/// random subset of nodes.
pub fn random_window<R: Rng>(rng: &mut R, len: usize, n: u32, p: f64) -> WindowSequence {
    let snaps = (1..=len)
        .map(|t| {
            let g = random_graph(rng, t, n, p);
            let keep: BTreeSet<NodeId> = (0..n).filter(|_| rng.gen_bool(0.85)).collect();
            let keep = if keep.is_empty() { BTreeSet::from([0]) } else { keep };
            let edges: Vec<_> = g
                .edges()
                .iter()
                .copied()
                .filter(|(u, v)| keep.contains(u) && keep.contains(v))
                .collect();
            Snapshot::new(t, keep, edges)
        })
        .collect();
    WindowSequence::new(snaps).unwrap()
}

pub fn bfs(s: &Snapshot, src: NodeId) -> HashMap<NodeId, u32> {
    let mut dist = HashMap::from([(src, 0)]);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &(a, b) in s.edges() {
            let w = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if !dist.contains_key(&w) {
                dist.insert(w, dist[&u] + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn all_pairs(s: &Snapshot) -> HashMap<NodeId, HashMap<NodeId, u32>> {
    s.nodes().iter().map(|&v| (v, bfs(s, v))).collect()
}

pub fn diameter(s: &Snapshot) -> u32 {
    all_pairs(s)
        .values()
        .flat_map(|row| row.values().copied())
        .max()
        .unwrap_or(0)
}

fn subsets(items: &[NodeId], max_len: usize) -> Vec<Vec<NodeId>> {
    let mut out = vec![Vec::new()];
    for &x in items {
        let extended: Vec<Vec<NodeId>> = out
            .iter()
            .filter(|s| s.len() < max_len)
            .map(|s| {
                let mut t = s.clone();
                t.push(x);
                t
            })
            .collect();
        out.extend(extended);
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Every landmark subset of size at most `max_dim + 1` that some witness
/// sees entirely within `delta` hops.
pub fn brute_dowker(
    s: &Snapshot,
    landmarks: &BTreeSet<NodeId>,
    witnesses: &BTreeSet<NodeId>,
    delta: u32,
    max_dim: usize,
) -> BTreeSet<Simplex> {
    let dist = all_pairs(s);
    let ls: Vec<NodeId> = landmarks.iter().copied().collect();
    subsets(&ls, max_dim + 1)
        .into_iter()
        .filter(|sigma| {
            witnesses
                .iter()
                .any(|w| sigma.iter().all(|l| dist[w].get(l).is_some_and(|&d| d <= delta)))
        })
        .collect()
}

pub fn simplex_set(c: &SimplicialComplex) -> BTreeSet<Simplex> {
    (0..=c.dim().unwrap_or(0))
        .flat_map(|d| c.simplices(d).cloned().collect::<Vec<_>>())
        .collect()
}

/// Rank over GF(2) of rows given as sets of column indices.
pub fn gf2_rank(rows: Vec<BTreeSet<usize>>) -> usize {
    let mut pivots: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for mut row in rows {
        while let Some(&p) = row.iter().next_back() {
            match pivots.get(&p) {
                Some(r) => {
                    row = row.symmetric_difference(r).copied().collect();
                }
                None => {
                    pivots.insert(p, row);
                    break;
                }
            }
        }
    }
    pivots.len()
}

fn boundary_rank(c: &SimplicialComplex, k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let faces: HashMap<&Simplex, usize> = c.simplices(k - 1).enumerate().map(|(i, s)| (s, i)).collect();
    gf2_rank(
        c.simplices(k)
            .map(|s| {
                (0..s.len())
                    .map(|skip| {
                        let f: Simplex = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                        faces[&f]
                    })
                    .collect()
            })
            .collect(),
    )
}

/// `n_k - rank ∂_k - rank ∂_{k+1}`.
pub fn betti_oracle(c: &SimplicialComplex, k: usize) -> usize {
    c.count(k) - boundary_rank(c, k) - boundary_rank(c, k + 1)
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Minimum over every partial matching of the largest cost.
pub fn brute_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    fn go(i: usize, a: &[(f64, f64)], b: &[(f64, f64)], used: &mut Vec<bool>, cur: f64, best: &mut f64) {
        if cur >= *best {
            return;
        }
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(p, _)| (p.1 - p.0) / 2.0)
                .fold(cur, f64::max);
            *best = best.min(rest);
            return;
        }
        go(i + 1, a, b, used, cur.max((a[i].1 - a[i].0) / 2.0), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, cur.max(linf(a[i], b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

// Rank-invariant barcode of a zigzag, computed with dense linear algebra
// over explicit homology bases and maps.

type Vector = Vec<bool>;

fn xor(a: &mut Vector, b: &Vector) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= *y;
    }
}

/// Row echelon basis with combination tracking.
fn reduce(vectors: &[Vector]) -> (Vec<(usize, Vector, Vector)>, Vec<Vector>) {
    let n = vectors.len();
    let mut basis: Vec<(usize, Vector, Vector)> = Vec::new();
    let mut kernel = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let mut v = v.clone();
        let mut combo = vec![false; n];
        combo[i] = true;
        for (p, bv, bc) in &basis {
            if v[*p] {
                xor(&mut v, bv);
                xor(&mut combo, bc);
            }
        }
        match v.iter().position(|&x| x) {
            Some(p) => {
                for (_, bv, bc) in basis.iter_mut() {
                    if bv[p] {
                        xor(bv, &v);
                        xor(bc, &combo);
                    }
                }
                basis.push((p, v, combo));
            }
            None => kernel.push(combo),
        }
    }
    (basis, kernel)
}

fn rank(vectors: &[Vector]) -> usize {
    reduce(vectors).0.len()
}

/// Solves `sum_j x_j columns[j] = target`, if possible.
fn solve(columns: &[Vector], target: &Vector) -> Option<Vector> {
    let (basis, _) = reduce(columns);
    let mut t = target.clone();
    let mut x = vec![false; columns.len()];
    for (p, bv, bc) in &basis {
        if t[*p] {
            xor(&mut t, bv);
            xor(&mut x, bc);
        }
    }
    t.iter().all(|&b| !b).then_some(x)
}

struct HomologyBasis {
    /// Boundary vectors spanning `B_k`.
    boundaries: Vec<Vector>,
    /// Cycles completing `B_k` to a basis of `Z_k`.
    reps: Vec<Vector>,
}

fn homology(c: &SimplicialComplex, k: usize, ids: &HashMap<Simplex, usize>, len: usize) -> HomologyBasis {
    let chain = |s: &Simplex| {
        let mut v = vec![false; len];
        v[ids[s]] = true;
        v
    };
    let boundary = |s: &Simplex| {
        let mut v = vec![false; len];
        if s.len() > 1 {
            for skip in 0..s.len() {
                let f: Simplex = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x).collect();
                v[ids[&f]] ^= true;
            }
        }
        v
    };
    let boundaries: Vec<Vector> = c
        .simplices(k + 1)
        .map(|s| {
            let mut v = vec![false; len];
            for skip in 0..s.len() {
                let f: Simplex = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x).collect();
                v[ids[&f]] ^= true;
            }
            v
        })
        .collect();
    let simplices: Vec<&Simplex> = c.simplices(k).collect();
    let images: Vec<Vector> = simplices
        .iter()
        .map(|s| if k == 0 { vec![false; 1] } else { boundary(s) })
        .collect();
    let cycles: Vec<Vector> = reduce(&images)
        .1
        .into_iter()
        .map(|combo| {
            let mut z = vec![false; len];
            for (i, &on) in combo.iter().enumerate() {
                if on {
                    xor(&mut z, &chain(simplices[i]));
                }
            }
            z
        })
        .collect();
    let mut reps = Vec::new();
    let mut span = boundaries.clone();
    let mut r = rank(&span);
    for z in cycles {
        span.push(z.clone());
        let nr = rank(&span);
        if nr > r {
            reps.push(z);
            r = nr;
        } else {
            span.pop();
        }
    }
    HomologyBasis { boundaries, reps }
}

/// Matrix of the inclusion-induced map on homology, as images of the source
/// generators in target generator coordinates.
fn induced(src: &HomologyBasis, dst: &HomologyBasis) -> Vec<Vector> {
    let columns: Vec<Vector> = dst.reps.iter().chain(&dst.boundaries).cloned().collect();
    src.reps
        .iter()
        .map(|z| {
            let x = solve(&columns, z).expect("inclusion maps cycles to cycles");
            x[..dst.reps.len()].to_vec()
        })
        .collect()
}

/// Rank of the map from the limit to the colimit of the module restricted
/// to positions `i..=j`.
fn rank_invariant(dims: &[usize], maps: &[(bool, Vec<Vector>)], i: usize, j: usize) -> usize {
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims[i..=j].iter().sum();
    let base = offsets[i];
    let slot = |p: usize, c: usize| offsets[p] - base + c;

    // Limit: tuples (v_i..v_j) compatible with every arrow.
    let mut constraints: Vec<Vector> = Vec::new();
    for p in i..j {
        let (forward, m) = &maps[p];
        let (src, dst) = if *forward { (p, p + 1) } else { (p + 1, p) };
        // For each coordinate r of dst: sum_c m[c][r] v_src[c] + v_dst[r] = 0.
        for r in 0..dims[dst] {
            let mut row = vec![false; total];
            for c in 0..dims[src] {
                if m[c][r] {
                    row[slot(src, c)] = true;
                }
            }
            row[slot(dst, r)] ^= true;
            constraints.push(row);
        }
    }
    // Kernel of the constraint matrix, via its transpose's columns.
    let columns: Vec<Vector> = (0..total)
        .map(|col| constraints.iter().map(|row| row[col]).collect())
        .collect();
    let limit: Vec<Vector> = if constraints.is_empty() {
        (0..total)
            .map(|c| {
                let mut v = vec![false; total];
                v[c] = true;
                v
            })
            .collect()
    } else {
        reduce(&columns).1
    };

    // Colimit: quotient of the direct sum by x_src ~ m(x_src).
    let mut relations: Vec<Vector> = Vec::new();
    for p in i..j {
        let (forward, m) = &maps[p];
        let (src, dst) = if *forward { (p, p + 1) } else { (p + 1, p) };
        for c in 0..dims[src] {
            let mut row = vec![false; total];
            row[slot(src, c)] = true;
            for r in 0..dims[dst] {
                if m[c][r] {
                    row[slot(dst, r)] ^= true;
                }
            }
            relations.push(row);
        }
    }
    let base_rank = rank(&relations);
    let mut with_image = relations;
    for v in &limit {
        let mut e = vec![false; total];
        for c in 0..dims[i] {
            e[slot(i, c)] = v[slot(i, c)];
        }
        with_image.push(e);
    }
    rank(&with_image) - base_rank
}

/// Barcode in dimension `k` as `(first_position, last_position)` pairs with
/// multiplicity, by Möbius inversion of the rank invariant.
pub fn oracle_barcode(f: &ZigzagFiltration, k: usize) -> BTreeMap<(usize, usize), usize> {
    let complexes = f.complexes();
    let mut ids: HashMap<Simplex, usize> = HashMap::new();
    for c in complexes {
        for d in 0..=k + 1 {
            for s in c.simplices(d) {
                let next = ids.len();
                ids.entry(s.clone()).or_insert(next);
            }
        }
    }
    let len = ids.len().max(1);
    let bases: Vec<HomologyBasis> = complexes.iter().map(|c| homology(c, k, &ids, len)).collect();
    let dims: Vec<usize> = bases.iter().map(|b| b.reps.len()).collect();
    let maps: Vec<(bool, Vec<Vector>)> = (0..complexes.len() - 1)
        .map(|p| {
            if p % 2 == 0 {
                (true, induced(&bases[p], &bases[p + 1]))
            } else {
                (false, induced(&bases[p + 1], &bases[p]))
            }
        })
        .collect();
    let n = complexes.len();
    let r = |i: isize, j: usize| -> isize {
        if i < 0 || j >= n || (i as usize) > j {
            0
        } else {
            rank_invariant(&dims, &maps, i as usize, j) as isize
        }
    };
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let m = r(i as isize, j) - r(i as isize - 1, j) - r(i as isize, j + 1) + r(i as isize - 1, j + 1);
            assert!(m >= 0, "negative multiplicity at [{i}, {j}]");
            if m > 0 {
                out.insert((i, j), m as usize);
            }
        }
    }
    out
}

/// The library's bars in the same `(first, last)` position form.
pub fn library_barcode(d: &dzp::PersistenceDiagram, k: usize) -> BTreeMap<(usize, usize), usize> {
    let mut out = BTreeMap::new();
    for i in d.in_dim(k) {
        let first = i.birth.doubled() as usize - 2;
        let last = i.death.doubled() as usize - 2 - usize::from(!i.open);
        *out.entry((first, last)).or_insert(0) += 1;
    }
    out
}

/// Network with every parameter random, read-out included.
pub fn random_net(channels: usize, seed: u64) -> AdaptorNetwork {
    let mut net = AdaptorNetwork::new(channels, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    for (_, values) in net.params.tensors_mut() {
        values.iter_mut().for_each(|v| *v = rng.gen_range(-0.8..0.8));
    }
    net
}

pub fn random_input(channels: usize, size: usize, seed: u64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array3::from_shape_fn((channels, size, size), |_| rng.gen_range(-1.0..1.0))
}

/// Compares every analytic parameter gradient with a central difference at
/// `h = 1e-4` (relative error below 1e-4). A central difference can straddle
/// a ReLU kink; there the one-sided differences disagree and the analytic
/// value must equal one of them. Returns the number of checks and of kinks.
pub fn check_gradients(seeds: std::ops::Range<u64>) -> Result<(usize, usize), String> {
    let h = 1e-4;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    let (mut checked, mut kinks) = (0, 0);
    for seed in seeds {
        let channels = [1, 2, 4][seed as usize % 3];
        let net = random_net(channels, seed);
        let x = random_input(channels, 5, seed + 100);
        let (_, grads) = net.gradients(&x, 1.0).unwrap();
        for (t, (name, _, values)) in grads.tensors().into_iter().enumerate() {
            for (i, &g) in values.iter().enumerate() {
                let shifted = |delta: f64| {
                    let mut n = net.clone();
                    n.params.tensors_mut()[t].1[i] += delta;
                    n.forward(&x).unwrap()
                };
                let (up, mid, down) = (shifted(h), shifted(0.0), shifted(-h));
                let central = (up - down) / (2.0 * h);
                checked += 1;
                if rel(g, central) < 1e-4 {
                    continue;
                }
                let (right, left) = ((up - mid) / h, (mid - down) / h);
                kinks += 1;
                if rel(right, left) <= 1e-3 || (rel(g, right) >= 1e-4 && rel(g, left) >= 1e-4) {
                    return Err(format!("seed {seed} {name}[{i}]: analytic {g} vs numeric {central}"));
                }
            }
        }
    }
    Ok((checked, kinks))
}
