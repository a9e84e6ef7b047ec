//! Abstract simplicial complexes over node ids and the two graph complexes:
//! the Dowker complex of a landmark/witness split and the Vietoris–Rips
//! complex of the hop metric.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Snapshot};
use crate::landmarks::LandmarkPartition;
use crate::time::HalfTime;

/// Strictly increasing vertex tuple.
pub type Simplex = Vec<NodeId>;

/// Finite simplicial complex, simplices grouped by dimension.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimplicialComplex {
    by_dim: Vec<BTreeSet<Simplex>>,
    label: HalfTime,
}

impl SimplicialComplex {
    pub fn new(label: HalfTime) -> Self {
        SimplicialComplex {
            by_dim: Vec::new(),
            label,
        }
    }

    /// Closure of the given simplices. Vertex lists may be unsorted.
    pub fn from_simplices<I, S>(label: HalfTime, simplices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[NodeId]>,
    {
        let mut c = Self::new(label);
        for s in simplices {
            let s = s.as_ref();
            c.insert_closure(s, s.len().saturating_sub(1));
        }
        c
    }

    pub fn label(&self) -> HalfTime {
        self.label
    }

    pub fn set_label(&mut self, label: HalfTime) {
        self.label = label;
    }

    /// Highest dimension holding a simplex, `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.by_dim.iter().rposition(|s| !s.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.dim().is_none()
    }

    pub fn simplices(&self, dim: usize) -> impl Iterator<Item = &Simplex> + '_ {
        self.by_dim.get(dim).into_iter().flatten()
    }

    pub fn count(&self, dim: usize) -> usize {
        self.by_dim.get(dim).map_or(0, BTreeSet::len)
    }

    pub fn len(&self) -> usize {
        self.by_dim.iter().map(BTreeSet::len).sum()
    }

    pub fn contains(&self, simplex: &[NodeId]) -> bool {
        simplex
            .len()
            .checked_sub(1)
            .and_then(|d| self.by_dim.get(d))
            .is_some_and(|set| set.contains(simplex))
    }

    pub fn vertices(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.simplices(0).map(|s| s[0])
    }

    /// Inserts every subset of `vertices` with at most `max_dim + 1`
    /// elements.
    pub fn insert_closure(&mut self, vertices: &[NodeId], max_dim: usize) {
        let mut sorted = vertices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let top = (max_dim + 1).min(sorted.len());
        if self.by_dim.len() < top {
            self.by_dim.resize_with(top, BTreeSet::new);
        }
        let mut current = Vec::with_capacity(top);
        self.insert_subsets(&sorted, 0, top, &mut current);
    }

    fn insert_subsets(&mut self, pool: &[NodeId], start: usize, top: usize, current: &mut Simplex) {
        for i in start..pool.len() {
            current.push(pool[i]);
            self.by_dim[current.len() - 1].insert(current.clone());
            if current.len() < top {
                self.insert_subsets(pool, i + 1, top, current);
            }
            current.pop();
        }
    }

    pub fn is_subcomplex_of(&self, other: &SimplicialComplex) -> bool {
        self.by_dim
            .iter()
            .enumerate()
            .all(|(d, set)| set.iter().all(|s| other.by_dim.get(d).is_some_and(|o| o.contains(s))))
    }

    /// First simplex of `self` missing from `other`.
    pub fn first_missing_from(&self, other: &SimplicialComplex) -> Option<&Simplex> {
        self.by_dim
            .iter()
            .flatten()
            .find(|s| !other.contains(s))
    }

    /// Every codimension-one face of every simplex is present and tuples are
    /// strictly increasing.
    pub fn is_face_closed(&self) -> bool {
        self.by_dim.iter().enumerate().all(|(d, set)| {
            set.iter().all(|s| {
                s.len() == d + 1
                    && s.windows(2).all(|w| w[0] < w[1])
                    && (d == 0
                        || (0..s.len()).all(|skip| {
                            let face: Simplex = s
                                .iter()
                                .enumerate()
                                .filter(|&(i, _)| i != skip)
                                .map(|(_, &v)| v)
                                .collect();
                            self.by_dim[d - 1].contains(&face)
                        }))
            })
        })
    }

    /// `dim,v0,v1,...` rows ordered by dimension, then vertex tuple.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (d, set) in self.by_dim.iter().enumerate() {
            for s in set {
                let _ = write!(out, "{d}");
                for v in s {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_csv(text: &str, label: HalfTime) -> Result<Self> {
        let mut simplices = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i as u64 + 1,
                message,
            };
            let fields: Vec<u32> = line
                .split(',')
                .map(|f| f.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(e.to_string()))?;
            let (&dim, verts) = fields.split_first().ok_or_else(|| bad("empty row".into()))?;
            if verts.len() != dim as usize + 1 {
                return Err(bad(format!("dimension {dim} with {} vertices", verts.len())));
            }
            simplices.push(verts.to_vec());
        }
        Ok(Self::from_simplices(label, simplices))
    }
}

/// Dowker complex of an explicit landmark and witness set.
///
/// A landmark subset of size at most `max_dim + 1` is a simplex iff one
/// witness lies within `delta` hops of all of its members. Each witness
/// contributes the closure of its landmark ball, which makes the result face
/// closed by construction.
pub fn dowker_complex(
    s: &Snapshot,
    landmarks: &BTreeSet<NodeId>,
    witnesses: &BTreeSet<NodeId>,
    delta: u32,
    max_dim: usize,
    label: HalfTime,
) -> SimplicialComplex {
    let witnessed: BTreeSet<Vec<NodeId>> = witnesses
        .iter()
        .map(|&w| {
            s.ball(w, delta)
                .into_keys()
                .filter(|v| landmarks.contains(v))
                .collect::<Vec<_>>()
        })
        .filter(|set| !set.is_empty())
        .collect();
    let mut c = SimplicialComplex::new(label);
    for set in &witnessed {
        c.insert_closure(set, max_dim);
    }
    c
}

/// Dowker complex of a snapshot's ε-net partition.
pub fn build_dowker(
    p: &LandmarkPartition,
    s: &Snapshot,
    delta: u32,
    max_dim: usize,
) -> Result<SimplicialComplex> {
    if delta < 1 {
        return Err(Error::invalid("delta", "must be at least 1"));
    }
    Ok(dowker_complex(
        s,
        &p.landmarks,
        &p.witnesses,
        delta,
        max_dim,
        HalfTime::from_snapshot(p.snapshot_index),
    ))
}

/// Vietoris–Rips complex of the hop metric: cliques of the graph joining
/// nodes at distance at most `delta`, up to `max_dim + 1` vertices.
pub fn build_vietoris_rips(s: &Snapshot, delta: u32, max_dim: usize) -> SimplicialComplex {
    let label = HalfTime::from_snapshot(s.index());
    let mut c = SimplicialComplex::new(label);
    let top = max_dim + 1;
    c.by_dim.resize_with(top, BTreeSet::new);
    let forward: std::collections::BTreeMap<NodeId, BTreeSet<NodeId>> = s
        .nodes()
        .iter()
        .map(|&v| {
            let ball = s.ball(v, delta);
            (v, ball.into_keys().filter(|&u| u > v).collect())
        })
        .collect();

    fn extend(
        c: &mut SimplicialComplex,
        forward: &std::collections::BTreeMap<NodeId, BTreeSet<NodeId>>,
        clique: &mut Simplex,
        candidates: &BTreeSet<NodeId>,
        top: usize,
    ) {
        c.by_dim[clique.len() - 1].insert(clique.clone());
        if clique.len() == top {
            return;
        }
        for &u in candidates {
            let next: BTreeSet<NodeId> = candidates
                .range(u + 1..)
                .filter(|x| forward[&u].contains(x))
                .copied()
                .collect();
            clique.push(u);
            extend(c, forward, clique, &next, top);
            clique.pop();
        }
    }

    for (&v, nbrs) in &forward {
        extend(&mut c, &forward, &mut vec![v], nbrs, top);
    }
    while c.by_dim.last().is_some_and(BTreeSet::is_empty) {
        c.by_dim.pop();
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::epsilon_net;

    fn partition(l: &[NodeId], w: &[NodeId]) -> LandmarkPartition {
        LandmarkPartition {
            snapshot_index: 1,
            landmarks: l.iter().copied().collect(),
            witnesses: w.iter().copied().collect(),
            eps: 1,
        }
    }

    fn listing(c: &SimplicialComplex) -> Vec<Simplex> {
        (0..=c.dim().unwrap_or(0))
            .flat_map(|d| c.simplices(d).cloned().collect::<Vec<_>>())
            .collect()
    }

    #[test]
    fn dowker_edge_witnessed() {
        // L={1,2}, W={3}, both landmarks adjacent to 3.
        let s = Snapshot::from_edges(1, [(1, 3), (2, 3)]);
        let c = build_dowker(&partition(&[1, 2], &[3]), &s, 1, 1).unwrap();
        assert_eq!(listing(&c), vec![vec![1], vec![2], vec![1, 2]]);
    }

    #[test]
    fn dowker_unwitnessed_landmark() {
        // d(1,3)=1, d(2,3)=2.
        let s = Snapshot::from_edges(1, [(1, 3), (3, 4), (4, 2)]);
        let c = build_dowker(&partition(&[1, 2], &[3]), &s, 1, 1).unwrap();
        assert_eq!(listing(&c), vec![vec![1]]);
    }

    #[test]
    fn dowker_star_fills_triangle() {
        let s = Snapshot::from_edges(1, [(0, 1), (0, 2), (0, 3)]);
        let c = build_dowker(&partition(&[1, 2, 3], &[0]), &s, 1, 2).unwrap();
        assert_eq!(c.count(0), 3);
        assert_eq!(c.count(1), 3);
        assert_eq!(c.count(2), 1);
        assert!(c.contains(&[1, 2, 3]));
        assert!(c.is_face_closed());
        let truncated = build_dowker(&partition(&[1, 2, 3], &[0]), &s, 1, 1).unwrap();
        assert_eq!(truncated.dim(), Some(1));
    }

    #[test]
    fn dowker_rejects_zero_delta() {
        let s = Snapshot::from_edges(1, [(0, 1)]);
        assert!(build_dowker(&partition(&[0], &[1]), &s, 0, 1).is_err());
    }

    #[test]
    fn dowker_empty_landmarks() {
        let s = Snapshot::from_edges(1, [(0, 1)]);
        let c = build_dowker(&partition(&[], &[0, 1]), &s, 1, 2).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn dowker_from_epsilon_net_on_ring() {
        let ring = Snapshot::from_edges(1, (0..8).map(|i| (i, (i + 1) % 8)));
        let p = epsilon_net(&ring, 1, &[]).unwrap();
        assert_eq!(p.landmarks, BTreeSet::from([0, 2, 4, 6]));
        let c = build_dowker(&p, &ring, 1, 2).unwrap();
        assert_eq!((c.count(0), c.count(1), c.count(2)), (4, 4, 0));
    }

    #[test]
    fn vietoris_rips_path() {
        let s = Snapshot::from_edges(1, [(0, 1), (1, 2)]);
        let c1 = build_vietoris_rips(&s, 1, 2);
        assert_eq!(
            listing(&c1),
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![1, 2]]
        );
        let c2 = build_vietoris_rips(&s, 2, 2);
        assert!(c2.contains(&[0, 2]));
        assert!(c2.contains(&[0, 1, 2]));
        let c0 = build_vietoris_rips(&s, 0, 2);
        assert_eq!(listing(&c0), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn csv_round_trip_and_order() {
        let c = SimplicialComplex::from_simplices(HalfTime(3), [vec![4, 2, 3], vec![0, 1]]);
        let text = c.to_csv();
        assert_eq!(
            text,
            "0,0\n0,1\n0,2\n0,3\n0,4\n1,0,1\n1,2,3\n1,2,4\n1,3,4\n2,2,3,4\n"
        );
        assert_eq!(SimplicialComplex::from_csv(&text, HalfTime(3)).unwrap(), c);
        assert!(SimplicialComplex::from_csv("1,0\n", HalfTime(3)).is_err());
    }

    #[test]
    fn subcomplex_checks() {
        let small = SimplicialComplex::from_simplices(HalfTime(2), [vec![0, 1]]);
        let big = SimplicialComplex::from_simplices(HalfTime(3), [vec![0, 1, 2]]);
        assert!(small.is_subcomplex_of(&big));
        assert!(!big.is_subcomplex_of(&small));
        assert_eq!(big.first_missing_from(&small), Some(&vec![2]));
    }
}
