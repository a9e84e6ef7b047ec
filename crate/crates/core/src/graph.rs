//! Temporal edge streams, snapshots, windows and noise injection.
//!
//! Edges are ingested from a `src,dst,timestamp[,weight]` CSV, symmetrized,
//! and bucketed into snapshots. Every snapshot is a simple undirected graph;
//! the metric used downstream is the unweighted hop distance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub timestamp: u64,
    pub weight: f64,
}

/// How directed input rows are mapped onto the undirected topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectedPolicy {
    #[default]
    Symmetrize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGraph {
    edges: Vec<TemporalEdge>,
    labels: Vec<String>,
    dropped_self_loops: usize,
}

impl TemporalGraph {
    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    /// Original string label of every dense node id, indexed by id.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn from_reader<R: Read>(reader: R, _policy: DirectedPolicy) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);

        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::EmptyInput);
        }
        let names: Vec<&str> = headers.iter().collect();
        let has_weight = match names.as_slice() {
            ["src", "dst", "timestamp"] => false,
            ["src", "dst", "timestamp", "weight"] => true,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "expected header `src,dst,timestamp[,weight]`, found `{}`",
                        names.join(",")
                    ),
                })
            }
        };

        let mut ids: BTreeMap<String, NodeId> = BTreeMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut dropped = 0;
        let mut intern = |label: &str, labels: &mut Vec<String>| -> NodeId {
            *ids.entry(label.to_owned()).or_insert_with(|| {
                labels.push(label.to_owned());
                (labels.len() - 1) as NodeId
            })
        };

        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse { line, message };
            let expected = if has_weight { 4 } else { 3 };
            if record.len() != expected {
                return Err(bad(format!(
                    "expected {expected} fields, found {}",
                    record.len()
                )));
            }
            let (src, dst) = (&record[0], &record[1]);
            if src.is_empty() || dst.is_empty() {
                return Err(bad("empty node id".into()));
            }
            let timestamp: u64 = record[2]
                .parse()
                .map_err(|_| bad(format!("invalid timestamp `{}`", &record[2])))?;
            let weight = if has_weight {
                let w: f64 = record[3]
                    .parse()
                    .map_err(|_| bad(format!("invalid weight `{}`", &record[3])))?;
                if !w.is_finite() {
                    return Err(bad(format!("non-finite weight `{}`", &record[3])));
                }
                w
            } else {
                1.0
            };
            if src == dst {
                dropped += 1;
                continue;
            }
            let src = intern(src, &mut labels);
            let dst = intern(dst, &mut labels);
            edges.push(TemporalEdge {
                src,
                dst,
                timestamp,
                weight,
            });
        }

        if edges.is_empty() && dropped == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(TemporalGraph {
            edges,
            labels,
            dropped_self_loops: dropped,
        })
    }
}

/// Reads a temporal edge list from a CSV file.
pub fn ingest_edges(path: impl AsRef<Path>, policy: DirectedPolicy) -> Result<TemporalGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    TemporalGraph::from_reader(file, policy)
}

/// One graph of the discrete-time sequence. Always simple and undirected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    index: usize,
    nodes: BTreeSet<NodeId>,
    edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Snapshot {
    /// Builds a snapshot from a node set and an edge list. Edge endpoints are
    /// added to the node set; self-loops and duplicates are discarded.
    pub fn new(
        index: usize,
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Self {
        let mut nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        let edges: BTreeSet<(NodeId, NodeId)> = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(u, v) in &edges {
            nodes.insert(u);
            nodes.insert(v);
            adjacency.entry(u).or_default().push(v);
            adjacency.entry(v).or_default().push(u);
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        Snapshot {
            index,
            nodes,
            edges,
            adjacency,
        }
    }

    pub fn from_edges(index: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        Self::new(index, [], edges)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    /// Undirected edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn contains_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        self.adjacency.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.neighbors(v).len()
    }

    /// Breadth-first search from `source`, returning every node within
    /// `cutoff` hops together with its distance, in ascending node order.
    pub fn ball(&self, source: NodeId, cutoff: u32) -> BTreeMap<NodeId, u32> {
        let mut dist = BTreeMap::new();
        if !self.nodes.contains(&source) {
            return dist;
        }
        dist.insert(source, 0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du == cutoff {
                continue;
            }
            for &v in self.neighbors(u) {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Hop distances from a set of sources. Pairs beyond the cutoff or in
/// different components are absent, i.e. infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    cutoff: u32,
    rows: BTreeMap<NodeId, BTreeMap<NodeId, u32>>,
}

impl DistanceTable {
    /// `None` means infinite (unreachable or beyond the cutoff).
    pub fn distance(&self, source: NodeId, target: NodeId) -> Option<u32> {
        self.rows.get(&source)?.get(&target).copied()
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn row(&self, source: NodeId) -> Option<&BTreeMap<NodeId, u32>> {
        self.rows.get(&source)
    }
}

pub fn hop_distances(s: &Snapshot, sources: &BTreeSet<NodeId>, cutoff: u32) -> DistanceTable {
    let rows = sources
        .iter()
        .map(|&src| (src, s.ball(src, cutoff)))
        .collect();
    DistanceTable { cutoff, rows }
}

/// Node-wise and edge-wise union. The result keeps `a`'s index.
pub fn union_graph(a: &Snapshot, b: &Snapshot) -> Snapshot {
    Snapshot::new(
        a.index,
        a.nodes.iter().chain(&b.nodes).copied(),
        a.edges.iter().chain(&b.edges).copied(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    /// Fixed-width time buckets `[k*s, (k+1)*s)`.
    Seconds(u64),
    /// Equal-size chunks of the time-sorted edge list.
    Count(usize),
}

pub fn partition_snapshots(g: &TemporalGraph, granularity: Granularity) -> Result<Vec<Snapshot>> {
    let groups: Vec<Vec<&TemporalEdge>> = match granularity {
        Granularity::Seconds(0) => return Err(Error::invalid("granularity", "must be positive")),
        Granularity::Count(0) => return Err(Error::invalid("granularity", "must be positive")),
        Granularity::Seconds(width) => {
            let mut buckets: BTreeMap<u64, Vec<&TemporalEdge>> = BTreeMap::new();
            for e in &g.edges {
                buckets.entry(e.timestamp / width).or_default().push(e);
            }
            buckets.into_values().collect()
        }
        Granularity::Count(chunk) => {
            let mut sorted: Vec<&TemporalEdge> = g.edges.iter().collect();
            sorted.sort_by_key(|e| e.timestamp);
            sorted.chunks(chunk).map(<[_]>::to_vec).collect()
        }
    };
    let snapshots: Vec<Snapshot> = groups
        .into_iter()
        .filter(|group| !group.is_empty())
        .enumerate()
        .map(|(i, group)| Snapshot::from_edges(i + 1, group.iter().map(|e| (e.src, e.dst))))
        .collect();
    if snapshots.is_empty() {
        return Err(Error::NoSnapshots);
    }
    Ok(snapshots)
}

/// A run of consecutive snapshots ending at the anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSequence {
    snapshots: Vec<Snapshot>,
}

impl WindowSequence {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::invalid("window", "must contain at least one snapshot"));
        }
        if snapshots.windows(2).any(|p| p[1].index != p[0].index + 1) {
            return Err(Error::invalid("window", "snapshot indices must be consecutive"));
        }
        Ok(WindowSequence { snapshots })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Index of the last snapshot.
    pub fn anchor(&self) -> usize {
        self.snapshots.last().map_or(0, Snapshot::index)
    }

    pub fn first_index(&self) -> usize {
        self.snapshots[0].index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSpec {
    /// All history up to the anchor.
    Full,
    Length(usize),
}

/// One window per anchor `t = 1..=T`, covering snapshots
/// `max(1, t - w + 1)..=t`. Early anchors get shorter windows; with `Full`
/// every window starts at the first snapshot and the last one spans all `T`.
pub fn windows(snapshots: &[Snapshot], spec: WindowSpec) -> Result<Vec<WindowSequence>> {
    let w = match spec {
        WindowSpec::Full => usize::MAX,
        WindowSpec::Length(0) => return Err(Error::invalid("window", "must be at least 1")),
        WindowSpec::Length(w) => w,
    };
    (0..snapshots.len())
        .map(|end| {
            let start = (end + 1).saturating_sub(w);
            WindowSequence::new(snapshots[start..=end].to_vec())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Only test snapshots are perturbed.
    Evasion,
    /// Train and test snapshots are perturbed.
    Poisoning,
}

/// Train/test assignment of snapshot indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    train: BTreeSet<usize>,
    test: BTreeSet<usize>,
}

impl Split {
    pub fn new(train: BTreeSet<usize>, test: BTreeSet<usize>) -> Result<Self> {
        if !train.is_disjoint(&test) {
            return Err(Error::invalid("split", "train and test indices overlap"));
        }
        Ok(Split { train, test })
    }

    /// First `ceil(fraction * T)` snapshots train, the rest test.
    pub fn chronological(snapshots: &[Snapshot], train_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::invalid("train_fraction", "must lie in [0, 1]"));
        }
        let n_train = selection_size(train_fraction, snapshots.len());
        let (train, test) = snapshots.split_at(n_train);
        Split::new(
            train.iter().map(Snapshot::index).collect(),
            test.iter().map(Snapshot::index).collect(),
        )
    }

    pub fn train(&self) -> &BTreeSet<usize> {
        &self.train
    }

    pub fn test(&self) -> &BTreeSet<usize> {
        &self.test
    }
}

/// `ceil(fraction * n)`, tolerant of representation error such as
/// `0.3 * 10 = 3.0000000000000004`.
pub fn selection_size(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Selects `ceil(ratio * |V_t|)` nodes per affected snapshot and complements
/// the subgraph they induce: present edges among them are deleted and absent
/// ones added. Edges with an unselected endpoint are untouched.
pub fn inject_noise(
    snapshots: &[Snapshot],
    mode: NoiseMode,
    ratio: f64,
    split: &Split,
    seed: u64,
) -> Result<Vec<Snapshot>> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid("ratio", format!("{ratio} is outside [0, 1]")));
    }
    Ok(snapshots
        .iter()
        .map(|s| {
            let affected = match mode {
                NoiseMode::Evasion => split.test.contains(&s.index),
                NoiseMode::Poisoning => true,
            };
            if affected {
                flip_selected(s, ratio, seed)
            } else {
                s.clone()
            }
        })
        .collect())
}

fn flip_selected(s: &Snapshot, ratio: f64, seed: u64) -> Snapshot {
    let nodes: Vec<NodeId> = s.nodes.iter().copied().collect();
    let k = selection_size(ratio, nodes.len());
    if k < 2 {
        return s.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s.index as u64);
    let mut selected: Vec<NodeId> = sample(&mut rng, nodes.len(), k)
        .into_iter()
        .map(|i| nodes[i])
        .collect();
    selected.sort_unstable();

    let mut edges = s.edges.clone();
    for (i, &u) in selected.iter().enumerate() {
        for &v in &selected[i + 1..] {
            if !edges.remove(&(u, v)) {
                edges.insert((u, v));
            }
        }
    }
    Snapshot::new(s.index, s.nodes.iter().copied(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<TemporalGraph> {
        TemporalGraph::from_reader(text.as_bytes(), DirectedPolicy::Symmetrize)
    }

    fn path(n: NodeId) -> Snapshot {
        Snapshot::from_edges(1, (0..n - 1).map(|i| (i, i + 1)))
    }

    #[test]
    fn ingest_basic_rows() {
        let g = parse("src,dst,timestamp\na,b,0\nb,c,10\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.labels(), ["a", "b", "c"]);
        assert_eq!(g.edges()[0].weight, 1.0);
    }

    #[test]
    fn ingest_drops_self_loops() {
        let g = parse("src,dst,timestamp\na,a,5\na,b,1\n").unwrap();
        assert_eq!(g.dropped_self_loops(), 1);
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn ingest_reads_weights() {
        let g = parse("src,dst,timestamp,weight\nx,y,3,0.25\n").unwrap();
        assert_eq!(g.edges()[0].weight, 0.25);
    }

    #[test]
    fn duplicate_rows_collapse_in_snapshot() {
        let g = parse("src,dst,timestamp\na,b,0\na,b,0\n").unwrap();
        assert_eq!(g.edges().len(), 2);
        let snaps = partition_snapshots(&g, Granularity::Seconds(10)).unwrap();
        assert_eq!(snaps[0].edges().len(), 1);
    }

    #[test]
    fn malformed_row_names_line() {
        let err = parse("src,dst,timestamp\na,b,0\na,b,notanumber\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("src,dst,timestamp\na,b\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(parse(""), Err(Error::EmptyInput)));
        assert!(matches!(parse("src,dst,timestamp\n"), Err(Error::EmptyInput)));
        assert!(matches!(parse("a,b,c\n1,2,3\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn partition_by_seconds() {
        let g = parse("src,dst,timestamp\na,b,0\nb,c,10\n").unwrap();
        let snaps = partition_snapshots(&g, Granularity::Seconds(5)).unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[1].index(), 2);
        let one = partition_snapshots(&g, Granularity::Seconds(100)).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn partition_drops_empty_buckets_and_renumbers() {
        let g = parse("src,dst,timestamp\na,b,0\nb,c,50\n").unwrap();
        let snaps = partition_snapshots(&g, Granularity::Seconds(5)).unwrap();
        assert_eq!(snaps.iter().map(Snapshot::index).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(snaps[1].nodes().len(), 2);
    }

    #[test]
    fn partition_by_count() {
        let mut text = String::from("src,dst,timestamp\n");
        for i in 0..10 {
            text.push_str(&format!("n{i},m{i},{i}\n"));
        }
        let g = parse(&text).unwrap();
        let snaps = partition_snapshots(&g, Granularity::Count(4)).unwrap();
        let sizes: Vec<usize> = snaps.iter().map(|s| s.edges().len()).collect();
        assert_eq!(sizes, [4, 4, 2]);
        assert!(partition_snapshots(&g, Granularity::Count(0)).is_err());
    }

    #[test]
    fn union_examples() {
        let a = Snapshot::from_edges(1, [(0, 1)]);
        let b = Snapshot::from_edges(2, [(1, 2)]);
        let u = union_graph(&a, &b);
        assert_eq!(u.nodes().iter().copied().collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(u.edges().len(), 2);
        assert_eq!(u.index(), 1);
        assert_eq!(union_graph(&a, &a), a);

        let x = Snapshot::new(1, [9], []);
        let yz = Snapshot::from_edges(2, [(3, 4)]);
        let u = union_graph(&x, &yz);
        assert_eq!(u.nodes().len(), 3);
        assert_eq!(u.edges().iter().copied().collect::<Vec<_>>(), [(3, 4)]);
    }

    #[test]
    fn hop_distance_examples() {
        let s = path(3);
        let d = hop_distances(&s, &BTreeSet::from([0]), 10);
        assert_eq!(d.distance(0, 0), Some(0));
        assert_eq!(d.distance(0, 1), Some(1));
        assert_eq!(d.distance(0, 2), Some(2));
        let cut = hop_distances(&s, &BTreeSet::from([0]), 1);
        assert_eq!(cut.distance(0, 2), None);

        let disconnected = Snapshot::new(1, [0, 1], []);
        let d = hop_distances(&disconnected, &BTreeSet::from([0]), 5);
        assert_eq!(d.distance(0, 1), None);
    }

    #[test]
    fn noise_zero_ratio_is_identity() {
        let snaps = vec![path(5), path(4).with_index(2)];
        let split = Split::chronological(&snaps, 0.5).unwrap();
        let out = inject_noise(&snaps, NoiseMode::Poisoning, 0.0, &split, 3).unwrap();
        assert_eq!(out, snaps);
    }

    #[test]
    fn evasion_leaves_training_snapshots() {
        let snaps: Vec<Snapshot> = (1..=4)
            .map(|i| Snapshot::from_edges(i, [(0, 1), (1, 2), (2, 3), (3, 0)]))
            .collect();
        let split = Split::chronological(&snaps, 0.5).unwrap();
        let out = inject_noise(&snaps, NoiseMode::Evasion, 1.0, &split, 1).unwrap();
        assert_eq!(out[0], snaps[0]);
        assert_eq!(out[1], snaps[1]);
        assert_ne!(out[2], snaps[2]);
        assert_ne!(out[3], snaps[3]);
    }

    #[test]
    fn k3_full_ratio_deletes_triangle() {
        let k3 = Snapshot::from_edges(1, [(0, 1), (1, 2), (0, 2)]);
        let split = Split::new(BTreeSet::new(), BTreeSet::from([1])).unwrap();
        let out = inject_noise(&[k3], NoiseMode::Poisoning, 1.0, &split, 7).unwrap();
        // All three nodes selected, so the complete induced subgraph flips to empty.
        assert!(out[0].edges().is_empty());
        assert_eq!(out[0].nodes().len(), 3);
    }

    #[test]
    fn noise_ratio_out_of_range() {
        let split = Split::new(BTreeSet::new(), BTreeSet::new()).unwrap();
        assert!(inject_noise(&[path(3)], NoiseMode::Evasion, 1.5, &split, 0).is_err());
        assert!(inject_noise(&[path(3)], NoiseMode::Evasion, -0.1, &split, 0).is_err());
    }

    #[test]
    fn selection_size_rounds_up() {
        assert_eq!(selection_size(0.3, 10), 3);
        assert_eq!(selection_size(0.05, 8), 1);
        assert_eq!(selection_size(0.2, 8), 2);
        assert_eq!(selection_size(1.0, 8), 8);
        assert_eq!(selection_size(0.0, 8), 0);
    }

    #[test]
    fn window_specs() {
        let snaps: Vec<Snapshot> = (1..=4).map(|i| path(3).with_index(i)).collect();
        let full = windows(&snaps, WindowSpec::Full).unwrap();
        assert_eq!(full.len(), 4);
        assert_eq!(full[3].len(), 4);
        assert_eq!(full[3].anchor(), 4);
        let w2 = windows(&snaps, WindowSpec::Length(2)).unwrap();
        assert_eq!(w2.iter().map(WindowSequence::len).collect::<Vec<_>>(), [1, 2, 2, 2]);
        assert_eq!(w2[2].first_index(), 2);
        assert!(windows(&snaps, WindowSpec::Length(0)).is_err());
        assert!(WindowSequence::new(vec![path(3), path(3).with_index(3)]).is_err());
    }
}
