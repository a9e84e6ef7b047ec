//! Greedy maximal ε-nets on hop distance, optionally seeded by the previous
//! snapshot's landmarks so that nets stay consistent along a window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Snapshot, WindowSequence};

/// Landmark/witness split of one snapshot's node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkPartition {
    pub snapshot_index: usize,
    pub landmarks: BTreeSet<NodeId>,
    pub witnesses: BTreeSet<NodeId>,
    pub eps: u32,
}

impl LandmarkPartition {
    /// Rows `snapshot,node,role` in ascending node order, no header.
    pub fn write_csv_rows(&self, out: &mut String) {
        let roles = self
            .landmarks
            .iter()
            .map(|&v| (v, "landmark"))
            .chain(self.witnesses.iter().map(|&v| (v, "witness")));
        let mut rows: Vec<(NodeId, &str)> = roles.collect();
        rows.sort_unstable();
        for (node, role) in rows {
            let _ = writeln!(out, "{},{},{}", self.snapshot_index, node, role);
        }
    }
}

/// Serializes partitions as `snapshot,node,role` CSV.
pub fn partitions_to_csv(parts: &[LandmarkPartition]) -> String {
    let mut out = String::from("snapshot,node,role\n");
    for p in parts {
        p.write_csv_rows(&mut out);
    }
    out
}

/// Parses `snapshot,node,role` CSV; `eps` is not stored in the file.
pub fn partitions_from_csv(text: &str, eps: u32) -> Result<Vec<LandmarkPartition>> {
    let mut by_snapshot: BTreeMap<usize, LandmarkPartition> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: i as u64 + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        let [snap, node, role] = fields.as_slice() else {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        };
        let snap: usize = snap.parse().map_err(|_| bad(format!("bad snapshot `{snap}`")))?;
        let node: NodeId = node.parse().map_err(|_| bad(format!("bad node `{node}`")))?;
        let part = by_snapshot.entry(snap).or_insert_with(|| LandmarkPartition {
            snapshot_index: snap,
            landmarks: BTreeSet::new(),
            witnesses: BTreeSet::new(),
            eps,
        });
        match *role {
            "landmark" => part.landmarks.insert(node),
            "witness" => part.witnesses.insert(node),
            other => return Err(bad(format!("unknown role `{other}`"))),
        };
    }
    Ok(by_snapshot.into_values().collect())
}

/// Greedy ε-net of one snapshot.
///
/// Nodes are ranked by ε-degree (number of other nodes within `eps` hops),
/// descending, ties broken by ascending id. If any `seeds` survive in the
/// snapshot, the top-ranked seed is taken first and the remaining seeds are
/// offered next; then every node is offered in rank order. A node is accepted
/// when it lies more than `eps` hops from every landmark chosen so far, so
/// unreachable components each contribute their own landmarks.
pub fn epsilon_net(s: &Snapshot, eps: u32, seeds: &[NodeId]) -> Result<LandmarkPartition> {
    if eps < 1 {
        return Err(Error::invalid("eps", "must be at least 1"));
    }
    if s.nodes().is_empty() {
        return Err(Error::EmptySnapshot(s.index()));
    }

    let balls: BTreeMap<NodeId, BTreeMap<NodeId, u32>> =
        s.nodes().iter().map(|&v| (v, s.ball(v, eps))).collect();
    let eps_degree = |v: NodeId| balls[&v].len() - 1;
    let rank = |nodes: &mut Vec<NodeId>| {
        nodes.sort_by_key(|&v| (std::cmp::Reverse(eps_degree(v)), v));
    };

    let mut sorted_nodes: Vec<NodeId> = s.nodes().iter().copied().collect();
    rank(&mut sorted_nodes);
    let mut sorted_seeds: Vec<NodeId> = seeds
        .iter()
        .copied()
        .filter(|v| s.nodes().contains(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    rank(&mut sorted_seeds);

    let mut landmarks: BTreeSet<NodeId> = BTreeSet::new();
    let separated =
        |v: NodeId, landmarks: &BTreeSet<NodeId>| !balls[&v].keys().any(|u| landmarks.contains(u));

    if let Some(&first) = sorted_seeds.first() {
        landmarks.insert(first);
    }
    for &v in sorted_seeds.iter().chain(&sorted_nodes) {
        if !landmarks.contains(&v) && separated(v, &landmarks) {
            landmarks.insert(v);
        }
    }

    let witnesses = s.nodes().difference(&landmarks).copied().collect();
    Ok(LandmarkPartition {
        snapshot_index: s.index(),
        landmarks,
        witnesses,
        eps,
    })
}

/// Runs [`epsilon_net`] along a window, seeding each snapshot with the
/// previous snapshot's landmarks. Seeds absent from a snapshot are dropped.
pub fn seeded_epsilon_nets(window: &WindowSequence, eps: u32) -> Result<Vec<LandmarkPartition>> {
    let mut out: Vec<LandmarkPartition> = Vec::with_capacity(window.len());
    for s in window.snapshots() {
        let seeds: Vec<NodeId> = out
            .last()
            .map(|prev| prev.landmarks.iter().copied().collect())
            .unwrap_or_default();
        out.push(epsilon_net(s, eps, &seeds)?);
    }
    Ok(out)
}
