//! Union zigzags of graph complexes and their GF(2) barcodes.
//!
//! A window `G_1, ..., G_w` becomes the alternating sequence
//!
//! ```text
//! C(G_1) -> C(G_1 ∪ G_2) <- C(G_2) -> ... <- C(G_w)
//! ```
//!
//! with snapshot complexes at integer times and union complexes at the half
//! steps between them.
//!
//! The barcode is computed at the homology level. For every position we keep
//! a basis of `H_k` made of cycle representatives, each tagged with the
//! position where its bar started. Across an arrow the basis is pushed (or
//! pulled back) and bars end where the map has a kernel or a cokernel. Which
//! bar ends is decided by the ordering in [`priority`]: a basis element may
//! only absorb elements that come earlier in that order, which is exactly the
//! condition for the change of basis to be an automorphism of the prefix
//! module.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use crate::complex::{build_dowker, build_vietoris_rips, dowker_complex, SimplicialComplex};
use crate::diagram::{Interval, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::gf2::{self, BitVec};
use crate::graph::{union_graph, WindowSequence};
use crate::homology::{Homology, SimplexIndex};
use crate::landmarks::{seeded_epsilon_nets, LandmarkPartition};
use crate::time::HalfTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Dowker,
    VietorisRips,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrow {
    /// Snapshot complex into the following union.
    Forward,
    /// Snapshot complex into the preceding union.
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZigzagFiltration {
    complexes: Vec<SimplicialComplex>,
    max_dim: usize,
    partitions: Vec<LandmarkPartition>,
}

impl ZigzagFiltration {
    /// Wraps an explicit alternating sequence. Complexes are relabelled with
    /// their positions `1, 1.5, 2, ...` and every inclusion is checked.
    pub fn from_complexes(mut complexes: Vec<SimplicialComplex>, max_dim: usize) -> Result<Self> {
        if complexes.len().is_multiple_of(2) {
            return Err(Error::invalid(
                "complexes",
                format!("zigzag needs an odd number of complexes, got {}", complexes.len()),
            ));
        }
        for (p, c) in complexes.iter_mut().enumerate() {
            c.set_label(HalfTime::from_zigzag_index(p));
        }
        check_inclusions(&complexes)?;
        Ok(ZigzagFiltration {
            complexes,
            max_dim,
            partitions: Vec::new(),
        })
    }

    pub fn complexes(&self) -> &[SimplicialComplex] {
        &self.complexes
    }

    pub fn len(&self) -> usize {
        self.complexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.complexes.is_empty()
    }

    /// Number of snapshots `w`; the last complex sits at time `w`.
    pub fn window_length(&self) -> usize {
        self.complexes.len().div_ceil(2)
    }

    pub fn positions(&self) -> impl Iterator<Item = HalfTime> {
        (0..self.complexes.len()).map(HalfTime::from_zigzag_index)
    }

    /// `arrows()[p]` joins complexes `p` and `p + 1`.
    pub fn arrows(&self) -> Vec<Arrow> {
        (0..self.complexes.len().saturating_sub(1))
            .map(|p| if p % 2 == 0 { Arrow::Forward } else { Arrow::Backward })
            .collect()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Landmark partitions of the snapshots (Dowker backend only).
    pub fn partitions(&self) -> &[LandmarkPartition] {
        &self.partitions
    }
}

fn check_inclusions(complexes: &[SimplicialComplex]) -> Result<()> {
    for u in (1..complexes.len()).step_by(2) {
        for side in [u - 1, u + 1] {
            if let Some(s) = complexes[side].first_missing_from(&complexes[u]) {
                return Err(Error::SubcomplexViolation {
                    position: HalfTime::from_zigzag_index(u).to_string(),
                    detail: format!(
                        "simplex {:?} of the complex at {} is missing",
                        s,
                        HalfTime::from_zigzag_index(side)
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Builds the union zigzag of a window.
///
/// With the Dowker backend the snapshots get seeded ε-nets; a union complex
/// uses the union of both snapshots' landmarks and lets every node that
/// witnessed in either snapshot witness it, which makes both snapshot
/// complexes subcomplexes of it.
pub fn assemble_zigzag(
    window: &WindowSequence,
    backend: Backend,
    eps: u32,
    delta: u32,
    max_dim: usize,
) -> Result<ZigzagFiltration> {
    let snaps = window.snapshots();
    let mut complexes = Vec::with_capacity(2 * snaps.len() - 1);
    let mut partitions = Vec::new();
    match backend {
        Backend::Dowker => {
            partitions = seeded_epsilon_nets(window, eps)?;
            for (i, (s, p)) in snaps.iter().zip(&partitions).enumerate() {
                if i > 0 {
                    let prev = &partitions[i - 1];
                    let landmarks: BTreeSet<_> = prev.landmarks.union(&p.landmarks).copied().collect();
                    let witnesses: BTreeSet<_> = prev.witnesses.union(&p.witnesses).copied().collect();
                    complexes.push(dowker_complex(
                        &union_graph(&snaps[i - 1], s),
                        &landmarks,
                        &witnesses,
                        delta,
                        max_dim,
                        HalfTime::default(),
                    ));
                }
                complexes.push(build_dowker(p, s, delta, max_dim)?);
            }
        }
        Backend::VietorisRips => {
            for (i, s) in snaps.iter().enumerate() {
                if i > 0 {
                    complexes.push(build_vietoris_rips(&union_graph(&snaps[i - 1], s), delta, max_dim));
                }
                complexes.push(build_vietoris_rips(s, delta, max_dim));
            }
        }
    }
    let mut f = ZigzagFiltration::from_complexes(complexes, max_dim)?;
    f.partitions = partitions;
    Ok(f)
}

/// Sort key placing every class after all classes it may absorb.
///
/// Births at even positions come from backward arrows (or the start) and can
/// absorb later-born classes of the same kind only; births at odd positions
/// come from forward arrows and can absorb anything born earlier as well as
/// every backward-born class.
fn priority(birth: usize) -> (u8, Reverse<usize>, usize) {
    if birth.is_multiple_of(2) {
        (0, Reverse(birth), 0)
    } else {
        (1, Reverse(0), birth)
    }
}

struct Class {
    chain: BitVec,
    birth: usize,
}

fn violation(p: usize, what: &str) -> Error {
    Error::SubcomplexViolation {
        position: HalfTime::from_zigzag_index(p).to_string(),
        detail: what.to_owned(),
    }
}

/// Barcode of `H_0 .. H_max_hom_dim` of a zigzag over GF(2).
pub fn compute_zigzag_diagram(f: &ZigzagFiltration, max_hom_dim: usize) -> Result<PersistenceDiagram> {
    if max_hom_dim + 1 > f.max_dim {
        return Err(Error::invalid(
            "max_hom_dim",
            format!(
                "{max_hom_dim} needs simplices of dimension {}, complexes stop at {}",
                max_hom_dim + 1,
                f.max_dim
            ),
        ));
    }
    let index = SimplexIndex::new(&f.complexes, max_hom_dim + 1);
    let mut intervals = Vec::new();
    for k in 0..=max_hom_dim {
        barcode_in_dim(f, k, &index, &mut intervals)?;
    }
    Ok(PersistenceDiagram::new(intervals))
}

fn barcode_in_dim(
    f: &ZigzagFiltration,
    k: usize,
    index: &SimplexIndex,
    out: &mut Vec<Interval>,
) -> Result<()> {
    let at = HalfTime::from_zigzag_index;
    let first = Homology::of(&f.complexes[0], k, index);
    let mut boundaries = first.boundaries;
    let mut alive: Vec<Class> = first
        .reps
        .into_iter()
        .map(|chain| Class { chain, birth: 0 })
        .collect();

    for i in 0..f.complexes.len() - 1 {
        alive.sort_by_key(|c| priority(c.birth));
        let next = Homology::of(&f.complexes[i + 1], k, index);
        let mut survivors = Vec::with_capacity(alive.len());

        if i % 2 == 0 {
            // Forward: push every class into the union. A class whose image
            // reduces to zero against earlier images ends here.
            let mut images: BTreeMap<usize, BitVec> = BTreeMap::new();
            let absorb = |mut y: BitVec, images: &mut BTreeMap<usize, BitVec>| {
                while let Some(p) = y.highest() {
                    match images.get(&p) {
                        Some(row) => y.xor_assign(row),
                        None => {
                            images.insert(p, y);
                            return true;
                        }
                    }
                }
                false
            };
            for class in alive {
                let y = next
                    .reducer
                    .coords(&class.chain)
                    .ok_or_else(|| violation(i + 1, "cycle of the snapshot complex is not a cycle of the union"))?;
                if absorb(y, &mut images) {
                    survivors.push(class);
                } else {
                    out.push(Interval::closed(k, at(class.birth), at(i + 1)));
                }
            }
            for (j, rep) in next.reps.into_iter().enumerate() {
                if absorb(BitVec::unit(j), &mut images) {
                    survivors.push(Class {
                        chain: rep,
                        birth: i + 1,
                    });
                }
            }
        } else {
            // Backward: pull the union's classes back along the inclusion of
            // the next snapshot complex. Express its homology in the current
            // basis, reduce on the highest basis index, and the pivots are the
            // classes that continue, each with a lift into the snapshot.
            let mut current = boundaries.clone();
            for class in &alive {
                if !current.add_generator(&class.chain) {
                    return Err(violation(i, "live classes are not independent"));
                }
            }
            let mut pivots: BTreeMap<usize, (BitVec, BitVec)> = BTreeMap::new();
            let mut kernel = Vec::new();
            for rep in next.reps {
                let mut y = current
                    .coords(&rep)
                    .ok_or_else(|| violation(i, "cycle of the snapshot complex is not a cycle of the union"))?;
                let mut lift = rep;
                loop {
                    match y.highest() {
                        None => {
                            kernel.push(lift);
                            break;
                        }
                        Some(p) => match pivots.get(&p) {
                            Some((py, pl)) => {
                                y.xor_assign(py);
                                lift.xor_assign(pl);
                            }
                            None => {
                                pivots.insert(p, (y, lift));
                                break;
                            }
                        },
                    }
                }
            }
            for (idx, class) in alive.into_iter().enumerate() {
                match pivots.remove(&idx) {
                    Some((_, lift)) => survivors.push(Class {
                        chain: lift,
                        birth: class.birth,
                    }),
                    None => out.push(Interval::closed(k, at(class.birth), at(i + 1))),
                }
            }
            survivors.extend(kernel.into_iter().map(|chain| Class { chain, birth: i + 1 }));
        }

        boundaries = next.boundaries;
        alive = survivors;
    }

    let last = at(f.complexes.len() - 1);
    out.extend(alive.into_iter().map(|c| Interval::open(k, at(c.birth), last)));
    Ok(())
}

/// Betti numbers `β_0 .. β_max_hom_dim` from boundary ranks over GF(2).
pub fn betti_numbers(c: &SimplicialComplex, max_hom_dim: usize) -> Vec<usize> {
    let ids: Vec<BTreeMap<&[u32], usize>> = (0..=max_hom_dim + 1)
        .map(|d| c.simplices(d).enumerate().map(|(i, s)| (s.as_slice(), i)).collect())
        .collect();
    let boundary_rank = |d: usize| -> usize {
        if d == 0 {
            return 0;
        }
        gf2::rank(c.simplices(d).map(|s| {
            BitVec::from_indices((0..s.len()).map(|skip| {
                let face: Vec<u32> = s
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                ids[d - 1][face.as_slice()]
            }))
        }))
    };
    let ranks: Vec<usize> = (0..=max_hom_dim + 1).map(boundary_rank).collect();
    (0..=max_hom_dim)
        .map(|k| c.count(k) - ranks[k] - ranks[k + 1])
        .collect()
}
