//! Chain-level homology over GF(2) for complexes that share one vertex set.
//!
//! Every complex of a zigzag is indexed against a common simplex numbering,
//! so an inclusion of complexes is the identity on chain vectors and a cycle
//! of one complex can be handed to a neighbor unchanged.

use std::collections::HashMap;

use crate::complex::{Simplex, SimplicialComplex};
use crate::gf2::BitVec;

/// Shared numbering of the simplices of several complexes, per dimension.
pub(crate) struct SimplexIndex {
    per_dim: Vec<HashMap<Simplex, usize>>,
}

impl SimplexIndex {
    pub fn new<'a>(complexes: impl IntoIterator<Item = &'a SimplicialComplex>, top_dim: usize) -> Self {
        let mut per_dim: Vec<HashMap<Simplex, usize>> = vec![HashMap::new(); top_dim + 1];
        for c in complexes {
            for (d, ids) in per_dim.iter_mut().enumerate() {
                for s in c.simplices(d) {
                    let next = ids.len();
                    ids.entry(s.clone()).or_insert(next);
                }
            }
        }
        SimplexIndex { per_dim }
    }

    fn id(&self, s: &[u32]) -> usize {
        self.per_dim[s.len() - 1][s]
    }

    /// Boundary of a simplex of dimension at least one, over the faces' ids.
    fn boundary(&self, s: &[u32]) -> BitVec {
        let mut face = Vec::with_capacity(s.len() - 1);
        BitVec::from_indices((0..s.len()).map(|skip| {
            face.clear();
            face.extend(s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
            self.id(&face)
        }))
    }
}

struct Row {
    chain: BitVec,
    coord: BitVec,
}

/// Echelon basis of `B_k` extended by chosen homology generators, each row
/// remembering its coordinates in the generator basis. Reducing a cycle
/// therefore yields its homology class.
#[derive(Clone)]
pub(crate) struct HomologyReducer {
    rows: HashMap<usize, std::rc::Rc<Row>>,
    generators: usize,
}

impl HomologyReducer {
    /// Boundaries of the `(k+1)`-simplices of `c`; no generators yet.
    pub fn boundaries(c: &SimplicialComplex, k: usize, index: &SimplexIndex) -> Self {
        let mut r = HomologyReducer {
            rows: HashMap::new(),
            generators: 0,
        };
        for s in c.simplices(k + 1) {
            r.insert(index.boundary(s), BitVec::new());
        }
        r
    }

    fn insert(&mut self, mut chain: BitVec, mut coord: BitVec) -> bool {
        while let Some(p) = chain.highest() {
            match self.rows.get(&p) {
                Some(row) => {
                    chain.xor_assign(&row.chain);
                    coord.xor_assign(&row.coord);
                }
                None => {
                    self.rows.insert(p, std::rc::Rc::new(Row { chain, coord }));
                    return true;
                }
            }
        }
        false
    }

    /// Adds `cycle` as the next generator unless it is homologous to a
    /// combination of the existing ones.
    pub fn add_generator(&mut self, cycle: &BitVec) -> bool {
        let added = self.insert(cycle.clone(), BitVec::unit(self.generators));
        if added {
            self.generators += 1;
        }
        added
    }

    /// Class of `cycle` in generator coordinates, or `None` if the chain is
    /// not a cycle of this complex spanned by boundaries and generators.
    pub fn coords(&self, cycle: &BitVec) -> Option<BitVec> {
        let mut chain = cycle.clone();
        let mut coord = BitVec::new();
        while let Some(p) = chain.highest() {
            let row = self.rows.get(&p)?;
            chain.xor_assign(&row.chain);
            coord.xor_assign(&row.coord);
        }
        Some(coord)
    }
}

/// Basis of the `k`-cycles of `c` by column reduction of `∂_k`.
fn cycle_basis(c: &SimplicialComplex, k: usize, index: &SimplexIndex) -> Vec<BitVec> {
    if k == 0 {
        return c.simplices(0).map(|s| BitVec::unit(index.id(s))).collect();
    }
    let mut pivots: HashMap<usize, (BitVec, BitVec)> = HashMap::new();
    let mut cycles = Vec::new();
    for s in c.simplices(k) {
        let mut col = index.boundary(s);
        let mut chain = BitVec::unit(index.id(s));
        loop {
            match col.highest() {
                None => {
                    cycles.push(chain);
                    break;
                }
                Some(p) => match pivots.get(&p) {
                    Some((pc, pv)) => {
                        col.xor_assign(pc);
                        chain.xor_assign(pv);
                    }
                    None => {
                        pivots.insert(p, (col, chain));
                        break;
                    }
                },
            }
        }
    }
    cycles
}

/// Homology basis of one complex in one dimension.
pub(crate) struct Homology {
    /// Cycle representatives, one per generator, in generator order.
    pub reps: Vec<BitVec>,
    pub reducer: HomologyReducer,
    /// Boundaries only, for rebuilding with a different generator basis.
    pub boundaries: HomologyReducer,
}

impl Homology {
    pub fn of(c: &SimplicialComplex, k: usize, index: &SimplexIndex) -> Self {
        let boundaries = HomologyReducer::boundaries(c, k, index);
        let mut reducer = boundaries.clone();
        let reps = cycle_basis(c, k, index)
            .into_iter()
            .filter(|z| reducer.add_generator(z))
            .collect();
        Homology {
            reps,
            reducer,
            boundaries,
        }
    }
}
