//! Dowker zigzag persistence for discrete-time dynamic graphs.
//!
//! The pipeline runs from a timestamped edge list to snapshots
//! ([`graph`]), ε-net landmarks ([`landmarks`]), Dowker or Vietoris–Rips
//! complexes ([`complex`]), union zigzags and their barcodes ([`zigzag`]),
//! persistence images ([`vectorize`]) and bottleneck distances
//! ([`metrics`]). The [`adaptor`] turns differences of consecutive images
//! into a positive learning-rate multiplier for a downstream model.

pub mod adaptor;
pub mod complex;
pub mod config;
pub mod diagram;
pub mod error;
pub mod gf2;
pub mod graph;
mod homology;
pub mod landmarks;
pub mod metrics;
pub mod pipeline;
pub mod time;
pub mod vectorize;
pub mod zigzag;

pub use complex::{build_dowker, build_vietoris_rips, SimplicialComplex};
pub use diagram::{Interval, PersistenceDiagram};
pub use error::{Error, Result};
pub use graph::{NodeId, Snapshot, TemporalGraph, WindowSequence};
pub use landmarks::{epsilon_net, seeded_epsilon_nets, LandmarkPartition};
pub use time::HalfTime;
pub use zigzag::{assemble_zigzag, betti_numbers, compute_zigzag_diagram, Backend, ZigzagFiltration};
