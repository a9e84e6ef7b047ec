//! End-to-end runs: edge list to diagrams, images, learning rates and an
//! output bundle on disk.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::Array3;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adaptor::{run_meta_training, AdaptorNetwork, MetaConfig, StepLog};
use crate::config::{BoundsChoice, InputSource, PipelineConfig, ZpiConfig, TOY_DATASET};
use crate::diagram::PersistenceDiagram;
use crate::error::{Error, Result};
use crate::graph::{
    inject_noise, partition_snapshots, windows, DirectedPolicy, NodeId, Snapshot, Split, TemporalGraph,
};
use crate::landmarks::partitions_to_csv;
use crate::vectorize::{default_theta, delta_zpi, render_diagram, stack, Bounds, BoundsSpec, PersistenceImage, SignedImage};
use crate::zigzag::{assemble_zigzag, compute_zigzag_diagram, ZigzagFiltration};

/// Everything computed for the window ending at one anchor.
#[derive(Debug, Clone)]
pub struct WindowResult {
    pub anchor: usize,
    pub filtration: ZigzagFiltration,
    pub diagram: PersistenceDiagram,
    /// One image per homology dimension.
    pub images: Vec<PersistenceImage>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub snapshots: Vec<Snapshot>,
    pub windows: Vec<WindowResult>,
    /// `deltas[i]` holds the per-dimension differences between the windows
    /// at anchors `i + 2` and `i + 1`.
    pub deltas: Vec<Vec<SignedImage>>,
    pub lr_log: Vec<StepLog>,
    pub adaptor: AdaptorNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub input_sha256: String,
    pub snapshots: usize,
    pub files: BTreeMap<String, String>,
}

fn read_input(cfg: &PipelineConfig) -> Result<Vec<u8>> {
    match &cfg.input {
        InputSource::Toy => Ok(TOY_DATASET.as_bytes().to_vec()),
        InputSource::File(p) => std::fs::read(p).map_err(|e| Error::io(p, e)),
    }
}

fn snapshots_from(bytes: &[u8], cfg: &PipelineConfig) -> Result<Vec<Snapshot>> {
    let g = TemporalGraph::from_reader(bytes, DirectedPolicy::Symmetrize)?;
    let snapshots = partition_snapshots(&g, cfg.granularity)?;
    match &cfg.noise {
        None => Ok(snapshots),
        Some(n) => {
            let split = Split::chronological(&snapshots, n.train_fraction)?;
            inject_noise(&snapshots, n.mode, n.ratio, &split, n.seed)
        }
    }
}

/// Ingests, partitions and (if configured) perturbs the input.
pub fn load_snapshots(cfg: &PipelineConfig) -> Result<Vec<Snapshot>> {
    snapshots_from(&read_input(cfg)?, cfg)
}

/// Image bounds and bandwidth for one set of points under `zpi`, in a run
/// of `t_total` snapshots.
pub fn zpi_parameters(zpi: &ZpiConfig, t_total: usize, points: &[(f64, f64)]) -> (BoundsSpec, f64) {
    let spec = match zpi.bounds {
        BoundsChoice::Auto => BoundsSpec::Auto,
        BoundsChoice::Explicit(b) => BoundsSpec::Explicit(b),
        BoundsChoice::Span => BoundsSpec::Explicit(Bounds {
            x_min: 0.5,
            x_max: t_total as f64 + 0.5,
            y_min: 0.0,
            y_max: t_total as f64,
        }),
    };
    let theta = zpi.theta.unwrap_or_else(|| default_theta(points, &spec));
    (spec, theta)
}

/// Images of dimensions `0..=max_hom_dim` of a diagram.
pub fn render_channels(
    d: &PersistenceDiagram,
    zpi: &ZpiConfig,
    max_hom_dim: usize,
    t_total: usize,
) -> Result<Vec<PersistenceImage>> {
    (0..=max_hom_dim)
        .map(|k| {
            let points = crate::vectorize::transform_diagram(d, k);
            let (spec, theta) = zpi_parameters(zpi, t_total, &points);
            render_diagram(d, k, zpi.size, theta, spec)
        })
        .collect()
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("DZP_THREADS") {
        Err(_) => 0,
        Ok(v) => v.trim().parse::<usize>().map_err(|_| Error::Config {
            key: "DZP_THREADS".into(),
            message: format!("{v:?} is not a thread count"),
        })?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config {
            key: "DZP_THREADS".into(),
            message: e.to_string(),
        })
}

fn analyze_window(window: &crate::graph::WindowSequence, cfg: &PipelineConfig, t_total: usize) -> Result<WindowResult> {
    let anchor = window.anchor();
    let filtration = assemble_zigzag(window, cfg.backend, cfg.eps, cfg.delta, cfg.max_hom_dim + 1)
        .map_err(|e| e.at_stage("complexes", anchor))?;
    let diagram = compute_zigzag_diagram(&filtration, cfg.max_hom_dim).map_err(|e| e.at_stage("zigzag", anchor))?;
    let images = render_channels(&diagram, &cfg.zpi, cfg.max_hom_dim, t_total).map_err(|e| e.at_stage("zpi", anchor))?;
    Ok(WindowResult {
        anchor,
        filtration,
        diagram,
        images,
    })
}

/// Diagrams and images for every window anchor, computed on a pool bounded
/// by `DZP_THREADS`.
pub fn analyze_windows(snapshots: &[Snapshot], cfg: &PipelineConfig) -> Result<Vec<WindowResult>> {
    let seqs = windows(snapshots, cfg.window)?;
    let t_total = snapshots.len();
    thread_pool()?.install(|| seqs.par_iter().map(|w| analyze_window(w, cfg, t_total)).collect())
}

/// Landmarks of each snapshot as chosen inside the window it anchors.
fn anchor_landmarks(results: &[WindowResult]) -> Vec<BTreeSet<NodeId>> {
    results
        .iter()
        .map(|r| {
            r.filtration
                .partitions()
                .last()
                .map(|p| p.landmarks.clone())
                .unwrap_or_default()
        })
        .collect()
}

/// Full computation without touching the filesystem.
pub fn analyze(cfg: &PipelineConfig) -> Result<Analysis> {
    analyze_snapshots(load_snapshots(cfg)?, cfg)
}

/// Every stage after ingestion, on given snapshots.
pub fn analyze_snapshots(snapshots: Vec<Snapshot>, cfg: &PipelineConfig) -> Result<Analysis> {
    let results = analyze_windows(&snapshots, cfg)?;
    let deltas: Vec<Vec<SignedImage>> = results
        .windows(2)
        .map(|pair| {
            pair[0]
                .images
                .iter()
                .zip(&pair[1].images)
                .map(|(a, b)| delta_zpi(a, b))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.at_stage("delta", pair[1].anchor))
        })
        .collect::<Result<_>>()?;
    let inputs: Vec<Array3<f64>> = deltas
        .iter()
        .zip(&results[1..])
        .map(|(d, r)| stack(d).map_err(|e| e.at_stage("adapt", r.anchor)))
        .collect::<Result<_>>()?;

    let net = AdaptorNetwork::new(cfg.max_hom_dim + 1, cfg.seed)?;
    let meta = MetaConfig {
        eta: cfg.adaptor.eta,
        meta_lr: cfg.adaptor.meta_lr,
        schedule: cfg.adaptor.schedule,
        seed: cfg.seed,
    };
    let (_, adaptor, lr_log) = run_meta_training(&snapshots, &anchor_landmarks(&results), &inputs, net, &meta)?;
    Ok(Analysis {
        snapshots,
        windows: results,
        deltas,
        lr_log,
        adaptor,
    })
}

/// Relative path and contents of every file in the output bundle except the
/// manifest.
pub fn bundle_files(analysis: &Analysis) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for w in &analysis.windows {
        let dir = format!("t{:03}", w.anchor);
        files.insert(format!("{dir}/landmarks.csv"), partitions_to_csv(w.filtration.partitions()).into_bytes());
        for (p, c) in w.filtration.complexes().iter().enumerate() {
            files.insert(format!("{dir}/complex_{p:02}.csv"), c.to_csv().into_bytes());
        }
        files.insert(format!("{dir}/diagram.csv"), w.diagram.to_csv().into_bytes());
        for img in &w.images {
            files.insert(format!("{dir}/zpi_h{}.csv", img.dim()), img.to_csv().into_bytes());
            files.insert(format!("{dir}/zpi_h{}.pgm", img.dim()), img.to_pgm().into_bytes());
        }
    }
    for (deltas, w) in analysis.deltas.iter().zip(&analysis.windows[1..]) {
        for (k, d) in deltas.iter().enumerate() {
            files.insert(format!("t{:03}/delta_h{k}.csv", w.anchor), d.to_csv().into_bytes());
        }
    }
    let mut lr = String::from("t,r\n");
    for step in &analysis.lr_log {
        lr.push_str(&format!("{},{}\n", step.t, step.r));
    }
    files.insert("lr_log.csv".into(), lr.into_bytes());
    files.insert("adaptor.csv".into(), analysis.adaptor.to_csv().into_bytes());
    files
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `files` under `dir` one at a time, then the manifest.
pub fn write_bundle(
    dir: &Path,
    files: &BTreeMap<String, Vec<u8>>,
    config_hash: &str,
    input_sha256: &str,
    snapshots: usize,
) -> Result<Manifest> {
    let mut hashes = BTreeMap::new();
    for (rel, bytes) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        hashes.insert(rel.clone(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        config_hash: config_hash.to_owned(),
        input_sha256: input_sha256.to_owned(),
        snapshots,
        files: hashes,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Runs every stage and writes the bundle to `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    let input = read_input(cfg)?;
    let snapshots = snapshots_from(&input, cfg)?;
    let analysis = analyze_snapshots(snapshots, cfg)?;
    write_bundle(
        &cfg.output_dir,
        &bundle_files(&analysis),
        &cfg.hash,
        &sha256_hex(&input),
        analysis.snapshots.len(),
    )
}
