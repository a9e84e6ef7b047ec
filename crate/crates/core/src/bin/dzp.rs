use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dzp::config::{parse_config, PipelineConfig};
use dzp::diagram::PersistenceDiagram;
use dzp::error::{Error, Result};
use dzp::metrics::bottleneck_by_dim;
use dzp::pipeline::{analyze, bundle_files, load_snapshots, render_channels, run_pipeline};
use dzp::vectorize::grid_from_csv;

#[derive(Parser)]
#[command(name = "dzp", version, about = "Dowker zigzag persistence for dynamic graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Partition the edge list into snapshots.
    Snapshot(Common),
    /// Seeded ε-net landmarks for every window.
    Landmarks(Common),
    /// Complexes and zigzag diagrams for every window.
    Zigzag(Common),
    /// Persistence images, for every window or for one diagram file.
    Zpi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        diagram: Option<PathBuf>,
    },
    /// Differences of consecutive images, or of two image files.
    Delta {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
    },
    /// Bottleneck distances between two diagram files.
    Bottleneck {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1)]
        max_dim: usize,
    },
    /// Snapshots after the configured noise injection.
    Noise(Common),
    /// Learning-rate log and trained adaptor.
    Adapt(Common),
    /// Every stage, with a manifest.
    Pipeline(Common),
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => parse_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_all(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    for (rel, bytes) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn snapshots_csv(cfg: &PipelineConfig) -> Result<Vec<u8>> {
    let mut out = String::from("snapshot,u,v\n");
    for s in load_snapshots(cfg)? {
        for (u, v) in s.edges() {
            out.push_str(&format!("{},{u},{v}\n", s.index()));
        }
    }
    Ok(out.into_bytes())
}

/// Bundle files whose name matches `keep`.
fn stage_files(cfg: &PipelineConfig, keep: impl Fn(&str) -> bool) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = bundle_files(&analyze(cfg)?);
    files.retain(|name, _| keep(name));
    Ok(files)
}

fn file_name(rel: &str) -> &str {
    rel.rsplit('/').next().unwrap_or(rel)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Snapshot(c) | Command::Noise(c) => {
            let cfg = load(&c)?;
            write_all(&cfg.output_dir, &BTreeMap::from([("snapshots.csv".to_string(), snapshots_csv(&cfg)?)]))
        }
        Command::Landmarks(c) => {
            let cfg = load(&c)?;
            write_all(&cfg.output_dir, &stage_files(&cfg, |n| file_name(n) == "landmarks.csv")?)
        }
        Command::Zigzag(c) => {
            let cfg = load(&c)?;
            let files = stage_files(&cfg, |n| {
                let f = file_name(n);
                f.starts_with("complex_") || f == "diagram.csv"
            })?;
            write_all(&cfg.output_dir, &files)
        }
        Command::Zpi { common, diagram: None } => {
            let cfg = load(&common)?;
            write_all(&cfg.output_dir, &stage_files(&cfg, |n| file_name(n).starts_with("zpi_"))?)
        }
        Command::Zpi {
            common,
            diagram: Some(path),
        } => {
            let cfg = load(&common)?;
            let d = PersistenceDiagram::from_csv(&read(&path)?)?;
            let t_total = load_snapshots(&cfg)?.len();
            let mut files = BTreeMap::new();
            for img in render_channels(&d, &cfg.zpi, cfg.max_hom_dim, t_total)? {
                files.insert(format!("zpi_h{}.csv", img.dim()), img.to_csv().into_bytes());
                files.insert(format!("zpi_h{}.pgm", img.dim()), img.to_pgm().into_bytes());
            }
            write_all(&cfg.output_dir, &files)
        }
        Command::Delta {
            common,
            a: Some(a),
            b: Some(b),
        } => {
            // Raw grids carry no bounds, so both are taken to share them.
            let cfg = load(&common)?;
            let (na, pa) = grid_from_csv(&read(&a)?)?;
            let (nb, pb) = grid_from_csv(&read(&b)?)?;
            if na != nb {
                return Err(Error::ShapeMismatch {
                    expected: format!("{na}x{na}"),
                    actual: format!("{nb}x{nb}"),
                });
            }
            let mut out = String::new();
            for (ra, rb) in pa.chunks(na).zip(pb.chunks(nb)) {
                let row: Vec<String> = ra.iter().zip(rb).map(|(x, y)| (y - x).to_string()).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            write_all(&cfg.output_dir, &BTreeMap::from([("delta.csv".to_string(), out.into_bytes())]))
        }
        Command::Delta { common, .. } => {
            let cfg = load(&common)?;
            write_all(&cfg.output_dir, &stage_files(&cfg, |n| file_name(n).starts_with("delta_"))?)
        }
        Command::Bottleneck { a, b, max_dim } => {
            let da = PersistenceDiagram::from_csv(&read(&a)?)?;
            let db = PersistenceDiagram::from_csv(&read(&b)?)?;
            let (per_dim, max) = bottleneck_by_dim(&da, &db, max_dim);
            println!("dim,distance");
            for (k, d) in per_dim.iter().enumerate() {
                println!("{k},{d}");
            }
            println!("max,{max}");
            Ok(())
        }
        Command::Adapt(c) => {
            let cfg = load(&c)?;
            let files = stage_files(&cfg, |n| n == "lr_log.csv" || n == "adaptor.csv")?;
            write_all(&cfg.output_dir, &files)
        }
        Command::Pipeline(c) => {
            let cfg = load(&c)?;
            let manifest = run_pipeline(&cfg)?;
            println!(
                "wrote {} files to {} (config {})",
                manifest.files.len() + 1,
                cfg.output_dir.display(),
                &manifest.config_hash[..12]
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
