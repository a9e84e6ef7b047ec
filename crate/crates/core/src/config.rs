//! JSON configuration for the pipeline and the CLI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adaptor::Schedule;
use crate::error::{Error, Result};
use crate::graph::{Granularity, NoiseMode, WindowSpec};
use crate::vectorize::{Bounds, DEFAULT_SIZE};
use crate::zigzag::Backend;

/// Edge list used when no `input_path` is configured: eight nodes over six
/// daily snapshots, with a ring that closes and is then filled by chords.
pub const TOY_DATASET: &str = include_str!("../data/toy.csv");

const MAX_HOM_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawGranularity {
    Seconds(u64),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RawWindow {
    Named(String),
    Length(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RawBounds {
    Named(String),
    Explicit { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawZpi {
    size: i64,
    theta: Option<f64>,
    bounds: RawBounds,
}

impl Default for RawZpi {
    fn default() -> Self {
        RawZpi {
            size: DEFAULT_SIZE as i64,
            theta: None,
            bounds: RawBounds::Named("span".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    mode: String,
    ratio: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_train_fraction")]
    train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawAdaptor {
    schedule: String,
    train_fraction: f64,
    eta: f64,
    meta_lr: f64,
}

impl Default for RawAdaptor {
    fn default() -> Self {
        RawAdaptor {
            schedule: "live".into(),
            train_fraction: default_train_fraction(),
            eta: 0.5,
            meta_lr: 0.1,
        }
    }
}

fn default_train_fraction() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    input_path: Option<PathBuf>,
    granularity: RawGranularity,
    eps: i64,
    delta: i64,
    window: RawWindow,
    max_hom_dim: i64,
    zpi: RawZpi,
    noise: Option<RawNoise>,
    backend: String,
    output_dir: Option<PathBuf>,
    seed: u64,
    adaptor: RawAdaptor,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            input_path: None,
            granularity: RawGranularity::Seconds(86_400),
            eps: 1,
            delta: 1,
            window: RawWindow::Named("full".into()),
            max_hom_dim: 1,
            zpi: RawZpi::default(),
            noise: None,
            backend: "dowker".into(),
            output_dir: None,
            seed: 0,
            adaptor: RawAdaptor::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File(PathBuf),
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsChoice {
    /// Per-image bounding box.
    Auto,
    /// Births `[0.5, T + 0.5]` by persistence `[0, T]`, shared by every
    /// window of a `T`-snapshot run.
    Span,
    Explicit(Bounds),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZpiConfig {
    pub size: usize,
    /// Gaussian bandwidth; `None` means a tenth of the bounds diagonal.
    pub theta: Option<f64>,
    pub bounds: BoundsChoice,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub ratio: f64,
    pub seed: u64,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptorConfig {
    pub schedule: Schedule,
    pub eta: f64,
    pub meta_lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: InputSource,
    pub granularity: Granularity,
    pub eps: u32,
    pub delta: u32,
    pub window: WindowSpec,
    pub max_hom_dim: usize,
    pub zpi: ZpiConfig,
    pub noise: Option<NoiseConfig>,
    pub backend: Backend,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub adaptor: AdaptorConfig,
    /// SHA-256 of the normalized configuration with defaults filled in and
    /// `output_dir` removed.
    pub hash: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        parse_config_str("{}").expect("defaults are valid")
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_owned(),
        message: message.into(),
    }
}

fn positive_u32(key: &str, v: i64) -> Result<u32> {
    u32::try_from(v)
        .ok()
        .filter(|&v| v >= 1)
        .ok_or_else(|| bad(key, format!("{v} must be a positive integer")))
}

fn unit_fraction(key: &str, v: f64, open: bool) -> Result<f64> {
    let ok = if open { v > 0.0 && v < 1.0 } else { (0.0..=1.0).contains(&v) };
    if ok {
        Ok(v)
    } else {
        Err(bad(key, format!("{v} is outside {}", if open { "(0, 1)" } else { "[0, 1]" })))
    }
}

fn positive_real(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("{v} must be a positive number")))
    }
}

impl RawConfig {
    fn validate(self) -> Result<PipelineConfig> {
        let hash = {
            let mut normalized = self.clone();
            normalized.output_dir = None;
            let bytes = serde_json::to_vec(&normalized).expect("config serializes");
            hex::encode(Sha256::digest(bytes))
        };
        let granularity = match self.granularity {
            RawGranularity::Seconds(0) | RawGranularity::Count(0) => {
                return Err(bad("granularity", "bucket size must be positive"))
            }
            RawGranularity::Seconds(s) => Granularity::Seconds(s),
            RawGranularity::Count(c) => Granularity::Count(c),
        };
        let window = match &self.window {
            RawWindow::Named(n) if n == "full" => WindowSpec::Full,
            RawWindow::Named(n) => return Err(bad("window", format!("expected \"full\" or a length, found {n:?}"))),
            RawWindow::Length(w) => WindowSpec::Length(positive_u32("window", *w)? as usize),
        };
        let max_hom_dim = usize::try_from(self.max_hom_dim)
            .ok()
            .filter(|&d| d <= MAX_HOM_DIM)
            .ok_or_else(|| bad("max_hom_dim", format!("{} is outside 0..={MAX_HOM_DIM}", self.max_hom_dim)))?;
        let size = usize::try_from(self.zpi.size)
            .ok()
            .filter(|&s| s >= 1)
            .ok_or_else(|| bad("zpi.size", format!("{} must be a positive integer", self.zpi.size)))?;
        let theta = self.zpi.theta.map(|t| positive_real("zpi.theta", t)).transpose()?;
        let bounds = match self.zpi.bounds {
            RawBounds::Named(n) if n == "auto" => BoundsChoice::Auto,
            RawBounds::Named(n) if n == "span" => BoundsChoice::Span,
            RawBounds::Named(n) => return Err(bad("zpi.bounds", format!("expected \"auto\", \"span\" or an object, found {n:?}"))),
            RawBounds::Explicit { x_min, x_max, y_min, y_max } => BoundsChoice::Explicit(
                Bounds::new(x_min, x_max, y_min, y_max).map_err(|e| bad("zpi.bounds", e.to_string()))?,
            ),
        };
        let noise = self
            .noise
            .map(|n| -> Result<NoiseConfig> {
                Ok(NoiseConfig {
                    mode: match n.mode.as_str() {
                        "evasion" => NoiseMode::Evasion,
                        "poisoning" => NoiseMode::Poisoning,
                        other => return Err(bad("noise.mode", format!("expected evasion or poisoning, found {other:?}"))),
                    },
                    ratio: unit_fraction("noise.ratio", n.ratio, false)?,
                    seed: n.seed,
                    train_fraction: unit_fraction("noise.train_fraction", n.train_fraction, false)?,
                })
            })
            .transpose()?;
        let backend = match self.backend.as_str() {
            "dowker" => Backend::Dowker,
            "vr" => Backend::VietorisRips,
            other => return Err(bad("backend", format!("expected dowker or vr, found {other:?}"))),
        };
        let schedule = match self.adaptor.schedule.as_str() {
            "live" => Schedule::LiveUpdate,
            "window" => Schedule::WindowSplit {
                train_fraction: unit_fraction("adaptor.train_fraction", self.adaptor.train_fraction, true)?,
            },
            other => return Err(bad("adaptor.schedule", format!("expected live or window, found {other:?}"))),
        };
        let adaptor = AdaptorConfig {
            schedule,
            eta: positive_real("adaptor.eta", self.adaptor.eta)?,
            meta_lr: positive_real("adaptor.meta_lr", self.adaptor.meta_lr)?,
        };

        Ok(PipelineConfig {
            input: self.input_path.map_or(InputSource::Toy, InputSource::File),
            granularity,
            eps: positive_u32("eps", self.eps)?,
            delta: positive_u32("delta", self.delta)?,
            window,
            max_hom_dim,
            zpi: ZpiConfig { size, theta, bounds },
            noise,
            backend,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("dzp_out")),
            seed: self.seed,
            adaptor,
            hash,
        })
    }
}

/// Strict parse: unknown keys, wrong types and out-of-range values are
/// errors naming the offending key.
pub fn parse_config_str(text: &str) -> Result<PipelineConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        bad(&key, e.into_inner().to_string())
    })?;
    raw.validate()
}

/// Reads and parses a config file. Relative `input_path`s resolve against
/// the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config_str(&text)?;
    if let InputSource::File(p) = &cfg.input {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.input = InputSource::File(dir.join(p));
            }
        }
    }
    Ok(cfg)
}
