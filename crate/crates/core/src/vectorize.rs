//! Zigzag persistence images.
//!
//! A diagram is mapped to birth–persistence coordinates, each point becomes
//! an isotropic Gaussian of bandwidth `theta` weighted by its scaled
//! persistence, and every pixel holds the exact integral of that surface
//! over its cell.

use std::fmt::Write as _;

use ndarray::Array3;
use statrs::function::erf::{erf, erfc};

use crate::diagram::PersistenceDiagram;
use crate::error::{Error, Result};

pub const DEFAULT_SIZE: usize = 50;

/// Rectangle in birth–persistence coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let b = Bounds {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) || x_min >= x_max || y_min >= y_max {
            return Err(Error::invalid("bounds", format!("{b:?} is not a proper rectangle")));
        }
        Ok(b)
    }

    pub fn unit() -> Self {
        Bounds {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        Bounds {
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
            y_min: self.y_min.min(other.y_min),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    /// Bounding box of `points`, `None` when empty.
    pub fn enclosing(points: &[(f64, f64)]) -> Option<Bounds> {
        let (&(x0, y0), rest) = points.split_first()?;
        Some(rest.iter().fold(
            Bounds {
                x_min: x0,
                x_max: x0,
                y_min: y0,
                y_max: y0,
            },
            |b, &(x, y)| Bounds {
                x_min: b.x_min.min(x),
                x_max: b.x_max.max(x),
                y_min: b.y_min.min(y),
                y_max: b.y_max.max(y),
            },
        ))
    }

    fn expanded(&self, pad: f64) -> Bounds {
        Bounds {
            x_min: self.x_min - pad,
            x_max: self.x_max + pad,
            y_min: self.y_min - pad,
            y_max: self.y_max + pad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsSpec {
    /// Data bounding box padded by `3 * theta` per side. Weights are scaled
    /// by the largest persistence in the diagram.
    Auto,
    /// Fixed rectangle. Weights are scaled by its `y_max`, so images rendered
    /// on the same bounds are comparable and additive.
    Explicit(Bounds),
}

/// Birth–persistence transform `(b, d) -> (b, d - b)` of the bars of one
/// dimension. Open bars use their recorded final position.
pub fn transform_diagram(d: &PersistenceDiagram, dim: usize) -> Vec<(f64, f64)> {
    d.in_dim(dim)
        .map(|i| (i.birth_value(), i.persistence()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImage {
    /// Row-major, `size * size`; row `r` covers persistence cell `r` counted
    /// from `y_min`, column `c` covers birth cell `c` counted from `x_min`.
    pixels: Vec<f64>,
    size: usize,
    bounds: Bounds,
    theta: f64,
    dim: usize,
    weight_scale: f64,
    points: Vec<(f64, f64)>,
}

impl PersistenceImage {
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.size + col]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    /// Divisor turning persistence into the weight `g`; zero means `g ≡ 0`.
    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }

    /// Same points and weighting, rendered on other bounds.
    pub fn rerender(&self, bounds: Bounds) -> PersistenceImage {
        render_scaled(&self.points, self.size, self.theta, bounds, self.weight_scale).with_dim(self.dim)
    }

    pub fn to_csv(&self) -> String {
        grid_to_csv(&self.pixels, self.size)
    }

    /// Plain-text 16-bit graymap scaled to the brightest pixel, highest
    /// persistence on the top row.
    pub fn to_pgm(&self) -> String {
        let max = self.max();
        let mut out = format!("P2\n{} {}\n65535\n", self.size, self.size);
        for row in (0..self.size).rev() {
            let line: Vec<String> = (0..self.size)
                .map(|col| {
                    let v = self.pixel(row, col);
                    let level = if max > 0.0 { (v / max * 65535.0).round() as u32 } else { 0 };
                    level.to_string()
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn grid_to_csv(pixels: &[f64], size: usize) -> String {
    let mut out = String::with_capacity(pixels.len() * 20);
    for row in pixels.chunks(size.max(1)) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses a square row-major grid written by `to_csv`.
pub fn grid_from_csv(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut pixels = Vec::new();
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for field in line.split(',') {
            pixels.push(field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: i as u64 + 1,
                message: e.to_string(),
            })?);
        }
        rows += 1;
    }
    if rows * rows != pixels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{rows}x{rows}"),
            actual: format!("{} values", pixels.len()),
        });
    }
    Ok((rows, pixels))
}

/// Probability mass of the standard normal on `[a, b]`, accurate in both
/// tails.
fn normal_mass(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a * s) - erfc(b * s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b * s) - erfc(-a * s))
    } else {
        0.5 * (erf(b * s) - erf(a * s))
    }
}

fn cell_masses(center: f64, lo: f64, hi: f64, size: usize, theta: f64) -> Vec<f64> {
    let step = (hi - lo) / size as f64;
    (0..size)
        .map(|i| {
            let a = lo + step * i as f64;
            let b = if i + 1 == size { hi } else { lo + step * (i + 1) as f64 };
            normal_mass((a - center) / theta, (b - center) / theta)
        })
        .collect()
}

fn render_scaled(points: &[(f64, f64)], size: usize, theta: f64, bounds: Bounds, scale: f64) -> PersistenceImage {
    let mut pixels = vec![0.0; size * size];
    if scale > 0.0 {
        for &(x, y) in points {
            let g = y / scale;
            if g == 0.0 {
                continue;
            }
            let mx = cell_masses(x, bounds.x_min, bounds.x_max, size, theta);
            let my = cell_masses(y, bounds.y_min, bounds.y_max, size, theta);
            for (row, &wy) in my.iter().enumerate() {
                let gy = g * wy;
                for (px, &wx) in pixels[row * size..(row + 1) * size].iter_mut().zip(&mx) {
                    *px += gy * wx;
                }
            }
        }
    }
    PersistenceImage {
        pixels,
        size,
        bounds,
        theta,
        dim: 0,
        weight_scale: scale,
        points: points.to_vec(),
    }
}

/// Renders birth–persistence points into a `size x size` image.
///
/// Each point contributes `g(μ)` times the mass of `N(μ, θ² I)` inside every
/// cell, with `g(μ)` its persistence divided by the weight scale of `bounds`.
pub fn render_zpi(points: &[(f64, f64)], size: usize, theta: f64, bounds: BoundsSpec) -> Result<PersistenceImage> {
    if size == 0 {
        return Err(Error::invalid("size", "must be at least 1"));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("{theta} is not a positive bandwidth")));
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("diagram points"));
    }
    let (bounds, scale) = match bounds {
        BoundsSpec::Explicit(b) => {
            let b = Bounds::new(b.x_min, b.x_max, b.y_min, b.y_max)?;
            (b, b.y_max.max(0.0))
        }
        BoundsSpec::Auto => match Bounds::enclosing(points) {
            None => (Bounds::unit(), 0.0),
            Some(b) => (b.expanded(3.0 * theta), b.y_max.max(0.0)),
        },
    };
    Ok(render_scaled(points, size, theta, bounds, scale))
}

/// A tenth of the bounds diagonal: the explicit rectangle, or the points'
/// bounding box under `Auto` (falling back to 0.1 when it is degenerate).
pub fn default_theta(points: &[(f64, f64)], bounds: &BoundsSpec) -> f64 {
    let diagonal = match bounds {
        BoundsSpec::Explicit(b) => b.diagonal(),
        BoundsSpec::Auto => Bounds::enclosing(points).map_or(0.0, |b| b.diagonal()),
    };
    if diagonal > 0.0 {
        0.1 * diagonal
    } else {
        0.1
    }
}

/// Transform and render one dimension of a diagram.
pub fn render_diagram(
    d: &PersistenceDiagram,
    dim: usize,
    size: usize,
    theta: f64,
    bounds: BoundsSpec,
) -> Result<PersistenceImage> {
    Ok(render_zpi(&transform_diagram(d, dim), size, theta, bounds)?.with_dim(dim))
}

/// Pixel-wise difference of two persistence images.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedImage {
    pixels: Vec<f64>,
    size: usize,
    bounds: Bounds,
}

impl SignedImage {
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn to_csv(&self) -> String {
        grid_to_csv(&self.pixels, self.size)
    }
}

/// `b - a`, i.e. the image at `t + 1` minus the image at `t`. Images on
/// different bounds are first re-rendered on the union of both rectangles.
pub fn delta_zpi(a: &PersistenceImage, b: &PersistenceImage) -> Result<SignedImage> {
    if a.size != b.size {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0}", a.size),
            actual: format!("{0}x{0}", b.size),
        });
    }
    let (a, b) = if a.bounds == b.bounds {
        (a.clone(), b.clone())
    } else {
        let shared = a.bounds.union(&b.bounds);
        (a.rerender(shared), b.rerender(shared))
    };
    Ok(SignedImage {
        pixels: b.pixels.iter().zip(&a.pixels).map(|(y, x)| y - x).collect(),
        size: a.size,
        bounds: a.bounds,
    })
}

/// Stacks equally sized signed images into a `[channels, size, size]`
/// tensor.
pub fn stack(images: &[SignedImage]) -> Result<Array3<f64>> {
    let size = images.first().map_or(0, |i| i.size);
    let mut out = Array3::zeros((images.len(), size, size));
    for (c, img) in images.iter().enumerate() {
        if img.size != size {
            return Err(Error::ShapeMismatch {
                expected: format!("{size}x{size}"),
                actual: format!("{0}x{0}", img.size),
            });
        }
        for (dst, &src) in out.slice_mut(ndarray::s![c, .., ..]).iter_mut().zip(&img.pixels) {
            *dst = src;
        }
    }
    Ok(out)
}
