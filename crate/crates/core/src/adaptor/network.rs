use std::fmt::Write as _;

use ndarray::{s, Array1, Array2, Array3, Array4, ArrayView3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Width of both convolution layers.
pub const HIDDEN: usize = 4;

/// Weights of the adaptor. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptorParams {
    /// `[HIDDEN, channels, 3, 3]`
    pub conv1_w: Array4<f64>,
    pub conv1_b: Array1<f64>,
    /// `[HIDDEN, HIDDEN, 3, 3]`
    pub conv2_w: Array4<f64>,
    pub conv2_b: Array1<f64>,
    /// `[HIDDEN, channels]`, present when `channels != HIDDEN`.
    pub proj_w: Option<Array2<f64>>,
    pub dense_w: Array1<f64>,
    pub dense_b: Array1<f64>,
}

impl AdaptorParams {
    fn zeros(channels: usize) -> Self {
        AdaptorParams {
            conv1_w: Array4::zeros((HIDDEN, channels, 3, 3)),
            conv1_b: Array1::zeros(HIDDEN),
            conv2_w: Array4::zeros((HIDDEN, HIDDEN, 3, 3)),
            conv2_b: Array1::zeros(HIDDEN),
            proj_w: (channels != HIDDEN).then(|| Array2::zeros((HIDDEN, channels))),
            dense_w: Array1::zeros(HIDDEN),
            dense_b: Array1::zeros(1),
        }
    }

    /// Named flat views in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, Vec<usize>, &[f64])> {
        let mut out = vec![
            ("conv1_w", self.conv1_w.shape().to_vec(), self.conv1_w.as_slice().unwrap()),
            ("conv1_b", self.conv1_b.shape().to_vec(), self.conv1_b.as_slice().unwrap()),
            ("conv2_w", self.conv2_w.shape().to_vec(), self.conv2_w.as_slice().unwrap()),
            ("conv2_b", self.conv2_b.shape().to_vec(), self.conv2_b.as_slice().unwrap()),
        ];
        if let Some(p) = &self.proj_w {
            out.push(("proj_w", p.shape().to_vec(), p.as_slice().unwrap()));
        }
        out.push(("dense_w", self.dense_w.shape().to_vec(), self.dense_w.as_slice().unwrap()));
        out.push(("dense_b", self.dense_b.shape().to_vec(), self.dense_b.as_slice().unwrap()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out = vec![
            ("conv1_w", self.conv1_w.as_slice_mut().unwrap()),
            ("conv1_b", self.conv1_b.as_slice_mut().unwrap()),
            ("conv2_w", self.conv2_w.as_slice_mut().unwrap()),
            ("conv2_b", self.conv2_b.as_slice_mut().unwrap()),
        ];
        if let Some(p) = &mut self.proj_w {
            out.push(("proj_w", p.as_slice_mut().unwrap()));
        }
        out.push(("dense_w", self.dense_w.as_slice_mut().unwrap()));
        out.push(("dense_b", self.dense_b.as_slice_mut().unwrap()));
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &AdaptorParams, scale: f64) {
        let src: Vec<Vec<f64>> = other.tensors().into_iter().map(|(_, _, v)| v.to_vec()).collect();
        for ((_, dst), src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, v)| v.iter().all(|x| x.is_finite()))
    }
}

/// Residual convolutional network mapping a stack of signed persistence
/// images `[channels, size, size]` to a learning-rate multiplier in `(0, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptorNetwork {
    pub params: AdaptorParams,
    channels: usize,
}

struct Cache {
    z1: Array3<f64>,
    a1: Array3<f64>,
    s: Array3<f64>,
    pooled: Array1<f64>,
    sigma: f64,
}

fn relu(x: &Array3<f64>) -> Array3<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Logistic function kept strictly inside `(0, 1)` where it would round to
/// an endpoint.
fn logistic(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// 3x3 convolution, stride 1, zero padding 1.
fn conv3x3(x: ArrayView3<f64>, w: &Array4<f64>, b: &Array1<f64>) -> Array3<f64> {
    let (cin, h, wd) = x.dim();
    let cout = w.shape()[0];
    let mut out = Array3::zeros((cout, h, wd));
    for o in 0..cout {
        let mut plane = out.index_axis_mut(Axis(0), o);
        plane.fill(b[o]);
        for i in 0..cin {
            let src = x.index_axis(Axis(0), i);
            for ky in 0..3 {
                for kx in 0..3 {
                    let k = w[[o, i, ky, kx]];
                    if k == 0.0 {
                        continue;
                    }
                    // out[y, x] += k * src[y + ky - 1, x + kx - 1]
                    let (y0, y1) = (1usize.saturating_sub(ky), (h + 1 - ky).min(h));
                    let (x0, x1) = (1usize.saturating_sub(kx), (wd + 1 - kx).min(wd));
                    if y0 >= y1 || x0 >= x1 {
                        continue;
                    }
                    let mut dst = plane.slice_mut(s![y0..y1, x0..x1]);
                    let from = src.slice(s![y0 + ky - 1..y1 + ky - 1, x0 + kx - 1..x1 + kx - 1]);
                    dst.scaled_add(k, &from);
                }
            }
        }
    }
    out
}

/// Gradients of a `conv3x3` layer given the gradient of its output.
fn conv3x3_backward(
    x: ArrayView3<f64>,
    w: &Array4<f64>,
    grad_out: &Array3<f64>,
) -> (Array4<f64>, Array1<f64>, Array3<f64>) {
    let (cin, h, wd) = x.dim();
    let cout = w.shape()[0];
    let mut gw = Array4::zeros(w.raw_dim());
    let mut gx = Array3::zeros(x.raw_dim());
    let gb = grad_out.sum_axis(Axis(1)).sum_axis(Axis(1));
    for o in 0..cout {
        let go = grad_out.index_axis(Axis(0), o);
        for i in 0..cin {
            let src = x.index_axis(Axis(0), i);
            for ky in 0..3 {
                for kx in 0..3 {
                    let (y0, y1) = (1usize.saturating_sub(ky), (h + 1 - ky).min(h));
                    let (x0, x1) = (1usize.saturating_sub(kx), (wd + 1 - kx).min(wd));
                    if y0 >= y1 || x0 >= x1 {
                        continue;
                    }
                    let g = go.slice(s![y0..y1, x0..x1]);
                    let from = src.slice(s![y0 + ky - 1..y1 + ky - 1, x0 + kx - 1..x1 + kx - 1]);
                    gw[[o, i, ky, kx]] = (&g * &from).sum();
                    let k = w[[o, i, ky, kx]];
                    if k != 0.0 {
                        gx.slice_mut(s![i, y0 + ky - 1..y1 + ky - 1, x0 + kx - 1..x1 + kx - 1])
                            .scaled_add(k, &g);
                    }
                }
            }
        }
    }
    (gw, gb, gx)
}

impl AdaptorNetwork {
    /// Random convolution weights, zero biases and a zero read-out, so the
    /// initial output is exactly 1.
    pub fn new(channels: usize, seed: u64) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("channels", "must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = AdaptorParams::zeros(channels);
        let mut fill = |v: &mut [f64], fan_in: usize| {
            let a = (1.0 / fan_in as f64).sqrt();
            v.iter_mut().for_each(|x| *x = rng.gen_range(-a..a));
        };
        fill(params.conv1_w.as_slice_mut().unwrap(), channels * 9);
        fill(params.conv2_w.as_slice_mut().unwrap(), HIDDEN * 9);
        if let Some(p) = &mut params.proj_w {
            fill(p.as_slice_mut().unwrap(), channels);
        }
        Ok(AdaptorNetwork { params, channels })
    }

    pub fn from_params(params: AdaptorParams) -> Result<Self> {
        let channels = params.conv1_w.shape()[1];
        let expected = AdaptorParams::zeros(channels);
        let shapes = |p: &AdaptorParams| -> Vec<(&'static str, Vec<usize>)> {
            p.tensors().into_iter().map(|(n, s, _)| (n, s)).collect()
        };
        if shapes(&params) != shapes(&expected) {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", shapes(&expected)),
                actual: format!("{:?}", shapes(&params)),
            });
        }
        Ok(AdaptorNetwork { params, channels })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn check_input(&self, x: &Array3<f64>) -> Result<()> {
        let (c, h, w) = x.dim();
        if c != self.channels || h != w || h == 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("[{}, n, n]", self.channels),
                actual: format!("{:?}", x.shape()),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("adaptor input"));
        }
        Ok(())
    }

    fn skip(&self, x: &Array3<f64>) -> Array3<f64> {
        match &self.params.proj_w {
            None => x.clone(),
            Some(p) => {
                let (c, h, w) = x.dim();
                let flat = x.view().into_shape((c, h * w)).unwrap();
                p.dot(&flat).into_shape((HIDDEN, h, w)).unwrap()
            }
        }
    }

    fn forward_cached(&self, x: &Array3<f64>) -> (f64, Cache) {
        let p = &self.params;
        let z1 = conv3x3(x.view(), &p.conv1_w, &p.conv1_b);
        let a1 = relu(&z1);
        let s = conv3x3(a1.view(), &p.conv2_w, &p.conv2_b) + self.skip(x);
        let h = relu(&s);
        let area = (s.shape()[1] * s.shape()[2]) as f64;
        let pooled = h.sum_axis(Axis(1)).sum_axis(Axis(1)) / area;
        let sigma = logistic(p.dense_w.dot(&pooled) + p.dense_b[0]);
        (
            2.0 * sigma,
            Cache {
                z1,
                a1,
                s,
                pooled,
                sigma,
            },
        )
    }

    /// Multiplier `r = 2 * logistic(logit)` for one input stack.
    pub fn forward(&self, x: &Array3<f64>) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.forward_cached(x).0)
    }

    /// Gradient of `upstream * r(x)` with respect to every parameter, along
    /// with `r(x)`.
    pub fn gradients(&self, x: &Array3<f64>, upstream: f64) -> Result<(f64, AdaptorParams)> {
        self.check_input(x)?;
        let p = &self.params;
        let (r, c) = self.forward_cached(x);
        let mut g = AdaptorParams::zeros(self.channels);

        let g_logit = upstream * 2.0 * c.sigma * (1.0 - c.sigma);
        g.dense_b[0] = g_logit;
        g.dense_w = &c.pooled * g_logit;

        let (_, h, w) = c.s.dim();
        let area = (h * w) as f64;
        let mut g_s = Array3::zeros(c.s.raw_dim());
        for ((o, _, _), v) in g_s.indexed_iter_mut() {
            *v = g_logit * p.dense_w[o] / area;
        }
        g_s.zip_mut_with(&c.s, |gv, &sv| {
            if sv <= 0.0 {
                *gv = 0.0;
            }
        });

        if let Some(proj) = &p.proj_w {
            let flat_x = x.view().into_shape((self.channels, h * w)).unwrap();
            let flat_g = g_s.view().into_shape((HIDDEN, h * w)).unwrap();
            g.proj_w = Some(flat_g.dot(&flat_x.t()));
            debug_assert_eq!(proj.dim(), (HIDDEN, self.channels));
        }

        let (gw2, gb2, mut g_a1) = conv3x3_backward(c.a1.view(), &p.conv2_w, &g_s);
        g.conv2_w = gw2;
        g.conv2_b = gb2;
        g_a1.zip_mut_with(&c.z1, |gv, &zv| {
            if zv <= 0.0 {
                *gv = 0.0;
            }
        });
        let (gw1, gb1, _) = conv3x3_backward(x.view(), &p.conv1_w, &g_a1);
        g.conv1_w = gw1;
        g.conv1_b = gb1;
        Ok((r, g))
    }

    /// `name,shape,values...` with shape dimensions joined by `x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (name, shape, values) in self.params.tensors() {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            let _ = write!(out, "{name},{}", dims.join("x"));
            for v in values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |message: String| Error::Parse {
                line: i as u64 + 1,
                message,
            };
            let mut fields = line.split(',');
            let name = fields.next().unwrap_or_default().to_string();
            let shape: Vec<usize> = fields
                .next()
                .ok_or_else(|| bad("missing shape".into()))?
                .split('x')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("shape: {e}")))?;
            let values: Vec<f64> = fields
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("value: {e}")))?;
            if shape.iter().product::<usize>() != values.len() {
                return Err(bad(format!("{} values for shape {shape:?}", values.len())));
            }
            rows.insert(name, (shape, values));
        }
        let channels = rows
            .get("conv1_w")
            .map(|(s, _)| s.get(1).copied().unwrap_or(0))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: "missing conv1_w".into(),
            })?;
        let mut params = AdaptorParams::zeros(channels);
        let expected: Vec<(&'static str, Vec<usize>)> =
            params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        if rows.len() != expected.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} tensors", expected.len()),
                actual: format!("{} tensors", rows.len()),
            });
        }
        for ((name, dst), (_, shape)) in params.tensors_mut().into_iter().zip(expected) {
            let (got, values) = rows.get(name).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing {name}"),
            })?;
            if *got != shape {
                return Err(Error::ShapeMismatch {
                    expected: format!("{name} {shape:?}"),
                    actual: format!("{got:?}"),
                });
            }
            dst.copy_from_slice(values);
        }
        Ok(AdaptorNetwork { params, channels })
    }
}

/// Multiplier for one input stack.
pub fn adaptor_forward(net: &AdaptorNetwork, x: &Array3<f64>) -> Result<f64> {
    net.forward(x)
}

/// Gradient of `upstream * r(x)` with respect to the adaptor parameters.
pub fn adaptor_gradients(net: &AdaptorNetwork, x: &Array3<f64>, upstream: f64) -> Result<AdaptorParams> {
    Ok(net.gradients(x, upstream)?.1)
}

/// One gradient-descent step on the mean squared error between `r(x)` and
/// the target of each sample. Returns the updated network and the loss before
/// the step.
pub fn train_adaptor_step(
    net: &AdaptorNetwork,
    batch: &[(Array3<f64>, f64)],
    lr: f64,
) -> Result<(AdaptorNetwork, f64)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput);
    }
    if lr.is_nan() || lr <= 0.0 {
        return Err(Error::invalid("lr", format!("{lr} is not positive")));
    }
    let n = batch.len() as f64;
    let mut total = AdaptorParams::zeros(net.channels);
    let mut loss = 0.0;
    for (x, target) in batch {
        let r = net.forward(x)?;
        let err = r - target;
        loss += err * err / n;
        total.add_scaled(&net.gradients(x, 2.0 * err / n)?.1, 1.0);
    }
    let mut next = net.clone();
    next.params.add_scaled(&total, -lr);
    if !next.params.is_finite() {
        return Err(Error::NonFinite("adaptor parameters"));
    }
    Ok((next, loss))
}

/// Regression task with a known answer: uniform noise of random amplitude,
/// labelled `2 * clamp(mean |x|, 0.05, 0.95)`.
pub fn synthetic_batch(n: usize, channels: usize, size: usize, seed: u64) -> Vec<(Array3<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let amp: f64 = rng.gen_range(0.0..2.0);
            let x = Array3::from_shape_fn((channels, size, size), |_| amp * rng.gen_range(-1.0..1.0));
            let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
            (x, 2.0 * mean_abs.clamp(0.05, 0.95))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_output_is_one() {
        for c in [1, 2, 4] {
            let net = AdaptorNetwork::new(c, 7).unwrap();
            let x = Array3::from_elem((c, 6, 6), 0.3);
            assert_eq!(net.forward(&x).unwrap(), 1.0);
        }
    }

    #[test]
    fn projection_only_when_widths_differ() {
        assert!(AdaptorNetwork::new(2, 0).unwrap().params.proj_w.is_some());
        assert!(AdaptorNetwork::new(HIDDEN, 0).unwrap().params.proj_w.is_none());
        assert!(AdaptorNetwork::new(0, 0).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let net = AdaptorNetwork::new(2, 0).unwrap();
        assert!(net.forward(&Array3::zeros((1, 4, 4))).is_err());
        assert!(net.forward(&Array3::zeros((2, 4, 3))).is_err());
        let mut x = Array3::zeros((2, 4, 4));
        x[[0, 1, 1]] = f64::NAN;
        assert!(matches!(net.forward(&x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array3::from_shape_fn((2, 5, 5), |_| rng.gen_range(-1.0..1.0));
        let w = Array4::from_shape_fn((3, 2, 3, 3), |_| rng.gen_range(-1.0..1.0));
        let b = Array1::from_shape_fn(3, |_| rng.gen_range(-1.0..1.0));
        let out = conv3x3(x.view(), &w, &b);
        for o in 0..3 {
            for y in 0..5i64 {
                for xx in 0..5i64 {
                    let mut acc = b[o];
                    for i in 0..2 {
                        for ky in 0..3i64 {
                            for kx in 0..3i64 {
                                let (sy, sx) = (y + ky - 1, xx + kx - 1);
                                if (0..5).contains(&sy) && (0..5).contains(&sx) {
                                    acc += w[[o, i, ky as usize, kx as usize]] * x[[i, sy as usize, sx as usize]];
                                }
                            }
                        }
                    }
                    assert!((out[[o, y as usize, xx as usize]] - acc).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let net = AdaptorNetwork::new(2, 11).unwrap();
        let text = net.to_csv();
        assert!(text.starts_with("conv1_w,4x2x3x3,"));
        assert_eq!(AdaptorNetwork::from_csv(&text).unwrap(), net);
        assert!(AdaptorNetwork::from_csv("conv1_w,4x2x3x3,1.0\n").is_err());
    }

    #[test]
    fn training_step_reduces_loss() {
        let batch = synthetic_batch(8, 2, 6, 1);
        let net = AdaptorNetwork::new(2, 1).unwrap();
        let (next, before) = train_adaptor_step(&net, &batch, 0.5).unwrap();
        let (_, after) = train_adaptor_step(&next, &batch, 0.5).unwrap();
        assert!(after < before);
        assert!(train_adaptor_step(&net, &[], 0.5).is_err());
    }

    #[test]
    fn output_stays_inside_open_interval() {
        let mut net = AdaptorNetwork::new(1, 0).unwrap();
        let x = Array3::from_elem((1, 3, 3), 1.0);
        for b in [-1e4, -800.0, -40.0, 40.0, 800.0, 1e4] {
            net.params.dense_b[0] = b;
            let r = net.forward(&x).unwrap();
            assert!(r > 0.0 && r < 2.0, "bias {b}: {r}");
        }
    }
}
