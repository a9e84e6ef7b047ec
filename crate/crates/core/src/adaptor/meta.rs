use std::collections::BTreeSet;

use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::AdaptorNetwork;
use crate::error::{Error, Result};
use crate::graph::{NodeId, Snapshot};

pub const FEATURES: usize = 3;

/// Logistic edge scorer over three pair features plus a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    /// Feature weights followed by the bias.
    pub weights: Vec<f64>,
}

impl Default for ToyModel {
    fn default() -> Self {
        ToyModel {
            weights: vec![0.0; FEATURES + 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub features: [f64; FEATURES],
    pub label: f64,
}

/// Common-neighbour count, `ln(1 + deg u * deg v)` and whether both
/// endpoints are landmarks.
pub fn pair_features(s: &Snapshot, landmarks: &BTreeSet<NodeId>, u: NodeId, v: NodeId) -> [f64; FEATURES] {
    let nu: BTreeSet<&NodeId> = s.neighbors(u).iter().collect();
    let common = s.neighbors(v).iter().filter(|w| nu.contains(w)).count() as f64;
    let degrees = (s.degree(u) * s.degree(v)) as f64;
    let both = landmarks.contains(&u) && landmarks.contains(&v);
    [common, degrees.ln_1p(), f64::from(u8::from(both))]
}

/// Pairs of nodes of `features_from`, labelled by adjacency in `labels_from`:
/// every edge among those nodes as a positive and as many distinct random
/// non-edges as negatives.
pub fn sample_pairs(
    features_from: &Snapshot,
    labels_from: &Snapshot,
    landmarks: &BTreeSet<NodeId>,
    seed: u64,
) -> Vec<PairSample> {
    let nodes: Vec<NodeId> = features_from.nodes().iter().copied().collect();
    let known: BTreeSet<NodeId> = nodes.iter().copied().collect();
    let positives: Vec<(NodeId, NodeId)> = labels_from
        .edges()
        .iter()
        .copied()
        .filter(|(u, v)| known.contains(u) && known.contains(v))
        .collect();
    let mut negatives: Vec<(NodeId, NodeId)> = nodes
        .iter()
        .enumerate()
        .flat_map(|(i, &u)| nodes[i + 1..].iter().map(move |&v| (u, v)))
        .filter(|&(u, v)| !labels_from.contains_edge(u, v))
        .collect();
    negatives.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    negatives.truncate(positives.len());

    let sample = |(u, v): (NodeId, NodeId), label: f64| PairSample {
        features: pair_features(features_from, landmarks, u, v),
        label,
    };
    positives
        .into_iter()
        .map(|p| sample(p, 1.0))
        .chain(negatives.into_iter().map(|p| sample(p, 0.0)))
        .collect()
}

impl ToyModel {
    fn logit(&self, f: &[f64; FEATURES]) -> f64 {
        f.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() + self.weights[FEATURES]
    }

    pub fn predict(&self, f: &[f64; FEATURES]) -> f64 {
        let z = self.logit(f);
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            z.exp() / (1.0 + z.exp())
        }
    }

    /// Mean binary cross-entropy and its gradient.
    pub fn loss_and_grad(&self, samples: &[PairSample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; FEATURES + 1];
        if samples.is_empty() {
            return (0.0, grad);
        }
        let n = samples.len() as f64;
        let mut loss = 0.0;
        for s in samples {
            let z = self.logit(&s.features);
            // log(1 + e^z) - y z, evaluated stably.
            loss += (z.max(0.0) + (-z.abs()).exp().ln_1p() - s.label * z) / n;
            let err = (self.predict(&s.features) - s.label) / n;
            for (g, x) in grad.iter_mut().zip(&s.features) {
                *g += err * x;
            }
            grad[FEATURES] += err;
        }
        (loss, grad)
    }
}

/// `w - eta * r * grad`, element-wise.
pub fn meta_update(model: &ToyModel, grad: &[f64], eta: f64, r: f64) -> Result<ToyModel> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::invalid("eta", format!("{eta} is not positive")));
    }
    if grad.len() != model.weights.len() {
        return Err(Error::ShapeMismatch {
            expected: model.weights.len().to_string(),
            actual: grad.len().to_string(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) || !r.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(ToyModel {
        weights: model.weights.iter().zip(grad).map(|(w, g)| w - eta * r * g).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Adapt at every transition.
    LiveUpdate,
    /// Meta-train on the first `train_fraction` of snapshots, then keep
    /// updating the model on the rest with the adaptor frozen.
    WindowSplit { train_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaConfig {
    pub eta: f64,
    pub meta_lr: f64,
    pub schedule: Schedule,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    /// Snapshot index whose transition was trained on.
    pub t: usize,
    pub r: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub adapted: bool,
}

/// Runs the toy model through the snapshots. Step `t` trains on the pairs of
/// `t -> t+1`, scales the step by `r(deltas[t])`, and scores the result on
/// `t+1 -> t+2`. During meta-training the adaptor follows the gradient of
/// that validation loss with respect to `r`.
pub fn run_meta_training(
    snapshots: &[Snapshot],
    landmarks: &[BTreeSet<NodeId>],
    deltas: &[Array3<f64>],
    mut net: AdaptorNetwork,
    cfg: &MetaConfig,
) -> Result<(ToyModel, AdaptorNetwork, Vec<StepLog>)> {
    let t_len = snapshots.len();
    if landmarks.len() != t_len || deltas.len() + 1 < t_len {
        return Err(Error::ShapeMismatch {
            expected: format!("{t_len} landmark sets and {} deltas", t_len.saturating_sub(1)),
            actual: format!("{} and {}", landmarks.len(), deltas.len()),
        });
    }
    if cfg.meta_lr.is_nan() || cfg.meta_lr <= 0.0 {
        return Err(Error::invalid("meta_lr", format!("{} is not positive", cfg.meta_lr)));
    }
    let train_steps = match cfg.schedule {
        Schedule::LiveUpdate => usize::MAX,
        Schedule::WindowSplit { train_fraction } => {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(Error::invalid("train_fraction", format!("{train_fraction} is not in (0, 1)")));
            }
            let cut = ((train_fraction * t_len as f64) - 1e-9).ceil() as usize;
            cut.saturating_sub(2)
        }
    };

    let mut model = ToyModel::default();
    let mut log = Vec::new();
    for t in 0..t_len.saturating_sub(2) {
        let seed = cfg.seed.wrapping_add(t as u64);
        let train = sample_pairs(&snapshots[t], &snapshots[t + 1], &landmarks[t], seed);
        let val = sample_pairs(&snapshots[t + 1], &snapshots[t + 2], &landmarks[t + 1], seed ^ 0x9e37_79b9);
        let (train_loss, grad) = model.loss_and_grad(&train);
        let r = net.forward(&deltas[t])?;
        let next = meta_update(&model, &grad, cfg.eta, r)?;
        let (val_loss, val_grad) = next.loss_and_grad(&val);
        let adapted = t < train_steps;
        if adapted {
            let d_r: f64 = -cfg.eta * val_grad.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>();
            let (_, g) = net.gradients(&deltas[t], d_r)?;
            net.params.add_scaled(&g, -cfg.meta_lr);
            if !net.params.is_finite() {
                return Err(Error::NonFinite("adaptor parameters"));
            }
        }
        log.push(StepLog {
            t: snapshots[t].index(),
            r,
            train_loss,
            val_loss,
            adapted,
        });
        model = next;
    }
    Ok((model, net, log))
}
