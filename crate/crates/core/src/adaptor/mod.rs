//! Topological learning-rate adaptor.
//!
//! A small residual CNN reads the stacked signed images between consecutive
//! windows and emits a multiplier `r ∈ (0, 2)` for the downstream step
//! `w - η r ∇L`. The downstream model here is a logistic edge scorer.
//!
//! How the adaptor itself should be trained is left open; [`run_meta_training`]
//! follows the one-step hypergradient of the next transition's loss, and
//! [`synthetic_batch`] provides a regression task with a known answer.

mod meta;
mod network;

pub use meta::{
    meta_update, pair_features, run_meta_training, sample_pairs, MetaConfig, PairSample, Schedule, StepLog,
    ToyModel, FEATURES,
};
pub use network::{
    adaptor_forward, adaptor_gradients, synthetic_batch, train_adaptor_step, AdaptorNetwork, AdaptorParams, HIDDEN,
};
