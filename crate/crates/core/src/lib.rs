//! Label distribution learning at desk scale.
//!
//! Ambiguous ground truth (an apparent age "around 25", a head pose between
//! grid angles, a hard-to-spot object, a pixel on an object boundary) is
//! encoded as a probability distribution over an ordered label set, and a
//! small dense network learns it under a softmax + cross-entropy objective
//! whose logit gradient is simply `yhat - y`. The crate provides:
//!
//! - [`label_space`]: ordered label sets, 1-D/2-D/per-pixel distributions;
//! - [`construct`]: the four target constructions plus one-hot and
//!   label-smoothing baselines;
//! - [`loss`]: KL cross-entropy, the squared-Hellinger alpha divergence,
//!   and the l2/l1/eps-insensitive regression losses, all with gradients;
//! - [`net`]: a seeded dense network and momentum-SGD trainer;
//! - [`decode`] and [`metrics`]: max/expectation/threshold decoders and the
//!   MAE/CS/eps-error/pose/AP/mean-IU metrics;
//! - [`gradcheck`]: finite-difference verification of every gradient;
//! - [`synth`] and [`experiment`]: seeded synthetic tasks and the
//!   method-comparison harness with the target-sigma sweep.
//!
//! Everything is deterministic given a seed: generators, initialization and
//! shuffling all draw from ChaCha8 streams, and reports serialize with
//! stable ordering, so identical configurations produce identical bytes.

pub mod construct;
pub mod decode;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod label_space;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod synth;

pub use error::{Error, Result};
