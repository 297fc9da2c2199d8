//! Variable-periodic activation functions for implicit neural
//! representations: a self-contained numerical stack for building and
//! training coordinate MLPs, analyzing their neural tangent kernels, and
//! running signal/image/SDF fitting experiments.
//!
//! Everything is deterministic given a seed: the PRNG is fixed
//! (xoshiro256++ with SplitMix64 seeding), parallel kernels accumulate in
//! a fixed order, and parallel Monte Carlo uses per-sample child seeds.

pub mod activation;
pub mod eig;
pub mod error;
pub(crate) mod fastmath;
pub mod image;
pub mod matrix;
pub mod metrics;
pub mod network;
pub mod ntk;
pub mod rng;
pub mod sdf;
pub mod tasks;
pub mod train;

pub use activation::{
    act, act_deriv, frequency_scale_constants, sample_curve, subfunction_boundary, ActivationSpec,
    Backbone, DEFAULT_OMEGA_F,
};
pub use eig::eig_symmetric;
pub use error::{Error, Result};
pub use image::{synthetic_image, ImageGrid};
pub use matrix::Matrix;
pub use metrics::{psnr, sign_iou, ssim, MetricValue};
pub use network::{
    backward, decode_at_width, forward, forward_with_tape, init_network, layer_weight_bound,
    load_checkpoint, save_checkpoint, widen, Gradients, InitScheme, NetworkState, RingInit, Tape,
    WeightRule,
};
pub use ntk::{ntk_analytic_1hidden, ntk_empirical, ntk_sweep, GradScope, NtkConfig, NtkReport};
pub use rng::Rng;
pub use sdf::AnalyticSdf;
pub use tasks::{
    coord_grid, demo_signal, eval_sdf, fit_image, fit_sdf, fit_signal, gap_experiment,
    neuron_dominant_freq, predict_chunked, reconstruct_image, GapResult, ProbeLine,
};
pub use train::{
    adam_step, fit, l2_loss, stream_fit, AdamState, FitLog, FreezeMask, LogPoint, Stage, StageLog,
    TrainConfig,
};
