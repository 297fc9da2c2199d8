//! Adam optimization, the L2 fitting loop, and the multi-stage streamable
//! schedule with parameter freezing.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{backward, forward_with_tape, widen, Gradients, InitScheme, NetworkState, RingInit};
use crate::rng::Rng;

/// Optimizer and loop hyperparameters. `batch_size == 0` means full batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub log_every: usize,
    /// Optional per-step multiplicative learning-rate decay (1.0 = none).
    pub lr_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            iterations: 2000,
            batch_size: 0,
            seed: 0,
            log_every: 100,
            lr_decay: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::invalid(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        Ok(())
    }
}

/// One Adam update on a flat parameter buffer, with bias correction.
/// Entries with zero gradient leave parameters and moments bit-unchanged.
pub fn adam_step(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: usize,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<()> {
    if theta.len() != grad.len() || theta.len() != m.len() || theta.len() != v.len() {
        return Err(Error::invalid(format!(
            "adam_step: buffer lengths differ (theta {}, grad {}, m {}, v {})",
            theta.len(),
            grad.len(),
            m.len(),
            v.len()
        )));
    }
    if t == 0 {
        return Err(Error::invalid("adam_step: step index starts at 1".to_string()));
    }
    let b1 = cfg.beta1;
    let b2 = cfg.beta2;
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam moment buffers aligned with a network's parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Matrix>,
    v_weights: Vec<Matrix>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    t: usize,
}

impl AdamState {
    pub fn new(net: &NetworkState) -> Self {
        AdamState {
            m_weights: net.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            v_weights: net.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            m_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            t: 0,
        }
    }

    /// Apply one optimization step with the given gradients.
    pub fn step(
        &mut self,
        net: &mut NetworkState,
        grads: &Gradients,
        lr: f64,
        cfg: &TrainConfig,
    ) -> Result<()> {
        self.t += 1;
        for l in 0..net.weights.len() {
            adam_step(
                net.weights[l].as_mut_slice(),
                grads.d_weights[l].as_slice(),
                self.m_weights[l].as_mut_slice(),
                self.v_weights[l].as_mut_slice(),
                self.t,
                lr,
                cfg,
            )?;
            adam_step(
                &mut net.biases[l],
                &grads.d_biases[l],
                &mut self.m_biases[l],
                &mut self.v_biases[l],
                self.t,
                lr,
                cfg,
            )?;
        }
        Ok(())
    }
}

/// Mean squared error over all entries and its gradient with respect to the
/// predictions.
pub fn l2_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            op: "l2_loss",
            lhs_rows: pred.rows(),
            lhs_cols: pred.cols(),
            rhs_rows: target.rows(),
            rhs_cols: target.cols(),
        });
    }
    let n = pred.as_slice().len() as f64;
    let mut loss = 0.0;
    for (p, t) in pred.as_slice().iter().zip(target.as_slice()) {
        let d = p - t;
        loss += d * d;
    }
    loss /= n;
    let mut grad = pred.clone();
    grad.zip_map_inplace(target, |p, t| 2.0 * (p - t) / n)?;
    Ok((loss, grad))
}

/// Boolean masks aligned with a network's parameters; `true` marks a frozen
/// entry whose gradient is forced to zero (so its Adam moments stay zero
/// and the parameter is bit-invariant).
#[derive(Debug, Clone)]
pub struct FreezeMask {
    pub weights: Vec<Vec<bool>>,
    pub biases: Vec<Vec<bool>>,
}

impl FreezeMask {
    /// Mask with nothing frozen.
    pub fn none(net: &NetworkState) -> Self {
        FreezeMask {
            weights: net.weights.iter().map(|w| vec![false; w.rows() * w.cols()]).collect(),
            biases: net.biases.iter().map(|b| vec![false; b.len()]).collect(),
        }
    }

    /// Mask with every parameter frozen.
    pub fn all(net: &NetworkState) -> Self {
        FreezeMask {
            weights: net.weights.iter().map(|w| vec![true; w.rows() * w.cols()]).collect(),
            biases: net.biases.iter().map(|b| vec![true; b.len()]).collect(),
        }
    }

    /// Freeze the parameters of `wide` that were embedded from a network of
    /// hidden width `old_width`: top-left weight blocks, the first
    /// `old_width` hidden biases, the first `old_width` output columns, and
    /// the output bias.
    pub fn pre_widen(wide: &NetworkState, old_width: usize) -> Result<Self> {
        let mut mask = FreezeMask::none(wide);
        let n_layers = wide.n_layers();
        let mut old_dims = wide.layer_dims.clone();
        for d in old_dims.iter_mut().take(n_layers).skip(1) {
            *d = old_width;
        }
        for l in 0..n_layers {
            let w = &wide.weights[l];
            let (frozen_rows, frozen_cols) = (old_dims[l + 1], old_dims[l]);
            for i in 0..frozen_rows {
                for j in 0..frozen_cols {
                    mask.weights[l][i * w.cols() + j] = true;
                }
            }
            for entry in mask.biases[l].iter_mut().take(frozen_rows) {
                *entry = true;
            }
        }
        Ok(mask)
    }

    pub fn matches(&self, net: &NetworkState) -> bool {
        self.weights.len() == net.weights.len()
            && self.biases.len() == net.biases.len()
            && self
                .weights
                .iter()
                .zip(&net.weights)
                .all(|(m, w)| m.len() == w.rows() * w.cols())
            && self.biases.iter().zip(&net.biases).all(|(m, b)| m.len() == b.len())
    }

    fn apply(&self, grads: &mut Gradients) {
        for (l, mask) in self.weights.iter().enumerate() {
            let g = grads.d_weights[l].as_mut_slice();
            for (gi, &frozen) in g.iter_mut().zip(mask) {
                if frozen {
                    *gi = 0.0;
                }
            }
        }
        for (l, mask) in self.biases.iter().enumerate() {
            for (gi, &frozen) in grads.d_biases[l].iter_mut().zip(mask) {
                if frozen {
                    *gi = 0.0;
                }
            }
        }
    }
}

/// One log record of the training loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPoint {
    pub iteration: usize,
    pub loss: f64,
    pub metric: f64,
}

pub type FitLog = Vec<LogPoint>;

/// Stream index for the batch sampler inside [`fit`]; widening inside
/// [`stream_fit`] uses the next one.
const SAMPLER_STREAM: u64 = 0x5A;
const WIDEN_STREAM: u64 = 0x3B;

/// Run `cfg.iterations` Adam steps on `net`.
///
/// `sampler(iter, rng)` must yield a `(coords, targets)` batch for each
/// iteration; the rng it receives is a child of `cfg.seed`, so the batch
/// sequence is reproducible. `metric`, when given, is evaluated at every
/// log point and stored in the log's third column (NaN otherwise).
pub fn fit(
    net: &mut NetworkState,
    mut sampler: impl FnMut(usize, &mut Rng) -> (Matrix, Matrix),
    cfg: &TrainConfig,
    freeze: Option<&FreezeMask>,
    metric: Option<&dyn Fn(&NetworkState) -> f64>,
) -> Result<FitLog> {
    cfg.validate()?;
    if let Some(mask) = freeze {
        if !mask.matches(net) {
            return Err(Error::invalid(
                "fit: freeze mask shapes do not match the network".to_string(),
            ));
        }
    }
    let mut sample_rng = Rng::new(cfg.seed).child(SAMPLER_STREAM);
    let mut adam = AdamState::new(net);
    let mut log = Vec::new();
    let mut lr = cfg.lr;
    for it in 1..=cfg.iterations {
        let (coords, targets) = sampler(it, &mut sample_rng);
        let (out, tape) = forward_with_tape(net, &coords)?;
        let (loss, d_out) = l2_loss(&out, &targets)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it });
        }
        let mut grads = backward(net, &tape, &d_out)?;
        if let Some(mask) = freeze {
            mask.apply(&mut grads);
        }
        adam.step(net, &grads, lr, cfg)?;
        lr *= cfg.lr_decay;
        if it % cfg.log_every.max(1) == 0 || it == cfg.iterations {
            let metric_value = metric.map(|f| f(net)).unwrap_or(f64::NAN);
            log.push(LogPoint {
                iteration: it,
                loss,
                metric: metric_value,
            });
        }
    }
    Ok(log)
}

/// One stage of a progressive-widening plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub width: usize,
    pub iterations: usize,
    /// Ring for the biases of units added when entering this stage; unused
    /// (and may be `None`) for the first stage.
    pub ring: Option<RingInit>,
}

/// Per-stage output of [`stream_fit`].
#[derive(Debug, Clone)]
pub struct StageLog {
    pub width: usize,
    pub log: FitLog,
}

/// Progressive training: the first stage trains `net0` as-is, each later
/// stage widens the network with that stage's ring, freezes everything
/// pre-existing, and trains only the new parameters. Stage `s` uses seed
/// `child(cfg.seed, s)` for its batches, so the whole schedule is
/// reproducible.
pub fn stream_fit(
    net0: NetworkState,
    plan: &[Stage],
    mut sampler: impl FnMut(usize, &mut Rng) -> (Matrix, Matrix),
    cfg: &TrainConfig,
    scheme: &InitScheme,
    metric: Option<&dyn Fn(&NetworkState) -> f64>,
) -> Result<(NetworkState, Vec<StageLog>)> {
    if plan.is_empty() {
        return Err(Error::invalid("stream_fit: empty stage plan".to_string()));
    }
    if !plan.windows(2).all(|w| w[0].width < w[1].width) {
        return Err(Error::invalid(
            "stream_fit: stage widths must be strictly increasing".to_string(),
        ));
    }
    let width0 = net0.uniform_hidden_width().ok_or_else(|| {
        Error::invalid("stream_fit: network must have a uniform hidden width".to_string())
    })?;
    if width0 != plan[0].width {
        return Err(Error::invalid(format!(
            "stream_fit: network width {width0} does not match first stage width {}",
            plan[0].width
        )));
    }

    let root = Rng::new(cfg.seed);
    let mut net = net0;
    let mut logs = Vec::with_capacity(plan.len());
    for (s, stage) in plan.iter().enumerate() {
        let mut stage_cfg = cfg.clone();
        stage_cfg.iterations = stage.iterations;
        stage_cfg.seed = root.child(s as u64).seed();
        let freeze = if s == 0 {
            None
        } else {
            let old_width = plan[s - 1].width;
            let ring = stage.ring.ok_or_else(|| {
                Error::invalid(format!("stream_fit: stage {s} needs a ring for widening"))
            })?;
            let mut widen_rng = root.child(WIDEN_STREAM + s as u64);
            let stage_scheme = InitScheme {
                ring: Some(ring),
                ..*scheme
            };
            net = widen(&net, stage.width, &stage_scheme, &mut widen_rng)?;
            Some(FreezeMask::pre_widen(&net, old_width)?)
        };
        let log = fit(&mut net, &mut sampler, &stage_cfg, freeze.as_ref(), metric)?;
        logs.push(StageLog {
            width: stage.width,
            log,
        });
    }
    Ok((net, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationSpec;
    use crate::network::{forward, init_network, WeightRule};

    fn scheme(k: f64) -> InitScheme {
        InitScheme::new(WeightRule::SirenUniform, k).unwrap()
    }

    #[test]
    fn adam_zero_gradient_leaves_params_unchanged() {
        let mut theta = vec![1.5, -2.0];
        let grad = vec![0.0, 0.0];
        let mut m = vec![0.0, 0.0];
        let mut v = vec![0.0, 0.0];
        let cfg = TrainConfig::default();
        adam_step(&mut theta, &grad, &mut m, &mut v, 1, cfg.lr, &cfg).unwrap();
        assert_eq!(theta, vec![1.5, -2.0]);
        assert_eq!(m, vec![0.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    /// Scalar Adam recursion written out independently of `adam_step`.
    fn adam_oracle(theta0: f64, grads: &[f64], cfg: &TrainConfig) -> f64 {
        let (mut theta, mut m, mut v) = (theta0, 0.0, 0.0);
        for (i, &g) in grads.iter().enumerate() {
            let t = (i + 1) as i32;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let mh = m / (1.0 - cfg.beta1.powi(t));
            let vh = v / (1.0 - cfg.beta2.powi(t));
            theta -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        theta
    }

    #[test]
    fn adam_first_step_is_almost_lr_times_sign() {
        let cfg = TrainConfig {
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let mut theta = vec![0.0];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        adam_step(&mut theta, &[1.0], &mut m, &mut v, 1, cfg.lr, &cfg).unwrap();
        assert!((theta[0] + 1e-3).abs() < 1e-10);
        assert!((theta[0] - adam_oracle(0.0, &[1.0], &cfg)).abs() < 1e-15);
    }

    #[test]
    fn adam_descends_a_convex_bowl() {
        // f(theta) = theta^2, grad = 2 theta, 5 steps from theta = 1
        let cfg = TrainConfig {
            lr: 0.1,
            ..TrainConfig::default()
        };
        let mut theta = vec![1.0];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        let mut oracle_grads = Vec::new();
        let mut oracle_theta = 1.0;
        for t in 1..=5 {
            let g = 2.0 * theta[0];
            oracle_grads.push(2.0 * oracle_theta);
            adam_step(&mut theta, &[g], &mut m, &mut v, t, cfg.lr, &cfg).unwrap();
            oracle_theta = adam_oracle(1.0, &oracle_grads, &cfg);
        }
        assert!(theta[0].abs() < 1.0);
        assert!((theta[0] - oracle_theta).abs() < 1e-12);
    }

    #[test]
    fn adam_rejects_mismatched_buffers() {
        let cfg = TrainConfig::default();
        let mut theta = vec![0.0; 2];
        let mut m = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        assert!(adam_step(&mut theta, &[1.0], &mut m, &mut v, 1, cfg.lr, &cfg).is_err());
    }

    #[test]
    fn l2_loss_values_and_gradient() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(l2_loss(&a, &a).unwrap().0, 0.0);

        let mut b = a.clone();
        b.map_inplace(|x| x + 0.5);
        let (loss, _) = l2_loss(&b, &a).unwrap();
        assert!((loss - 0.25).abs() < 1e-15);

        // gradient against finite differences
        let target = Matrix::from_vec(1, 3, vec![0.3, -0.2, 0.9]).unwrap();
        let pred = Matrix::from_vec(1, 3, vec![0.1, 0.4, -0.5]).unwrap();
        let (_, grad) = l2_loss(&pred, &target).unwrap();
        let h = 1e-7;
        for i in 0..3 {
            let mut plus = pred.clone();
            plus.as_mut_slice()[i] += h;
            let mut minus = pred.clone();
            minus.as_mut_slice()[i] -= h;
            let fd =
                (l2_loss(&plus, &target).unwrap().0 - l2_loss(&minus, &target).unwrap().0) / (2.0 * h);
            assert!((fd - grad.as_slice()[i]).abs() < 1e-8);
        }

        assert!(l2_loss(&a, &Matrix::zeros(1, 4)).is_err());
    }

    fn toy_sampler(n: usize) -> (Matrix, Matrix) {
        let coords = Matrix::from_fn(n, 1, |i, _| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64);
        let targets = Matrix::from_fn(n, 1, |i, _| {
            (2.0 * std::f64::consts::PI * coords.get(i, 0)).sin()
        });
        (coords, targets)
    }

    #[test]
    fn zero_iterations_returns_identical_net() {
        let mut rng = Rng::new(1);
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let mut net = init_network(&[1, 16, 1], spec, &scheme(0.5), &mut rng).unwrap();
        let before = net.clone();
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        let log = fit(&mut net, |_, _| toy_sampler(8), &cfg, None, None).unwrap();
        assert!(log.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn full_freeze_keeps_net_bit_identical() {
        let mut rng = Rng::new(2);
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let mut net = init_network(&[1, 16, 1], spec, &scheme(0.5), &mut rng).unwrap();
        let before = net.clone();
        let mask = FreezeMask::all(&net);
        let cfg = TrainConfig {
            iterations: 50,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        fit(&mut net, |_, _| toy_sampler(8), &cfg, Some(&mask), None).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn fit_is_deterministic() {
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let cfg = TrainConfig {
            iterations: 80,
            lr: 1e-3,
            seed: 42,
            ..TrainConfig::default()
        };
        let run = || {
            let mut rng = Rng::new(9);
            let mut net = init_network(&[1, 16, 1], spec, &scheme(0.5), &mut rng).unwrap();
            fit(&mut net, |_, _| toy_sampler(32), &cfg, None, None).unwrap();
            net
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn fit_learns_a_1d_sine() {
        // sin(2 pi x) on [-1, 1], 3 hidden layers of width 64
        let mut rng = Rng::new(3);
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let mut net = init_network(&[1, 64, 64, 64, 1], spec, &scheme(1.0 / 2f64.sqrt()), &mut rng)
            .unwrap();
        let cfg = TrainConfig {
            iterations: 2000,
            lr: 1e-4,
            seed: 5,
            log_every: 500,
            ..TrainConfig::default()
        };
        let (coords, targets) = toy_sampler(256);
        let log = fit(
            &mut net,
            |_, _| (coords.clone(), targets.clone()),
            &cfg,
            None,
            None,
        )
        .unwrap();
        let final_loss = log.last().unwrap().loss;
        assert!(final_loss < 1e-4, "final mse {final_loss}");
    }

    #[test]
    fn windowed_mean_loss_is_non_increasing() {
        let mut rng = Rng::new(4);
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let mut net =
            init_network(&[1, 32, 32, 1], spec, &scheme(1.0 / 2f64.sqrt()), &mut rng).unwrap();
        let cfg = TrainConfig {
            iterations: 2000,
            lr: 1e-4,
            seed: 6,
            log_every: 1,
            ..TrainConfig::default()
        };
        let (coords, targets) = toy_sampler(128);
        let log = fit(
            &mut net,
            |_, _| (coords.clone(), targets.clone()),
            &cfg,
            None,
            None,
        )
        .unwrap();
        let window_means: Vec<f64> = log
            .chunks(500)
            .map(|w| w.iter().map(|p| p.loss).sum::<f64>() / w.len() as f64)
            .collect();
        for pair in window_means.windows(2) {
            assert!(pair[1] <= pair[0], "window means {window_means:?}");
        }
    }

    #[test]
    fn one_stage_plan_matches_plain_fit() {
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let cfg = TrainConfig {
            iterations: 60,
            lr: 1e-3,
            seed: 11,
            ..TrainConfig::default()
        };
        let net0 = init_network(&[1, 16, 1], spec, &scheme(0.5), &mut Rng::new(12)).unwrap();

        let mut direct = net0.clone();
        let mut direct_cfg = cfg.clone();
        direct_cfg.seed = Rng::new(cfg.seed).child(0).seed();
        fit(&mut direct, |_, _| toy_sampler(16), &direct_cfg, None, None).unwrap();

        let plan = [Stage {
            width: 16,
            iterations: 60,
            ring: None,
        }];
        let (streamed, logs) =
            stream_fit(net0, &plan, |_, _| toy_sampler(16), &cfg, &scheme(0.5), None).unwrap();
        assert_eq!(logs.len(), 1);
        assert_eq!(streamed, direct);
    }

    #[test]
    fn later_stages_never_touch_frozen_parameters() {
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let cfg = TrainConfig {
            iterations: 40,
            lr: 1e-3,
            seed: 21,
            ..TrainConfig::default()
        };
        let net0 = init_network(&[1, 8, 8, 1], spec, &scheme(0.5), &mut Rng::new(22)).unwrap();
        let ring = RingInit::new(2.0, 3.0).unwrap();
        let plan = [
            Stage { width: 8, iterations: 40, ring: None },
            Stage { width: 16, iterations: 40, ring: Some(ring) },
        ];

        // run stage 1 alone to know its final parameters
        let plan1 = &plan[..1];
        let (stage1_net, _) = stream_fit(
            net0.clone(),
            plan1,
            |_, _| toy_sampler(16),
            &cfg,
            &scheme(0.5),
            None,
        )
        .unwrap();

        let (final_net, logs) = stream_fit(
            net0,
            &plan,
            |_, _| toy_sampler(16),
            &cfg,
            &scheme(0.5),
            None,
        )
        .unwrap();
        assert_eq!(logs.len(), 2);
        assert_eq!(final_net.stage_widths, vec![8, 16]);

        // pre-existing blocks bit-identical to the stage-1 result
        for l in 0..final_net.n_layers() {
            let old = &stage1_net.weights[l];
            let new = &final_net.weights[l];
            for i in 0..old.rows() {
                for j in 0..old.cols() {
                    assert_eq!(old.get(i, j), new.get(i, j), "layer {l} ({i},{j})");
                }
            }
            for (i, &b) in stage1_net.biases[l].iter().enumerate() {
                assert_eq!(b, final_net.biases[l][i]);
            }
        }

        // decoding at the old width reproduces the stage-1 function bitwise
        let x = Matrix::from_fn(7, 1, |i, _| -1.0 + i as f64 * 0.3);
        assert_eq!(
            crate::network::decode_at_width(&final_net, 8, &x).unwrap(),
            forward(&stage1_net, &x).unwrap()
        );
    }
}
