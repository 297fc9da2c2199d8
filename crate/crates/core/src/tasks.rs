//! Fitting pipelines (1D signals, 2D images, 3D signed distance fields),
//! coordinate grids, the capacity-convergence gap experiment, and the
//! first-layer neuron frequency analyzer.

use crate::activation::{act, ActivationSpec, Backbone};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::matrix::Matrix;
use crate::metrics::{psnr, sign_iou};
use crate::network::{forward, init_network, InitScheme, NetworkState};
use crate::rng::Rng;
use crate::sdf::AnalyticSdf;
use crate::train::{fit, FitLog, TrainConfig};

/// Regular grid over `[-1, 1]^d` at cell centers: along axis `a` with
/// `dims[a]` cells, coordinate `i` is `-1 + 2 (i + 0.5) / dims[a]`.
/// Enumeration is row-major with the last axis fastest.
pub fn coord_grid(dims: &[usize]) -> Matrix {
    assert!(!dims.is_empty() && dims.iter().all(|&d| d > 0), "dims must be positive");
    let total: usize = dims.iter().product();
    let d = dims.len();
    let mut out = Matrix::zeros(total, d);
    for r in 0..total {
        let mut rem = r;
        let row = out.row_mut(r);
        for a in (0..d).rev() {
            let i = rem % dims[a];
            rem /= dims[a];
            row[a] = -1.0 + 2.0 * (i as f64 + 0.5) / dims[a] as f64;
        }
    }
    out
}

/// Forward over a large batch in fixed-size row chunks (bitwise equal to a
/// single call; keeps peak memory bounded).
pub fn predict_chunked(net: &NetworkState, coords: &Matrix, chunk: usize) -> Result<Matrix> {
    let n = coords.rows();
    let mut out = Matrix::zeros(n, net.output_dim());
    let mut row = 0;
    while row < n {
        let hi = (row + chunk).min(n);
        let part = forward(net, &coords.slice_rows(row, hi))?;
        for (i, r) in (row..hi).enumerate() {
            out.row_mut(r).copy_from_slice(part.row(i));
        }
        row = hi;
    }
    Ok(out)
}

/// Evaluate the network over the full image grid, clamped to `[0, 1]`.
pub fn reconstruct_image(
    net: &NetworkState,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<ImageGrid> {
    let coords = coord_grid(&[height, width]);
    let pred = predict_chunked(net, &coords, 16_384)?;
    let mut img = ImageGrid::from_pixels(width, height, channels, pred.into_vec())?;
    img.clamp();
    Ok(img)
}

fn image_dataset(image: &ImageGrid) -> (Matrix, Matrix) {
    let coords = coord_grid(&[image.height, image.width]);
    let targets = Matrix::from_vec(image.n_pixels(), image.channels, image.pixels.clone())
        .expect("pixel count matches grid");
    (coords, targets)
}

/// Minibatch-with-replacement (or full-batch when `batch_size` is 0 or at
/// least the dataset size) sampler over a fixed dataset.
fn dataset_sampler(
    coords: Matrix,
    targets: Matrix,
    batch_size: usize,
) -> impl FnMut(usize, &mut Rng) -> (Matrix, Matrix) {
    let n = coords.rows();
    move |_, rng| {
        if batch_size == 0 || batch_size >= n {
            (coords.clone(), targets.clone())
        } else {
            let mut bc = Matrix::zeros(batch_size, coords.cols());
            let mut bt = Matrix::zeros(batch_size, targets.cols());
            for i in 0..batch_size {
                let idx = (rng.next_u64() % n as u64) as usize;
                bc.row_mut(i).copy_from_slice(coords.row(idx));
                bt.row_mut(i).copy_from_slice(targets.row(idx));
            }
            (bc, bt)
        }
    }
}

/// Train a coordinate network on an image. Returns the trained network,
/// the metric log (third column: full-image PSNR), and the reconstruction.
pub fn fit_image(
    image: &ImageGrid,
    hidden: &[usize],
    activation: ActivationSpec,
    scheme: &InitScheme,
    cfg: &TrainConfig,
) -> Result<(NetworkState, FitLog, ImageGrid)> {
    let mut dims = vec![2];
    dims.extend_from_slice(hidden);
    dims.push(image.channels);
    let mut net = init_network(&dims, activation, scheme, &mut Rng::new(cfg.seed))?;
    let (coords, targets) = image_dataset(image);
    let (w, h, c) = (image.width, image.height, image.channels);
    let target_img = image.clone();
    let metric = move |n: &NetworkState| match reconstruct_image(n, w, h, c) {
        Ok(recon) => psnr(&recon, &target_img, 1.0).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    };
    let log = fit(
        &mut net,
        dataset_sampler(coords, targets, cfg.batch_size),
        cfg,
        None,
        Some(&metric),
    )?;
    let recon = reconstruct_image(&net, w, h, c)?;
    Ok((net, log, recon))
}

/// Train a network on exact signed distances of an analytic shape, then
/// evaluate sign-IoU and mean absolute error on an `eval_grid^3` grid.
pub fn fit_sdf(
    sdf: &AnalyticSdf,
    hidden: &[usize],
    activation: ActivationSpec,
    scheme: &InitScheme,
    cfg: &TrainConfig,
    n_train: usize,
    eval_grid: usize,
) -> Result<(NetworkState, FitLog, f64, f64)> {
    if n_train == 0 || eval_grid == 0 {
        return Err(Error::invalid("fit_sdf: n_train and eval_grid must be positive".to_string()));
    }
    let mut dims = vec![3];
    dims.extend_from_slice(hidden);
    dims.push(1);
    let mut net = init_network(&dims, activation, scheme, &mut Rng::new(cfg.seed))?;

    let shape = *sdf;
    let sampler = move |_it: usize, rng: &mut Rng| {
        let mut coords = Matrix::zeros(n_train, 3);
        let mut targets = Matrix::zeros(n_train, 1);
        for i in 0..n_train {
            let p = [
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ];
            coords.row_mut(i).copy_from_slice(&p);
            targets.set(i, 0, shape.eval(p));
        }
        (coords, targets)
    };

    // fixed validation set for the logged metric (mean absolute error)
    let mut val_rng = Rng::new(cfg.seed).child(0x7E57);
    let mut val_coords = Matrix::zeros(2048, 3);
    let mut val_truth = vec![0.0; 2048];
    for i in 0..2048 {
        let p = [
            val_rng.uniform(-1.0, 1.0),
            val_rng.uniform(-1.0, 1.0),
            val_rng.uniform(-1.0, 1.0),
        ];
        val_coords.row_mut(i).copy_from_slice(&p);
        val_truth[i] = sdf.eval(p);
    }
    let metric = move |n: &NetworkState| match forward(n, &val_coords) {
        Ok(pred) => {
            pred.as_slice()
                .iter()
                .zip(&val_truth)
                .map(|(p, t)| (p - t).abs())
                .sum::<f64>()
                / val_truth.len() as f64
        }
        Err(_) => f64::NAN,
    };

    let log = fit(&mut net, sampler, cfg, None, Some(&metric))?;

    let (iou, mae) = eval_sdf(&net, sdf, eval_grid)?;
    Ok((net, log, iou, mae))
}

/// Sign-IoU and MAE of a trained SDF network on an `eval_grid^3` grid.
pub fn eval_sdf(net: &NetworkState, sdf: &AnalyticSdf, eval_grid: usize) -> Result<(f64, f64)> {
    let grid = coord_grid(&[eval_grid, eval_grid, eval_grid]);
    let pred = predict_chunked(net, &grid, 16_384)?;
    let truth: Vec<f64> = (0..grid.rows())
        .map(|i| {
            let r = grid.row(i);
            sdf.eval([r[0], r[1], r[2]])
        })
        .collect();
    let iou = sign_iou(pred.as_slice(), &truth)?;
    let mae = pred
        .as_slice()
        .iter()
        .zip(&truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / truth.len() as f64;
    Ok((iou, mae))
}

/// Train on `n_points` grid samples of a 1D signal over `[-1, 1]`
/// (full batch). The logged metric is the full-grid MSE.
pub fn fit_signal(
    signal: impl Fn(f64) -> f64,
    n_points: usize,
    hidden: &[usize],
    activation: ActivationSpec,
    scheme: &InitScheme,
    cfg: &TrainConfig,
) -> Result<(NetworkState, FitLog)> {
    let mut dims = vec![1];
    dims.extend_from_slice(hidden);
    dims.push(1);
    let mut net = init_network(&dims, activation, scheme, &mut Rng::new(cfg.seed))?;
    let coords = coord_grid(&[n_points]);
    let targets = Matrix::from_fn(n_points, 1, |i, _| signal(coords.get(i, 0)));
    let (mc, mt) = (coords.clone(), targets.clone());
    let metric = move |n: &NetworkState| match forward(n, &mc) {
        Ok(pred) => {
            pred.as_slice()
                .iter()
                .zip(mt.as_slice())
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / mt.as_slice().len() as f64
        }
        Err(_) => f64::NAN,
    };
    let log = fit(
        &mut net,
        dataset_sampler(coords, targets, 0),
        cfg,
        None,
        Some(&metric),
    )?;
    Ok((net, log))
}

/// Built-in multi-frequency demo signal for the signal-fitting task.
pub fn demo_signal(x: f64) -> f64 {
    use std::f64::consts::TAU;
    ((TAU * x).sin() + 0.5 * (4.0 * TAU * x).sin() + 0.25 * (16.0 * TAU * x).sin()) / 1.75
}

/// Result of the capacity-convergence gap experiment.
#[derive(Debug, Clone)]
pub struct GapResult {
    /// Standard form: scale parameter active in the activation.
    pub log_standard: FitLog,
    /// Scaled-init form: scale folded into the weight initialization.
    pub log_scaled: FitLog,
    pub psnr_standard: f64,
    pub psnr_scaled: f64,
}

/// Train the same backbone in its standard form (scale parameter `p` in
/// the activation, default weight init) and in the mathematically
/// equivalent scaled-init form (scale 1 in the activation, the standard
/// form's weight draws of every activated layer multiplied by `p`), with
/// identical seeds and budgets. Both arms draw the same initial numbers,
/// so the reparameterized arm represents exactly the same function at
/// initialization.
///
/// `p` is `omega0` for Sine and WaveletReal (which keeps `s0/omega0`
/// fixed) and `s0` for Gauss. With `p = 1` the two arms are bitwise
/// identical.
pub fn gap_experiment(
    backbone: Backbone,
    omega0: f64,
    s0: f64,
    image: &ImageGrid,
    hidden: &[usize],
    scheme: &InitScheme,
    cfg: &TrainConfig,
) -> Result<GapResult> {
    let (act_standard, act_scaled, p) = match backbone {
        Backbone::Sine => (
            ActivationSpec::sine(omega0, false)?,
            ActivationSpec::sine(1.0, false)?,
            omega0,
        ),
        Backbone::Gauss => (
            ActivationSpec::gauss(s0, false)?,
            ActivationSpec::gauss(1.0, false)?,
            s0,
        ),
        Backbone::WaveletReal => (
            ActivationSpec::wavelet(omega0, s0, false)?,
            ActivationSpec::wavelet(1.0, s0 / omega0, false)?,
            omega0,
        ),
    };

    let mut dims = vec![2];
    dims.extend_from_slice(hidden);
    dims.push(image.channels);
    let (coords, targets) = image_dataset(image);
    let (w, h, c) = (image.width, image.height, image.channels);
    let target_img = image.clone();
    let metric = move |n: &NetworkState| match reconstruct_image(n, w, h, c) {
        Ok(recon) => psnr(&recon, &target_img, 1.0).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    };

    let run = |activation: ActivationSpec, weight_scale: f64| -> Result<(FitLog, f64)> {
        // both arms draw with the standard activation so their initial
        // numbers coincide; the scaled arm then folds p into the weights
        // of the activated layers (the output layer has no scale
        // parameter to fold) and switches to the scale-1 activation
        let mut net = init_network(&dims, act_standard, scheme, &mut Rng::new(cfg.seed))?;
        net.activation = activation;
        if weight_scale != 1.0 {
            for l in 0..net.n_layers() - 1 {
                net.weights[l].scale(weight_scale);
            }
        }
        let log = fit(
            &mut net,
            dataset_sampler(coords.clone(), targets.clone(), cfg.batch_size),
            cfg,
            None,
            Some(&metric),
        )?;
        let recon = reconstruct_image(&net, w, h, c)?;
        let final_psnr = psnr(&recon, image, 1.0)?;
        Ok((log, final_psnr))
    };

    let (log_standard, psnr_standard) = run(act_standard, 1.0)?;
    let (log_scaled, psnr_scaled) = run(act_scaled, p)?;
    Ok(GapResult {
        log_standard,
        log_scaled,
        psnr_standard,
        psnr_scaled,
    })
}

/// An axis-aligned probe line through the input domain: the coordinate
/// along `axis` sweeps `[-1, 1)` while the others stay at `fixed`.
#[derive(Debug, Clone)]
pub struct ProbeLine {
    pub axis: usize,
    pub fixed: Vec<f64>,
}

impl ProbeLine {
    pub fn along_axis(axis: usize, d_in: usize) -> Result<Self> {
        if axis >= d_in {
            return Err(Error::invalid(format!(
                "probe line: axis {axis} out of range for {d_in} inputs"
            )));
        }
        Ok(ProbeLine {
            axis,
            fixed: vec![0.0; d_in],
        })
    }
}

/// Dominant frequency (in whole cycles per probe traversal) of every
/// first-layer neuron, from the peak non-DC bin of a radix-2 DFT magnitude
/// spectrum of the neuron's activation along the probe line. `None` flags
/// neurons with no frequency content (constant output).
pub fn neuron_dominant_freq(
    net: &NetworkState,
    probe: &ProbeLine,
    n_samples: usize,
) -> Result<Vec<Option<usize>>> {
    if n_samples < 64 || !n_samples.is_power_of_two() {
        return Err(Error::invalid(format!(
            "neuron_dominant_freq: n_samples must be a power of two >= 64, got {n_samples}"
        )));
    }
    if probe.fixed.len() != net.input_dim() || probe.axis >= net.input_dim() {
        return Err(Error::invalid(
            "neuron_dominant_freq: probe does not match the network input".to_string(),
        ));
    }
    let w0 = &net.weights[0];
    let b0 = &net.biases[0];
    let spec = net.activation;
    let n_neurons = w0.rows();
    let mut result = Vec::with_capacity(n_neurons);
    let mut re = vec![0.0; n_samples];
    let mut im = vec![0.0; n_samples];
    let mut coord = probe.fixed.clone();
    for k in 0..n_neurons {
        let wrow = w0.row(k);
        let mut amp = 0.0f64;
        for (j, r) in re.iter_mut().enumerate() {
            coord[probe.axis] = -1.0 + 2.0 * j as f64 / n_samples as f64;
            let pre: f64 = wrow.iter().zip(&coord).map(|(w, x)| w * x).sum::<f64>() + b0[k];
            *r = act(&spec, pre);
            amp = amp.max(r.abs());
        }
        im.fill(0.0);
        fft_radix2(&mut re, &mut im);
        let mut best_bin = 0;
        let mut best_mag = 0.0;
        for bin in 1..=n_samples / 2 {
            let mag = (re[bin] * re[bin] + im[bin] * im[bin]).sqrt();
            if mag > best_mag {
                best_mag = mag;
                best_bin = bin;
            }
        }
        if amp == 0.0 || best_mag < 1e-9 * n_samples as f64 * amp {
            result.push(None);
        } else {
            result.push(Some(best_bin));
        }
    }
    Ok(result)
}

/// In-place iterative radix-2 FFT (decimation in time).
fn fft_radix2(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -std::f64::consts::TAU / len as f64;
        let (ws, wc) = ang.sin_cos();
        for start in (0..n).step_by(len) {
            let mut wr = 1.0;
            let mut wi = 0.0;
            for k in 0..len / 2 {
                let (ur, ui) = (re[start + k], im[start + k]);
                let (vr0, vi0) = (re[start + k + len / 2], im[start + k + len / 2]);
                let vr = vr0 * wr - vi0 * wi;
                let vi = vr0 * wi + vi0 * wr;
                re[start + k] = ur + vr;
                im[start + k] = ui + vi;
                re[start + k + len / 2] = ur - vr;
                im[start + k + len / 2] = ui - vi;
                let nwr = wr * wc - wi * ws;
                wi = wr * ws + wi * wc;
                wr = nwr;
            }
        }
        len <<= 1;
    }
}
