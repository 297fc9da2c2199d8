//! Empirical and closed-form neural tangent kernels with the spectral
//! diagnostics used to study trainability: diagonal dominance and the
//! count of large eigenvalues.
//!
//! The empirical estimator Monte Carlo averages the Gram matrix of
//! parameter gradients over freshly initialized networks. The closed-form
//! route evaluates, for a one-hidden-layer sine network
//! `f(x) = sum_k c_k sin(omega0 (|g_k|+1) g_k)` with `g_k = w_k x + b_k`,
//! the kernel
//!
//! ```text
//! K(x_i, x_j) = (x_i x_j + 1) * E  sum_k c_k^2
//!               * omega0^2 (2|g_k(x_i)|+1) (2|g_k(x_j)|+1)      (scale)
//!               * cos(omega0 (|g_k(x_i)|+1) g_k(x_i))
//!               * cos(omega0 (|g_k(x_j)|+1) g_k(x_j))           (sign)
//! ```
//!
//! which is the gradient Gram over the hidden-layer parameters `(w, b)`.
//! Gradients with respect to the output layer add `sum_k sigma sigma^T`
//! on top of this, a term of order `width/2` on the diagonal, so the two
//! routes only coincide when the empirical Gram is restricted to the same
//! parameter set ([`GradScope::HiddenOnly`]).

use rayon::prelude::*;

use crate::eig::eig_symmetric;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::network::{backward, forward_with_tape, init_network, InitScheme, NetworkState};
use crate::rng::Rng;

/// Which parameters enter the gradient Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradScope {
    /// Every weight and bias, output layer included.
    AllParams,
    /// Weights and biases of the activated layers only; matches the
    /// closed-form kernel.
    HiddenOnly,
}

/// Estimation parameters shared by the kernel routines.
#[derive(Debug, Clone, Copy)]
pub struct NtkConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Eigenvalues above this count as "large" (the 10^0 criterion).
    pub threshold: f64,
    pub scope: GradScope,
}

impl Default for NtkConfig {
    fn default() -> Self {
        NtkConfig {
            n_samples: 500,
            seed: 0,
            threshold: 1.0,
            scope: GradScope::AllParams,
        }
    }
}

/// Kernel matrix over the probe coordinates plus spectral diagnostics.
#[derive(Debug, Clone)]
pub struct NtkReport {
    pub kernel: Matrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// mean(diagonal) / mean(|off-diagonal|); infinite for a single probe.
    pub diag_dominance: f64,
    pub count_above: usize,
    pub threshold: f64,
    pub k_bias: f64,
    pub n_samples: usize,
}

fn flatten_gradients(
    grads: &crate::network::Gradients,
    scope: GradScope,
    n_layers: usize,
) -> Vec<f64> {
    let last = match scope {
        GradScope::AllParams => n_layers,
        GradScope::HiddenOnly => n_layers - 1,
    };
    let mut flat = Vec::new();
    for l in 0..last {
        flat.extend_from_slice(grads.d_weights[l].as_slice());
        flat.extend_from_slice(&grads.d_biases[l]);
    }
    flat
}

/// Gram matrix of per-probe gradient vectors for one parameter draw.
fn gram_for_sample(net: &NetworkState, probes: &Matrix, scope: GradScope) -> Result<Matrix> {
    let n = probes.rows();
    let d_out = net.output_dim();
    if d_out != 1 {
        return Err(Error::invalid(format!(
            "ntk: networks must have one output, got {d_out}"
        )));
    }
    let mut grad_vectors = Vec::with_capacity(n);
    for i in 0..n {
        let row = Matrix::row_vector(probes.row(i));
        let (_, tape) = forward_with_tape(net, &row)?;
        let ones = Matrix::from_vec(1, 1, vec![1.0])?;
        let grads = backward(net, &tape, &ones)?;
        let flat = flatten_gradients(&grads, scope, net.n_layers());
        if flat.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("ntk gradient at probe {i}"),
            });
        }
        grad_vectors.push(flat);
    }
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(&grad_vectors[i], &grad_vectors[j]);
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    Ok(gram)
}

fn diagnostics(kernel: Matrix, cfg: &NtkConfig, k_bias: f64) -> Result<NtkReport> {
    let n = kernel.rows();
    let (eigenvalues, _) = eig_symmetric(&kernel)?;
    let largest = eigenvalues.last().copied().unwrap_or(0.0);
    if let Some(&smallest) = eigenvalues.first() {
        if smallest < -1e-8 * largest.abs().max(1e-300) {
            return Err(Error::invalid(format!(
                "ntk: kernel is not positive semidefinite (lambda_min = {smallest})"
            )));
        }
    }
    let mut diag_sum = 0.0;
    let mut off_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag_sum += kernel.get(i, j);
            } else {
                off_sum += kernel.get(i, j).abs();
            }
        }
    }
    let diag_dominance = if n <= 1 {
        f64::INFINITY
    } else {
        (diag_sum / n as f64) / (off_sum / (n * (n - 1)) as f64)
    };
    let count_above = eigenvalues.iter().filter(|&&l| l > cfg.threshold).count();
    Ok(NtkReport {
        kernel,
        eigenvalues,
        diag_dominance,
        count_above,
        threshold: cfg.threshold,
        k_bias,
        n_samples: cfg.n_samples,
    })
}

/// Monte Carlo estimate of the NTK over `probes` (one coordinate per row):
/// parameters are drawn `cfg.n_samples` times (child seed per sample
/// index), per-probe gradients are computed by reverse mode, and the Gram
/// matrices are averaged in sample order.
pub fn ntk_empirical(
    layer_dims: &[usize],
    activation: crate::activation::ActivationSpec,
    init: &InitScheme,
    probes: &Matrix,
    cfg: &NtkConfig,
) -> Result<NtkReport> {
    if cfg.n_samples == 0 {
        return Err(Error::invalid("ntk: n_samples must be at least 1".to_string()));
    }
    if probes.rows() == 0 {
        return Err(Error::invalid("ntk: probes must be non-empty".to_string()));
    }
    let root = Rng::new(cfg.seed);
    let grams: Vec<Result<Matrix>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = root.child(s as u64);
            let net = init_network(layer_dims, activation, init, &mut rng)?;
            gram_for_sample(&net, probes, cfg.scope)
        })
        .collect();
    let n = probes.rows();
    let mut kernel = Matrix::zeros(n, n);
    for gram in grams {
        kernel.add_assign(&gram?)?;
    }
    kernel.scale(1.0 / cfg.n_samples as f64);
    diagnostics(kernel, cfg, init.k_bias)
}

/// Closed-form kernel of a one-hidden-layer variable-periodic sine network
/// (1D input, 1D output), Monte Carlo averaged over `(w_k, b_k, c_k)`
/// draws. Parameters come from [`init_network`] with the same child-seed
/// convention as [`ntk_empirical`], so equal seeds give the same draws.
pub fn ntk_analytic_1hidden(
    width: usize,
    omega0: f64,
    init: &InitScheme,
    probes: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Matrix> {
    if width == 0 || probes.is_empty() || n_samples == 0 {
        return Err(Error::invalid(
            "ntk_analytic_1hidden: width, probes and n_samples must be non-empty".to_string(),
        ));
    }
    let activation = crate::activation::ActivationSpec::sine(omega0, true)?;
    let layer_dims = [1usize, width, 1usize];
    let n = probes.len();
    let root = Rng::new(seed);
    let grams: Vec<Result<Matrix>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = root.child(s as u64);
            let net = init_network(&layer_dims, activation, init, &mut rng)?;
            // columns of the first-layer weight matrix (width x 1)
            let w = net.weights[0].as_slice();
            let b = &net.biases[0];
            let c = net.weights[1].as_slice(); // 1 x width, row-major

            // a[k][i] = c_k * omega0 (2|g|+1) cos(omega0 (|g|+1) g)
            let mut a = Matrix::zeros(width, n);
            for k in 0..width {
                let row = a.row_mut(k);
                for (i, &x) in probes.iter().enumerate() {
                    let g = w[k] * x + b[k];
                    let scale = omega0 * (2.0 * g.abs() + 1.0);
                    let sign = (omega0 * (g.abs() + 1.0) * g).cos();
                    row[i] = c[k] * scale * sign;
                }
            }
            let mut gram = a.matmul_transa(&a)?;
            for i in 0..n {
                for j in 0..n {
                    gram.set(i, j, gram.get(i, j) * (probes[i] * probes[j] + 1.0));
                }
            }
            Ok(gram)
        })
        .collect();
    let mut kernel = Matrix::zeros(n, n);
    for gram in grams {
        kernel.add_assign(&gram?)?;
    }
    kernel.scale(1.0 / n_samples as f64);
    Ok(kernel)
}

/// One empirical report per bias range in `k_values`, with identical
/// probes, architecture and seed family, for trend analysis.
pub fn ntk_sweep(
    layer_dims: &[usize],
    activation: crate::activation::ActivationSpec,
    init: &InitScheme,
    k_values: &[f64],
    probes: &Matrix,
    cfg: &NtkConfig,
) -> Result<Vec<NtkReport>> {
    if k_values.is_empty() {
        return Err(Error::invalid("ntk_sweep: k_values must be non-empty".to_string()));
    }
    k_values
        .iter()
        .map(|&k| {
            let scheme = InitScheme {
                k_bias: k,
                ..*init
            };
            ntk_empirical(layer_dims, activation, &scheme, probes, cfg)
        })
        .collect()
}
