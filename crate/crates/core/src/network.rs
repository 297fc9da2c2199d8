//! Coordinate MLPs: construction, initialization, forward/backward passes,
//! progressive widening, and checkpointing.
//!
//! A network with `layer_dims = [d_in, h_1, ..., h_{L-1}, d_out]` applies
//! `L - 1` activated affine layers followed by one linear layer. Weights
//! for layer `l` are stored `out x in`; evaluation is `z W^T + b` on
//! row-major batches.

use std::io::{Read, Write};

use crate::activation::{act, ActivationSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Weight initialization rule. Bounds are closed-form in the fan-in `n`
/// (and fan-out for Xavier): `U(-sqrt(6/n), sqrt(6/n))` or
/// `U(-sqrt(6/(n_in + n_out)), sqrt(6/(n_in + n_out)))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    SirenUniform,
    XavierUniform,
}

impl WeightRule {
    pub fn bound(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            WeightRule::SirenUniform => (6.0 / fan_in as f64).sqrt(),
            WeightRule::XavierUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        }
    }
}

/// Closed-form init bound for one layer. Hidden layers of sine networks
/// divide the bound by `omega0` (the SIREN convention): the activation
/// multiplies pre-activations by `omega0`, so without the division the
/// effective per-layer gain grows with `omega0` and training diverges for
/// common settings like `omega0 = 30`. The first layer is exempt: there
/// the `omega0` amplification is what spreads input frequencies.
pub fn layer_weight_bound(
    rule: WeightRule,
    activation: &ActivationSpec,
    layer_idx: usize,
    fan_in: usize,
    fan_out: usize,
) -> f64 {
    let bound = rule.bound(fan_in, fan_out);
    if layer_idx > 0 && activation.backbone == crate::activation::Backbone::Sine {
        bound / activation.omega0
    } else {
        bound
    }
}

/// Symmetric ring for biases of newly added units: magnitudes uniform in
/// `[inner * k, outer * k]`, sign equiprobable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingInit {
    pub inner: f64,
    pub outer: f64,
}

impl RingInit {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::invalid(format!(
                "ring init: need 0 <= inner < outer, got [{inner}, {outer}]"
            )));
        }
        Ok(RingInit { inner, outer })
    }
}

/// Full initialization scheme: weight rule, bias half-range `k`, and the
/// optional ring used when widening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitScheme {
    pub weight_rule: WeightRule,
    pub k_bias: f64,
    pub ring: Option<RingInit>,
}

impl InitScheme {
    pub fn new(weight_rule: WeightRule, k_bias: f64) -> Result<Self> {
        if !(k_bias >= 0.0 && k_bias.is_finite()) {
            return Err(Error::invalid(format!(
                "init scheme: k_bias must be finite and >= 0, got {k_bias}"
            )));
        }
        Ok(InitScheme {
            weight_rule,
            k_bias,
            ring: None,
        })
    }

    pub fn with_ring(mut self, ring: RingInit) -> Self {
        self.ring = Some(ring);
        self
    }
}

/// Parameters and metadata of one coordinate MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub layer_dims: Vec<usize>,
    /// weights[l] is `layer_dims[l+1] x layer_dims[l]`.
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub activation: ActivationSpec,
    /// Hidden widths recorded by progressive widening, ascending; empty for
    /// networks that were never widened.
    pub stage_widths: Vec<usize>,
    /// Bias init half-range the network was built with.
    pub k_bias: f64,
}

impl NetworkState {
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// The common hidden width, if all hidden layers share one.
    pub fn uniform_hidden_width(&self) -> Option<usize> {
        let hidden = &self.layer_dims[1..self.layer_dims.len() - 1];
        match hidden.first() {
            Some(&w) if hidden.iter().all(|&h| h == w) => Some(w),
            _ => None,
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn check_shapes(&self) -> Result<()> {
        let dims = &self.layer_dims;
        if dims.len() < 3 {
            return Err(Error::invalid(
                "network needs at least input, one hidden, and output dims".to_string(),
            ));
        }
        if self.weights.len() != dims.len() - 1 || self.biases.len() != dims.len() - 1 {
            return Err(Error::invalid("layer count mismatch".to_string()));
        }
        for l in 0..self.weights.len() {
            if self.weights[l].shape() != (dims[l + 1], dims[l]) || self.biases[l].len() != dims[l + 1]
            {
                return Err(Error::invalid(format!("layer {l} has inconsistent shapes")));
            }
        }
        Ok(())
    }
}

/// Build a network. Draw order is fixed: per layer (input to output),
/// weights row-major, then biases. Weight bounds follow
/// [`layer_weight_bound`]; hidden biases are `U(-k, k)`; the output bias
/// is zero (its draws are not consumed). The first layer uses the same
/// weight rule as the rest.
pub fn init_network(
    layer_dims: &[usize],
    activation: ActivationSpec,
    scheme: &InitScheme,
    rng: &mut Rng,
) -> Result<NetworkState> {
    activation.validate()?;
    if layer_dims.len() < 3 {
        return Err(Error::invalid(format!(
            "init_network: need at least [d_in, hidden, d_out], got {layer_dims:?}"
        )));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::invalid(format!(
            "init_network: all dims must be positive, got {layer_dims:?}"
        )));
    }
    let n_layers = layer_dims.len() - 1;
    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
        let bound = layer_weight_bound(scheme.weight_rule, &activation, l, fan_in, fan_out);
        let w = rng.fill_uniform(-bound, bound, fan_out * fan_in)?;
        weights.push(Matrix::from_vec(fan_out, fan_in, w)?);
        if l + 1 == n_layers {
            biases.push(vec![0.0; fan_out]);
        } else {
            biases.push(rng.fill_uniform(-scheme.k_bias, scheme.k_bias, fan_out)?);
        }
    }
    Ok(NetworkState {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
        activation,
        stage_widths: Vec::new(),
        k_bias: scheme.k_bias,
    })
}

/// Per-layer records of a forward pass, for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input batch (`z^0`).
    pub input: Matrix,
    /// Hidden pre-activations `W z + b`, one per activated layer.
    pub pre: Vec<Matrix>,
    /// Hidden activations, one per activated layer.
    pub post: Vec<Matrix>,
    /// Activation derivatives at the pre-activations.
    pub deriv: Vec<Matrix>,
}

/// Parameter gradients plus the gradient with respect to the input batch.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_input: Matrix,
}

/// `z W^T + b` through the row-blocked kernel (weights are transposed
/// once per call; the copy is negligible next to the product).
fn affine(net: &NetworkState, l: usize, z: &Matrix) -> Result<Matrix> {
    let wt = net.weights[l].transpose();
    let mut pre = z.matmul(&wt).map_err(|_| {
        Error::invalid(format!(
            "forward: input has {} columns, layer {l} expects {}",
            z.cols(),
            net.weights[l].cols()
        ))
    })?;
    pre.add_row_broadcast(&net.biases[l])?;
    Ok(pre)
}

/// Forward pass on a batch (one row per sample).
pub fn forward(net: &NetworkState, x: &Matrix) -> Result<Matrix> {
    net.check_shapes()?;
    let spec = net.activation;
    let mut z = x.clone();
    for l in 0..net.n_layers() - 1 {
        let mut pre = affine(net, l, &z)?;
        pre.ensure_finite(&format!("forward: pre-activation of layer {l}"))?;
        pre.map_inplace(|v| act(&spec, v));
        z = pre;
    }
    let out = affine(net, net.n_layers() - 1, &z)?;
    out.ensure_finite("forward: output layer")?;
    Ok(out)
}

/// Forward pass that also returns the tape needed by [`backward`].
pub fn forward_with_tape(net: &NetworkState, x: &Matrix) -> Result<(Matrix, Tape)> {
    net.check_shapes()?;
    let spec = net.activation;
    let mut pre_tape = Vec::with_capacity(net.n_layers() - 1);
    let mut post_tape = Vec::with_capacity(net.n_layers() - 1);
    let mut deriv_tape = Vec::with_capacity(net.n_layers() - 1);
    let mut z = x.clone();
    for l in 0..net.n_layers() - 1 {
        let pre = affine(net, l, &z)?;
        pre.ensure_finite(&format!("forward: pre-activation of layer {l}"))?;
        let (post, deriv) = pre.map_pair(|v| crate::activation::act_with_deriv(&spec, v));
        pre_tape.push(pre);
        z = post.clone();
        post_tape.push(post);
        deriv_tape.push(deriv);
    }
    let out = affine(net, net.n_layers() - 1, &z)?;
    out.ensure_finite("forward: output layer")?;
    Ok((
        out,
        Tape {
            input: x.clone(),
            pre: pre_tape,
            post: post_tape,
            deriv: deriv_tape,
        },
    ))
}

/// Reverse-mode gradients of `sum(output * output_grad)` with respect to
/// every parameter and to the input, given the tape of the forward pass.
pub fn backward(net: &NetworkState, tape: &Tape, output_grad: &Matrix) -> Result<Gradients> {
    let n_layers = net.n_layers();
    if tape.pre.len() != n_layers - 1
        || output_grad.shape() != (tape.input.rows(), net.output_dim())
    {
        return Err(Error::invalid(format!(
            "backward: tape/grad shapes do not match the network (grad {}x{}, batch {}, out {})",
            output_grad.rows(),
            output_grad.cols(),
            tape.input.rows(),
            net.output_dim()
        )));
    }
    for (l, pre) in tape.pre.iter().enumerate() {
        if pre.shape() != (tape.input.rows(), net.layer_dims[l + 1]) {
            return Err(Error::invalid(format!("backward: stale tape at layer {l}")));
        }
    }
    let mut d_weights = vec![Matrix::zeros(0, 0); n_layers];
    let mut d_biases = vec![Vec::new(); n_layers];

    // output layer
    let last = n_layers - 1;
    let z_prev = if last == 0 { &tape.input } else { &tape.post[last - 1] };
    d_weights[last] = output_grad.matmul_transa(z_prev)?;
    d_biases[last] = output_grad.col_sums();
    let mut d_z = output_grad.matmul(&net.weights[last])?;

    // activated layers, last to first
    for l in (0..n_layers - 1).rev() {
        let mut d_pre = d_z;
        d_pre.zip_map_inplace(&tape.deriv[l], |g, d| g * d)?;
        let below = if l == 0 { &tape.input } else { &tape.post[l - 1] };
        d_weights[l] = d_pre.matmul_transa(below)?;
        d_biases[l] = d_pre.col_sums();
        d_z = d_pre.matmul(&net.weights[l])?;
    }

    Ok(Gradients {
        d_weights,
        d_biases,
        d_input: d_z,
    })
}

/// Widen every hidden layer of `net` to `new_width`.
///
/// Existing parameters are embedded unchanged in the top-left blocks. New
/// unit rows are drawn by the scheme's weight rule with the layer's actual
/// new fan-in; connections from new units into pre-existing units
/// (including the output layer) start at zero, so decoding at the old
/// width reproduces the old network exactly. New hidden biases come from
/// the scheme's ring, scaled by the network's recorded `k_bias`.
///
/// Draw order per layer (input to output): new weight rows row-major, then
/// new bias entries (magnitude draw, then sign draw).
pub fn widen(
    net: &NetworkState,
    new_width: usize,
    scheme: &InitScheme,
    rng: &mut Rng,
) -> Result<NetworkState> {
    net.check_shapes()?;
    let old_width = net.uniform_hidden_width().ok_or_else(|| {
        Error::invalid("widen: network must have a uniform hidden width".to_string())
    })?;
    if new_width <= old_width {
        return Err(Error::invalid(format!(
            "widen: new width {new_width} must exceed current width {old_width}"
        )));
    }
    let ring = scheme.ring.ok_or_else(|| {
        Error::invalid("widen: init scheme must carry a ring for new biases".to_string())
    })?;
    let k = net.k_bias;
    let n_layers = net.n_layers();
    let mut dims = net.layer_dims.clone();
    for d in dims.iter_mut().take(n_layers).skip(1) {
        *d = new_width;
    }

    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let (old_out, old_in) = net.weights[l].shape();
        let (new_out, new_in) = (dims[l + 1], dims[l]);
        let mut w = Matrix::zeros(new_out, new_in);
        for i in 0..old_out {
            w.row_mut(i)[..old_in].copy_from_slice(net.weights[l].row(i));
            // columns old_in..new_in stay zero: new units must not disturb
            // pre-existing pre-activations
        }
        let bound = layer_weight_bound(scheme.weight_rule, &net.activation, l, new_in, new_out);
        for i in old_out..new_out {
            for j in 0..new_in {
                w.row_mut(i)[j] = rng.uniform(-bound, bound);
            }
        }
        weights.push(w);

        let mut b = net.biases[l].clone();
        if l + 1 < n_layers {
            for _ in old_out..new_out {
                let magnitude = rng.uniform(ring.inner * k, ring.outer * k);
                let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
                b.push(sign * magnitude);
            }
        }
        biases.push(b);
    }

    let mut stage_widths = net.stage_widths.clone();
    if stage_widths.is_empty() {
        stage_widths.push(old_width);
    }
    stage_widths.push(new_width);

    Ok(NetworkState {
        layer_dims: dims,
        weights,
        biases,
        activation: net.activation,
        stage_widths,
        k_bias: net.k_bias,
    })
}

/// Evaluate the sub-network that uses only the first `w` hidden units per
/// layer. `w` must be the current width or a recorded stage width.
pub fn decode_at_width(net: &NetworkState, w: usize, x: &Matrix) -> Result<Matrix> {
    let current = net.uniform_hidden_width().ok_or_else(|| {
        Error::invalid("decode_at_width: network must have a uniform hidden width".to_string())
    })?;
    if w == current {
        return forward(net, x);
    }
    if !net.stage_widths.contains(&w) {
        return Err(Error::invalid(format!(
            "decode_at_width: width {w} is not a recorded stage (stages: {:?})",
            net.stage_widths
        )));
    }
    let n_layers = net.n_layers();
    let mut dims = net.layer_dims.clone();
    for d in dims.iter_mut().take(n_layers).skip(1) {
        *d = w;
    }
    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        weights.push(net.weights[l].block(dims[l + 1], dims[l]));
        biases.push(net.biases[l][..dims[l + 1]].to_vec());
    }
    let sub = NetworkState {
        layer_dims: dims,
        weights,
        biases,
        activation: net.activation,
        stage_widths: Vec::new(),
        k_bias: net.k_bias,
    };
    forward(&sub, x)
}

const CHECKPOINT_VERSION: u64 = 1;

/// 17 significant digits: enough for exact `f64` round-trips.
pub(crate) fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        return "1e999".to_string(); // not expected in checkpoints
    }
    format!("{v:.16e}")
}

fn write_f64_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
}

/// Serialize a checkpoint. Weight matrices are flat row-major arrays; all
/// floats carry 17 significant digits so loading reproduces the state
/// bit-exactly.
pub fn save_checkpoint(net: &NetworkState, writer: &mut impl Write) -> Result<()> {
    net.check_shapes()?;
    let mut s = String::new();
    s.push_str(&format!("{{\n  \"format_version\": {CHECKPOINT_VERSION},\n"));
    s.push_str(&format!(
        "  \"layer_dims\": [{}],\n",
        net.layer_dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    s.push_str(&format!(
        "  \"activation\": {{\"backbone\": \"{}\", \"finer\": {}, \"omega0\": {}, \"s0\": {}, \"omega_f\": {}}},\n",
        net.activation.backbone.name(),
        net.activation.finer,
        fmt_f64(net.activation.omega0),
        fmt_f64(net.activation.s0),
        fmt_f64(net.activation.omega_f),
    ));
    s.push_str(&format!("  \"k_bias\": {},\n", fmt_f64(net.k_bias)));
    s.push_str(&format!(
        "  \"stage_widths\": [{}],\n",
        net.stage_widths
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    s.push_str("  \"weights\": [");
    for (l, w) in net.weights.iter().enumerate() {
        if l > 0 {
            s.push(',');
        }
        s.push_str("\n    ");
        write_f64_array(&mut s, w.as_slice());
    }
    s.push_str("\n  ],\n  \"biases\": [");
    for (l, b) in net.biases.iter().enumerate() {
        if l > 0 {
            s.push(',');
        }
        s.push_str("\n    ");
        write_f64_array(&mut s, b);
    }
    s.push_str("\n  ]\n}\n");
    writer
        .write_all(s.as_bytes())
        .map_err(|e| Error::Checkpoint(format!("write failed: {e}")))
}

/// Load and validate a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(reader: &mut impl Read) -> Result<NetworkState> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Checkpoint(format!("read failed: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("bad JSON: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Checkpoint("missing format_version".to_string()))?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unknown format_version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let layer_dims: Vec<usize> = parse_usize_array(&value, "layer_dims")?;
    let stage_widths: Vec<usize> = parse_usize_array(&value, "stage_widths")?;
    let activation: ActivationSpec = serde_json::from_value(
        value
            .get("activation")
            .cloned()
            .ok_or_else(|| Error::Checkpoint("missing activation".to_string()))?,
    )
    .map_err(|e| Error::Checkpoint(format!("bad activation: {e}")))?;
    let k_bias = value
        .get("k_bias")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::Checkpoint("missing k_bias".to_string()))?;

    let weights_raw = parse_nested_f64(&value, "weights")?;
    let biases = parse_nested_f64(&value, "biases")?;
    if layer_dims.len() < 3 || weights_raw.len() != layer_dims.len() - 1 {
        return Err(Error::Checkpoint("layer structure mismatch".to_string()));
    }
    let mut weights = Vec::with_capacity(weights_raw.len());
    for (l, flat) in weights_raw.into_iter().enumerate() {
        let (rows, cols) = (layer_dims[l + 1], layer_dims[l]);
        weights.push(
            Matrix::from_vec(rows, cols, flat)
                .map_err(|_| Error::Checkpoint(format!("weights[{l}] has the wrong length")))?,
        );
    }
    let net = NetworkState {
        layer_dims,
        weights,
        biases,
        activation,
        stage_widths,
        k_bias,
    };
    net.check_shapes()
        .map_err(|e| Error::Checkpoint(format!("inconsistent checkpoint: {e}")))?;
    Ok(net)
}

fn parse_usize_array(value: &serde_json::Value, key: &str) -> Result<Vec<usize>> {
    value
        .get(key)
        .and_then(|v| v.as_array())
        .map(|arr| {
            arr.iter()
                .map(|x| x.as_u64().map(|u| u as usize))
                .collect::<Option<Vec<_>>>()
        })
        .flatten()
        .ok_or_else(|| Error::Checkpoint(format!("missing or malformed {key}")))
}

fn parse_nested_f64(value: &serde_json::Value, key: &str) -> Result<Vec<Vec<f64>>> {
    value
        .get(key)
        .and_then(|v| v.as_array())
        .map(|arr| {
            arr.iter()
                .map(|inner| {
                    inner.as_array().map(|a| {
                        a.iter()
                            .map(|x| x.as_f64())
                            .collect::<Option<Vec<f64>>>()
                    })
                })
                .map(|o| o.flatten())
                .collect::<Option<Vec<Vec<f64>>>>()
        })
        .flatten()
        .ok_or_else(|| Error::Checkpoint(format!("missing or malformed {key}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Backbone;

    fn scheme(k: f64) -> InitScheme {
        InitScheme::new(WeightRule::SirenUniform, k).unwrap()
    }

    fn tiny_finer_sine() -> NetworkState {
        // 1-1-1 net: w=1, b=0, c_out=1, all other params 0
        NetworkState {
            layer_dims: vec![1, 1, 1],
            weights: vec![
                Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
                Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            ],
            biases: vec![vec![0.0], vec![0.0]],
            activation: ActivationSpec::sine(1.0, true).unwrap(),
            stage_widths: Vec::new(),
            k_bias: 0.0,
        }
    }

    #[test]
    fn init_zero_k_gives_zero_hidden_biases() {
        let mut rng = Rng::new(1);
        let net = init_network(
            &[2, 8, 8, 1],
            ActivationSpec::sine(30.0, true).unwrap(),
            &scheme(0.0),
            &mut rng,
        )
        .unwrap();
        for b in &net.biases {
            assert!(b.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn init_respects_siren_bound_and_uniform_spread() {
        let mut rng = Rng::new(2);
        let net = init_network(
            &[256, 256, 256, 1],
            ActivationSpec::sine(30.0, true).unwrap(),
            &scheme(1.0),
            &mut rng,
        )
        .unwrap();
        let bound = (6.0f64 / 256.0).sqrt();
        // first layer: plain sqrt(6/n)
        let w = net.weights[0].as_slice();
        assert!(w.iter().all(|&x| x.abs() <= bound));
        // variance of U(-b, b) is b^2/3
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        assert!((var - bound * bound / 3.0).abs() < 0.1 * bound * bound / 3.0);
        // hidden sine layer: bound divided by omega0
        let w1 = net.weights[1].as_slice();
        let hidden_bound = bound / 30.0;
        assert!(w1.iter().all(|&x| x.abs() <= hidden_bound));
        assert!(w1.iter().any(|&x| x.abs() > hidden_bound * 0.9));
    }

    #[test]
    fn init_is_deterministic() {
        let spec = ActivationSpec::gauss(10.0, true).unwrap();
        let a = init_network(&[2, 16, 16, 3], spec, &scheme(1.0), &mut Rng::new(7)).unwrap();
        let b = init_network(&[2, 16, 16, 3], spec, &scheme(1.0), &mut Rng::new(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_rejects_bad_dims() {
        let spec = ActivationSpec::sine(1.0, false).unwrap();
        assert!(init_network(&[2, 1], spec, &scheme(0.0), &mut Rng::new(0)).is_err());
        assert!(init_network(&[2, 0, 1], spec, &scheme(0.0), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn forward_all_zero_weights_is_zero() {
        let mut net = tiny_finer_sine();
        net.weights[0].set(0, 0, 0.0);
        net.weights[1].set(0, 0, 0.0);
        let out = forward(&net, &Matrix::row_vector(&[0.5])).unwrap();
        assert_eq!(out.as_slice(), &[0.0]);
    }

    #[test]
    fn forward_hand_evaluated_scalar() {
        let net = tiny_finer_sine();
        let out = forward(&net, &Matrix::row_vector(&[0.5])).unwrap();
        // sin((0.5 + 1) * 0.5) = sin(0.75)
        assert!((out.get(0, 0) - 0.6816387600233342).abs() < 1e-15);
    }

    #[test]
    fn batched_forward_equals_per_row() {
        let mut rng = Rng::new(3);
        let net = init_network(
            &[2, 16, 16, 3],
            ActivationSpec::wavelet(5.0, 2.5, true).unwrap(),
            &scheme(1.0),
            &mut rng,
        )
        .unwrap();
        let batch = Matrix::from_fn(16, 2, |_, _| rng.uniform(-1.0, 1.0));
        let full = forward(&net, &batch).unwrap();
        for i in 0..16 {
            let single = forward(&net, &Matrix::row_vector(batch.row(i))).unwrap();
            assert_eq!(single.as_slice(), full.row(i), "row {i}");
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let net = tiny_finer_sine();
        assert!(forward(&net, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn tape_is_consistent_with_forward() {
        let mut rng = Rng::new(4);
        let net = init_network(
            &[2, 8, 8, 1],
            ActivationSpec::sine(2.0, true).unwrap(),
            &scheme(0.5),
            &mut rng,
        )
        .unwrap();
        let x = Matrix::from_fn(5, 2, |_, _| rng.uniform(-1.0, 1.0));
        let plain = forward(&net, &x).unwrap();
        let (out, tape) = forward_with_tape(&net, &x).unwrap();
        assert_eq!(plain, out);
        // replaying act over taped pre-activations reproduces activations
        let spec = net.activation;
        for (pre, post) in tape.pre.iter().zip(&tape.post) {
            for (p, q) in pre.as_slice().iter().zip(post.as_slice()) {
                assert_eq!(act(&spec, *p), *q);
            }
        }
        // tape pre-activation of layer 1 for the 1-1-1 net is the input
        let tiny = tiny_finer_sine();
        let (_, t) = forward_with_tape(&tiny, &Matrix::row_vector(&[0.5])).unwrap();
        assert_eq!(t.pre[0].get(0, 0), 0.5);
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let net = tiny_finer_sine();
        let (_, tape) = forward_with_tape(&net, &Matrix::row_vector(&[0.5])).unwrap();
        let grads = backward(&net, &tape, &Matrix::zeros(1, 1)).unwrap();
        for w in &grads.d_weights {
            assert!(w.as_slice().iter().all(|&x| x == 0.0));
        }
        assert!(grads.d_input.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences_on_tiny_net() {
        let net = tiny_finer_sine();
        let x = Matrix::row_vector(&[0.5]);
        let (_, tape) = forward_with_tape(&net, &x).unwrap();
        let grads = backward(&net, &tape, &Matrix::from_vec(1, 1, vec![1.0]).unwrap()).unwrap();
        // d f / d w for f = c * sin((|wx|+1)wx): c * (2|wx|+1) cos(...) * x
        let h = 1e-6;
        let eval = |w: f64| {
            let mut n = tiny_finer_sine();
            n.weights[0].set(0, 0, w);
            forward(&n, &x).unwrap().get(0, 0)
        };
        let fd = (eval(1.0 + h) - eval(1.0 - h)) / (2.0 * h);
        let an = grads.d_weights[0].get(0, 0);
        assert!((fd - an).abs() / an.abs() < 1e-5, "fd={fd} analytic={an}");
    }

    #[test]
    fn backward_rejects_stale_tape() {
        let mut rng = Rng::new(5);
        let spec = ActivationSpec::sine(1.0, true).unwrap();
        let net = init_network(&[2, 8, 1], spec, &scheme(0.0), &mut rng).unwrap();
        let other = init_network(&[2, 4, 1], spec, &scheme(0.0), &mut rng).unwrap();
        let (_, tape) = forward_with_tape(&other, &Matrix::zeros(3, 2)).unwrap();
        assert!(backward(&net, &tape, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn widen_embeds_and_decodes_bitwise() {
        let mut rng = Rng::new(6);
        let spec = ActivationSpec::sine(30.0, true).unwrap();
        let net = init_network(&[2, 8, 8, 1], spec, &scheme(0.7), &mut rng).unwrap();
        let x = Matrix::from_fn(9, 2, |_, _| rng.uniform(-1.0, 1.0));
        let before = forward(&net, &x).unwrap();

        let ring = RingInit::new(2.0, 3.0).unwrap();
        let wider = widen(&net, 16, &scheme(0.7).with_ring(ring), &mut rng).unwrap();
        assert_eq!(wider.stage_widths, vec![8, 16]);
        let decoded = decode_at_width(&wider, 8, &x).unwrap();
        assert_eq!(before, decoded);

        // ring bias magnitudes in [2k, 3k]
        let k = net.k_bias;
        for l in 0..wider.n_layers() - 1 {
            for &b in &wider.biases[l][8..] {
                assert!(b.abs() >= 2.0 * k - 1e-15 && b.abs() <= 3.0 * k + 1e-15, "{b}");
            }
        }

        let wider2 = widen(&wider, 32, &scheme(0.7).with_ring(ring), &mut rng).unwrap();
        assert_eq!(wider2.stage_widths, vec![8, 16, 32]);
        // decode at both prior stages still bitwise
        assert_eq!(decode_at_width(&wider2, 8, &x).unwrap(), before);
        assert_eq!(
            decode_at_width(&wider2, 16, &x).unwrap(),
            forward(&wider, &x).unwrap()
        );
        // full width equals forward
        assert_eq!(
            decode_at_width(&wider2, 32, &x).unwrap(),
            forward(&wider2, &x).unwrap()
        );
    }

    #[test]
    fn widen_rejects_shrink_and_missing_ring() {
        let mut rng = Rng::new(7);
        let spec = ActivationSpec::sine(1.0, false).unwrap();
        let net = init_network(&[2, 8, 1], spec, &scheme(0.5), &mut rng).unwrap();
        let ring = RingInit::new(2.0, 3.0).unwrap();
        assert!(widen(&net, 4, &scheme(0.5).with_ring(ring), &mut rng).is_err());
        assert!(widen(&net, 16, &scheme(0.5), &mut rng).is_err());
    }

    #[test]
    fn decode_rejects_unrecorded_width() {
        let mut rng = Rng::new(8);
        let spec = ActivationSpec::sine(1.0, false).unwrap();
        let net = init_network(&[2, 8, 1], spec, &scheme(0.5), &mut rng).unwrap();
        assert!(decode_at_width(&net, 4, &Matrix::zeros(1, 2)).is_err());
        // full width works even with no recorded stages
        assert!(decode_at_width(&net, 8, &Matrix::zeros(1, 2)).is_ok());
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let mut rng = Rng::new(9);
        let spec = ActivationSpec::wavelet(20.0, 10.0, true).unwrap();
        let mut net = init_network(&[2, 8, 8, 3], spec, &scheme(1.0), &mut rng).unwrap();
        net.stage_widths = vec![8];
        let mut buf = Vec::new();
        save_checkpoint(&net, &mut buf).unwrap();
        let loaded = load_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(net, loaded);
    }

    #[test]
    fn checkpoint_rejects_unknown_version() {
        let mut rng = Rng::new(10);
        let spec = ActivationSpec::sine(1.0, false).unwrap();
        let net = init_network(&[1, 4, 1], spec, &scheme(0.0), &mut rng).unwrap();
        let mut buf = Vec::new();
        save_checkpoint(&net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(
            "\"format_version\": 1",
            "\"format_version\": 2",
        );
        assert!(load_checkpoint(&mut text.as_bytes()).is_err());
    }
}
