//! Activation functions: Sine, Gauss and real-Gabor wavelet backbones plus
//! their variable-periodic extensions.
//!
//! The extension composes the backbone with `(|x|+1)x` (periodic backbone)
//! or with `sin(omega_f (|x|+1) x)` and a `1/omega_f` rescaling of the
//! backbone's scale parameters (non-periodic backbones). The local
//! oscillation frequency then grows with `|x|`, so shifting the input by a
//! bias selects sub-functions of different frequency.
//!
//! The wavelet here is the real part of the complex Gabor,
//! `cos(omega0 x) * exp(-(s0 x)^2)`, which keeps the whole network
//! real-valued.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastmath;

/// Default rate parameter of the variable-periodic wrapper.
pub const DEFAULT_OMEGA_F: f64 = 2.5;

/// Backbone nonlinearity. All three are continuous; piecewise-linear
/// functions such as ReLU cannot take the variable-periodic extension and
/// are deliberately not representable here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    Sine,
    Gauss,
    #[serde(rename = "wavelet")]
    WaveletReal,
}

impl Backbone {
    pub fn name(self) -> &'static str {
        match self {
            Backbone::Sine => "sine",
            Backbone::Gauss => "gauss",
            Backbone::WaveletReal => "wavelet",
        }
    }
}

/// One activation function: backbone, scales, and the variable-periodic
/// switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub backbone: Backbone,
    /// Variable-periodic extension on/off.
    pub finer: bool,
    /// Angular scale of Sine / WaveletReal.
    pub omega0: f64,
    /// Width scale of Gauss / WaveletReal.
    pub s0: f64,
    /// Rate of the variable-periodic wrapper for non-periodic backbones.
    pub omega_f: f64,
}

impl ActivationSpec {
    pub fn new(backbone: Backbone, finer: bool, omega0: f64, s0: f64, omega_f: f64) -> Result<Self> {
        let spec = ActivationSpec {
            backbone,
            finer,
            omega0,
            s0,
            omega_f,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sine(omega0: f64, finer: bool) -> Result<Self> {
        Self::new(Backbone::Sine, finer, omega0, 1.0, DEFAULT_OMEGA_F)
    }

    pub fn gauss(s0: f64, finer: bool) -> Result<Self> {
        Self::new(Backbone::Gauss, finer, 1.0, s0, DEFAULT_OMEGA_F)
    }

    pub fn wavelet(omega0: f64, s0: f64, finer: bool) -> Result<Self> {
        Self::new(Backbone::WaveletReal, finer, omega0, s0, DEFAULT_OMEGA_F)
    }

    pub fn validate(&self) -> Result<()> {
        let uses_omega0 = matches!(self.backbone, Backbone::Sine | Backbone::WaveletReal);
        let uses_s0 = matches!(self.backbone, Backbone::Gauss | Backbone::WaveletReal);
        if uses_omega0 && !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid(format!(
                "activation: omega0 must be positive and finite, got {}",
                self.omega0
            )));
        }
        if uses_s0 && !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::invalid(format!(
                "activation: s0 must be positive and finite, got {}",
                self.s0
            )));
        }
        if self.finer
            && self.backbone != Backbone::Sine
            && !(self.omega_f > 0.0 && self.omega_f.is_finite())
        {
            return Err(Error::invalid(format!(
                "activation: omega_f must be positive and finite, got {}",
                self.omega_f
            )));
        }
        Ok(())
    }
}

/// `(|x|+1)x`, the variable-periodic reparameterization of the axis.
#[inline]
fn warp(x: f64) -> f64 {
    (x.abs() + 1.0) * x
}

/// `d/dx (|x|+1)x = 2|x|+1`; the two-sided limit at 0 is 1.
#[inline]
fn warp_deriv(x: f64) -> f64 {
    2.0 * x.abs() + 1.0
}

/// Activation value and exact analytic derivative from one shared
/// argument reduction (the derivative reuses the sine/cosine and
/// exponential of the value). At `x = 0` the inner `(|x|+1)x` term uses
/// its two-sided limit derivative 1. Panics on non-finite input.
#[inline]
pub fn act_with_deriv(spec: &ActivationSpec, x: f64) -> (f64, f64) {
    assert!(x.is_finite(), "activation: non-finite input {x}");
    match (spec.backbone, spec.finer) {
        (Backbone::Sine, false) => {
            let (s, c) = fastmath::sin_cos(spec.omega0 * x);
            (s, spec.omega0 * c)
        }
        (Backbone::Sine, true) => {
            let (s, c) = fastmath::sin_cos(spec.omega0 * warp(x));
            (s, spec.omega0 * warp_deriv(x) * c)
        }
        (Backbone::Gauss, false) => {
            let sx = spec.s0 * x;
            let env = (-sx * sx).exp();
            (env, -2.0 * spec.s0 * sx * env)
        }
        (Backbone::Gauss, true) => {
            let scale = spec.s0 / spec.omega_f;
            let (u, cu) = fastmath::sin_cos(spec.omega_f * warp(x));
            let du = spec.omega_f * warp_deriv(x) * cu;
            let a = scale * u;
            let env = (-a * a).exp();
            (env, -2.0 * scale * a * env * du)
        }
        (Backbone::WaveletReal, false) => {
            let sx = spec.s0 * x;
            let env = (-sx * sx).exp();
            let (sin_w, cos_w) = fastmath::sin_cos(spec.omega0 * x);
            (
                cos_w * env,
                (-spec.omega0 * sin_w - 2.0 * spec.s0 * sx * cos_w) * env,
            )
        }
        (Backbone::WaveletReal, true) => {
            let scale = spec.s0 / spec.omega_f;
            let freq = spec.omega0 / spec.omega_f;
            let (u, cu) = fastmath::sin_cos(spec.omega_f * warp(x));
            let du = spec.omega_f * warp_deriv(x) * cu;
            let a = scale * u;
            let env = (-a * a).exp();
            let (sin_f, cos_f) = fastmath::sin_cos(freq * u);
            (
                cos_f * env,
                (-freq * sin_f - 2.0 * scale * a * cos_f) * env * du,
            )
        }
    }
}

/// Evaluate the activation at a scalar. Panics on non-finite input.
#[inline]
pub fn act(spec: &ActivationSpec, x: f64) -> f64 {
    act_with_deriv(spec, x).0
}

/// Exact analytic derivative of [`act`].
#[inline]
pub fn act_deriv(spec: &ActivationSpec, x: f64) -> f64 {
    act_with_deriv(spec, x).1
}

/// The `m`-th nonnegative zero of `sin((|x|+1)x)`:
/// `x_m = (sqrt(4 m pi + 1) - 1) / 2`. Consecutive zeros bound the
/// sub-functions of the variable-periodic sine.
pub fn subfunction_boundary(m: u32) -> f64 {
    ((4.0 * m as f64 * PI + 1.0).sqrt() - 1.0) / 2.0
}

/// Closed-form frequency enlargement ratios of the first sub-functions of
/// `sin((|x|+1)x)` relative to `sin(x)`:
/// `c1 = 2 pi / (sqrt(4 pi + 1) - 1)` (standard sine to first
/// sub-function) and
/// `c2 = (sqrt(4 pi + 1) - 1) / (sqrt(12 pi + 1) - sqrt(4 pi + 1))`
/// (first to second sub-function).
pub fn frequency_scale_constants() -> (f64, f64) {
    let r1 = (4.0 * PI + 1.0).sqrt();
    let r2 = (12.0 * PI + 1.0).sqrt();
    let c1 = 2.0 * PI / (r1 - 1.0);
    let c2 = (r1 - 1.0) / (r2 - r1);
    (c1, c2)
}

/// `n` uniformly spaced samples of the activation over `[lo, hi]`,
/// endpoints included.
pub fn sample_curve(spec: &ActivationSpec, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(lo < hi) {
        return Err(Error::invalid(format!(
            "sample_curve: need lo < hi, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!("sample_curve: need n >= 2, got {n}")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let x = if i + 1 == n { hi } else { lo + i as f64 * step };
            (x, act(spec, x))
        })
        .collect())
}
