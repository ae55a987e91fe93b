//! Robust loss kernels applied to Doppler residuals.
//!
//! All kernels are even functions of the residual with `rho(0) = 0`. The
//! quadratic kernel reproduces plain least squares; the remaining kernels
//! reduce the influence of large residuals so that moving objects and
//! multipath ghosts do not drag the velocity estimate.
//!
//! [`LossKind::BarronGeneral`] is a single family with a real shape
//! parameter `alpha` (robust for `alpha < 2`, quadratic at `alpha = 2`,
//! super-quadratic above) and scale `c`:
//!
//! ```text
//! rho(x) = (|alpha - 2| / alpha) * (((x/c)^2 / |alpha - 2| + 1)^(alpha/2) - 1)
//! ```
//!
//! with the removable singularities handled as exact special cases:
//!
//! - `alpha = 2`: quadratic, `(x/c)^2 / 2`
//! - `alpha = 0`: log kernel, `ln((x/c)^2 / 2 + 1)` (Cauchy-shaped)
//! - `alpha = -inf`: saturating kernel, `1 - exp(-(x/c)^2 / 2)`
//! - `alpha = 1` is a smooth L1, `alpha = -2` a rational saturating kernel
//!
//! Interior values are evaluated through `ln_1p`/`exp_m1` so the family stays
//! numerically continuous arbitrarily close to the special points.

use crate::types::{Detection, RadarScan};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default scale for the Huber kernel [m/s of Doppler residual].
pub const DEFAULT_SCALE_HUBER: f64 = 0.1;
/// Default scale for the Cauchy kernel [m/s].
pub const DEFAULT_SCALE_CAUCHY: f64 = 0.2;
/// Default scale for the general kernel [m/s].
pub const DEFAULT_SCALE_BARRON: f64 = 0.2;
/// Default truncation threshold for the truncated quadratic [m/s].
pub const DEFAULT_TRUNCATION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("loss scale c must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("truncation threshold must be positive and finite, got {0}")]
    InvalidTruncation(f64),
    #[error("shape alpha must be a real number or -inf, got {0}")]
    InvalidAlpha(f64),
}

/// Kernel family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// Quadratic `x^2 / 2`; the scale is ignored.
    L2,
    /// Quadratic up to the truncation threshold, constant beyond it.
    TruncatedL2,
    /// Quadratic within `|x| <= c`, linear outside.
    Huber,
    /// `c^2/2 * ln(1 + (x/c)^2)`: logarithmic growth.
    Cauchy,
    /// The adaptive family described in the module docs.
    BarronGeneral,
}

/// A robust kernel plus the per-detection weighting policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Scale [m/s]; used by `Huber`, `Cauchy` and `BarronGeneral`.
    pub c: f64,
    /// Shape of `BarronGeneral`, in `[-inf, 2]`.
    pub alpha: f64,
    /// Plateau threshold of `TruncatedL2` [m/s].
    pub truncation: f64,
    /// Weight residuals by SNR relative to the strongest detection in the
    /// scan (weighted least squares and friends).
    pub snr_weighting: bool,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self::l2()
    }
}

impl LossSpec {
    /// Plain least squares.
    pub fn l2() -> Self {
        Self {
            kind: LossKind::L2,
            c: DEFAULT_SCALE_CAUCHY,
            alpha: 2.0,
            truncation: DEFAULT_TRUNCATION,
            snr_weighting: false,
        }
    }

    pub fn truncated_l2() -> Self {
        Self { kind: LossKind::TruncatedL2, ..Self::l2() }
    }

    pub fn huber() -> Self {
        Self { kind: LossKind::Huber, c: DEFAULT_SCALE_HUBER, ..Self::l2() }
    }

    pub fn cauchy() -> Self {
        Self { kind: LossKind::Cauchy, c: DEFAULT_SCALE_CAUCHY, ..Self::l2() }
    }

    /// General kernel with the given shape.
    pub fn barron(alpha: f64) -> Self {
        Self {
            kind: LossKind::BarronGeneral,
            c: DEFAULT_SCALE_BARRON,
            alpha,
            ..Self::l2()
        }
    }

    pub fn with_scale(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_truncation(mut self, truncation: f64) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_snr_weighting(mut self, enabled: bool) -> Self {
        self.snr_weighting = enabled;
        self
    }

    /// Checks the parameters the selected kernel actually uses.
    pub fn validate(&self) -> Result<(), LossError> {
        match self.kind {
            LossKind::L2 => {}
            LossKind::TruncatedL2 => {
                if !(self.truncation > 0.0 && self.truncation.is_finite()) {
                    return Err(LossError::InvalidTruncation(self.truncation));
                }
            }
            LossKind::Huber | LossKind::Cauchy => {
                if !(self.c > 0.0 && self.c.is_finite()) {
                    return Err(LossError::InvalidScale(self.c));
                }
            }
            LossKind::BarronGeneral => {
                if !(self.c > 0.0 && self.c.is_finite()) {
                    return Err(LossError::InvalidScale(self.c));
                }
                if self.alpha.is_nan() || self.alpha == f64::INFINITY {
                    return Err(LossError::InvalidAlpha(self.alpha));
                }
            }
        }
        Ok(())
    }

    /// Weighted kernel value `weight * rho(x)`.
    pub fn eval(&self, x: f64, weight: f64) -> Result<f64, LossError> {
        self.validate()?;
        Ok(weight * self.rho(x))
    }

    /// Weighted kernel derivative `weight * d rho / d x`.
    pub fn eval_grad(&self, x: f64, weight: f64) -> Result<f64, LossError> {
        self.validate()?;
        Ok(weight * self.drho(x))
    }

    /// Kernel value; assumes `validate()` has passed.
    pub(crate) fn rho(&self, x: f64) -> f64 {
        match self.kind {
            LossKind::L2 => 0.5 * x * x,
            LossKind::TruncatedL2 => {
                let t = self.truncation;
                0.5 * (x * x).min(t * t)
            }
            LossKind::Huber => {
                let c = self.c;
                if x.abs() <= c {
                    0.5 * x * x
                } else {
                    c * (x.abs() - 0.5 * c)
                }
            }
            LossKind::Cauchy => {
                let q = (x / self.c).powi(2);
                0.5 * self.c * self.c * q.ln_1p()
            }
            LossKind::BarronGeneral => barron_rho(x, self.alpha, self.c),
        }
    }

    /// Kernel derivative; assumes `validate()` has passed.
    ///
    /// `TruncatedL2` returns zero on the plateau *and* at the threshold
    /// itself, so descent steps never react to saturated residuals.
    pub(crate) fn drho(&self, x: f64) -> f64 {
        match self.kind {
            LossKind::L2 => x,
            LossKind::TruncatedL2 => {
                if x.abs() < self.truncation {
                    x
                } else {
                    0.0
                }
            }
            LossKind::Huber => {
                let c = self.c;
                if x.abs() <= c {
                    x
                } else {
                    c * x.signum()
                }
            }
            LossKind::Cauchy => {
                let q = (x / self.c).powi(2);
                x / (1.0 + q)
            }
            LossKind::BarronGeneral => barron_drho(x, self.alpha, self.c),
        }
    }
}

fn barron_rho(x: f64, alpha: f64, c: f64) -> f64 {
    let q = (x / c).powi(2);
    if alpha == 2.0 {
        0.5 * q
    } else if alpha == 0.0 {
        (0.5 * q).ln_1p()
    } else if alpha == f64::NEG_INFINITY {
        -(-0.5 * q).exp_m1()
    } else {
        let b = (alpha - 2.0).abs();
        (b / alpha) * ((0.5 * alpha) * (q / b).ln_1p()).exp_m1()
    }
}

/// Derivative of the general kernel. One expression covers every branch:
/// `(x / c^2) * ((x/c)^2 / |alpha - 2| + 1)^(alpha/2 - 1)`.
fn barron_drho(x: f64, alpha: f64, c: f64) -> f64 {
    let xc2 = x / (c * c);
    let q = (x / c).powi(2);
    if alpha == 2.0 {
        xc2
    } else if alpha == 0.0 {
        xc2 / (0.5 * q + 1.0)
    } else if alpha == f64::NEG_INFINITY {
        xc2 * (-0.5 * q).exp()
    } else {
        let b = (alpha - 2.0).abs();
        xc2 * (q / b + 1.0).powf(0.5 * alpha - 1.0)
    }
}

/// Weight of one detection given the maximum SNR in its scan.
///
/// With `snr_weighting` off, or when the scan carries no usable SNR
/// (`scan_max_snr <= 0`), every detection weighs 1.0.
pub fn weight_of(detection: &Detection, spec: &LossSpec, scan_max_snr: f64) -> f64 {
    if !spec.snr_weighting || scan_max_snr <= 0.0 || scan_max_snr.is_nan() {
        return 1.0;
    }
    (detection.snr / scan_max_snr).max(0.0)
}

/// Per-detection weights for a whole scan, in detection order.
pub fn scan_weights(scan: &RadarScan, spec: &LossSpec) -> Vec<f64> {
    let max_snr = scan
        .detections
        .iter()
        .map(|d| d.snr)
        .fold(0.0_f64, f64::max);
    scan.detections
        .iter()
        .map(|d| weight_of(d, spec, max_snr))
        .collect()
}
