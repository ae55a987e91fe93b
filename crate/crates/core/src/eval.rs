//! Accuracy evaluation against reference trajectories.
//!
//! Ground truth usually lives in a body frame (IMU, mocap rigid body) while
//! estimates live in the radar frame. [`transfer_velocity`] maps a reference
//! sample into the radar frame with the rigid-body velocity relation
//! `v_radar = R (v_body + omega x lever_arm)`, after which
//! [`score`] pairs every usable estimate with the linearly interpolated
//! reference and reports per-axis AVE (mean absolute error) and RMSE.
//!
//! Estimates whose status is `Rejected` or `Degenerate`, and estimates whose
//! timestamp falls outside the reference span, are not scored; they are
//! counted in [`ErrorReport::n_excluded`] so `n_pairs + n_excluded` always
//! equals the number of estimates supplied.

use crate::types::{EstimateStatus, Mat3, Vec3, VelocityEstimate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    /// The queried timestamp is not covered by the reference trajectory.
    #[error("timestamp {timestamp} lies outside the ground-truth time span")]
    OutOfSpan { timestamp: f64 },
    /// Nothing to score: every estimate was excluded.
    #[error("no estimate could be paired with ground truth")]
    NoPairs,
    /// The extrinsic rotation is not a proper rotation matrix.
    #[error("extrinsic rotation is not orthonormal with determinant +1 (defect {defect:.3e})")]
    InvalidRotation { defect: f64 },
}

/// One reference trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSample {
    pub timestamp: f64,
    /// Body-frame translational velocity [m/s].
    pub velocity: Vec3,
    /// Body-frame angular velocity [rad/s]; zero when the source does not
    /// provide one (then the lever-arm term vanishes).
    pub angular_velocity: Vec3,
    /// Name of the frame the sample is expressed in, e.g. `"body"`.
    pub frame: String,
}

impl GroundTruthSample {
    pub fn new(timestamp: f64, velocity: Vec3, angular_velocity: Vec3) -> Self {
        Self { timestamp, velocity, angular_velocity, frame: "body".to_owned() }
    }
}

/// Rigid-body transform from the ground-truth frame to the radar frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrinsicSpec {
    /// Radar position in the body frame [m].
    pub lever_arm: Vec3,
    /// Rotation taking body-frame vectors to radar-frame vectors.
    pub rotation: Mat3,
}

impl Default for ExtrinsicSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl ExtrinsicSpec {
    /// Co-located, axis-aligned sensor (the lever arm is neglected).
    pub fn identity() -> Self {
        Self { lever_arm: Vec3::zeros(), rotation: Mat3::identity() }
    }

    /// Checks that `rotation` is orthonormal (within `1e-9`) with
    /// determinant `+1`; reflections and scaled axes are refused.
    pub fn validate(&self) -> Result<(), EvalError> {
        let gram_defect = (self.rotation.transpose() * self.rotation - Mat3::identity())
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.abs()));
        let det_defect = (self.rotation.determinant() - 1.0).abs();
        let defect = gram_defect.max(det_defect);
        if defect.is_nan() || defect > 1e-9 {
            return Err(EvalError::InvalidRotation { defect });
        }
        Ok(())
    }
}

/// Maps a reference sample into the radar frame:
/// `rotation * (velocity + angular_velocity x lever_arm)`.
pub fn transfer_velocity(sample: &GroundTruthSample, ext: &ExtrinsicSpec) -> Vec3 {
    ext.rotation * (sample.velocity + sample.angular_velocity.cross(&ext.lever_arm))
}

/// Linearly interpolates the reference trajectory at `t`.
///
/// `samples` must be strictly increasing in time (the file readers enforce
/// this). Timestamps outside `[first, last]` — including any query against an
/// empty list — yield [`EvalError::OutOfSpan`]. The interpolated sample
/// carries the frame label of the bracketing sample on the left.
pub fn interpolate_gt(samples: &[GroundTruthSample], t: f64) -> Result<GroundTruthSample, EvalError> {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(EvalError::OutOfSpan { timestamp: t }),
    };
    if !(first.timestamp <= t && t <= last.timestamp) {
        return Err(EvalError::OutOfSpan { timestamp: t });
    }
    // First sample at or after t; the span check guarantees it exists.
    let idx = samples.partition_point(|s| s.timestamp < t);
    let right = &samples[idx];
    if right.timestamp == t {
        return Ok(right.clone());
    }
    let left = &samples[idx - 1];
    let alpha = (t - left.timestamp) / (right.timestamp - left.timestamp);
    Ok(GroundTruthSample {
        timestamp: t,
        velocity: left.velocity.lerp(&right.velocity, alpha),
        angular_velocity: left.angular_velocity.lerp(&right.angular_velocity, alpha),
        frame: left.frame.clone(),
    })
}

/// Per-axis accuracy summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean absolute error per axis [m/s].
    pub ave: [f64; 3],
    /// Root-mean-square error per axis [m/s].
    pub rmse: [f64; 3],
    /// Estimates scored against the reference.
    pub n_pairs: usize,
    /// Estimates left out (bad status or outside the reference span).
    pub n_excluded: usize,
}

impl ErrorReport {
    /// Renders the report as an aligned, human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = String::from("axis      AVE [m/s]      RMSE [m/s]\n");
        for (axis, label) in ["x", "y", "z"].iter().enumerate() {
            out.push_str(&format!(
                "{label:<6} {:>12.6} {:>14.6}\n",
                self.ave[axis], self.rmse[axis]
            ));
        }
        out.push_str(&format!(
            "pairs scored: {} (excluded: {})\n",
            self.n_pairs, self.n_excluded
        ));
        out
    }
}

/// Scores estimates against a reference trajectory.
///
/// Only `Estimated` and `ZeroVelocity` estimates are paired; everything else
/// is excluded. Pairs are accumulated in timestamp order, so the report is
/// identical no matter how the estimates are ordered on input.
pub fn score(
    estimates: &[VelocityEstimate],
    gt: &[GroundTruthSample],
    ext: &ExtrinsicSpec,
) -> Result<ErrorReport, EvalError> {
    ext.validate()?;
    let mut errors: Vec<(f64, Vec3)> = Vec::with_capacity(estimates.len());
    let mut n_excluded = 0usize;
    for est in estimates {
        if !matches!(est.status, EstimateStatus::Estimated | EstimateStatus::ZeroVelocity) {
            n_excluded += 1;
            continue;
        }
        match interpolate_gt(gt, est.timestamp) {
            Ok(sample) => {
                let truth = transfer_velocity(&sample, ext);
                errors.push((est.timestamp, est.velocity - truth));
            }
            Err(EvalError::OutOfSpan { .. }) => n_excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if errors.is_empty() {
        return Err(EvalError::NoPairs);
    }
    errors.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = errors.len() as f64;
    let mut ave = [0.0; 3];
    let mut rmse = [0.0; 3];
    for (_, e) in &errors {
        for axis in 0..3 {
            ave[axis] += e[axis].abs();
            rmse[axis] += e[axis] * e[axis];
        }
    }
    for axis in 0..3 {
        ave[axis] /= n;
        rmse[axis] = (rmse[axis] / n).sqrt();
    }
    Ok(ErrorReport { ave, rmse, n_pairs: errors.len(), n_excluded })
}
