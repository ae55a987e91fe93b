//! Core measurement types and the Doppler observation model.
//!
//! The model: a radar detection at position `p` (sensor frame) with the
//! sensor moving at velocity `v` observes, if the reflector is static,
//!
//! ```text
//! doppler = -(p / ||p||) . v
//! ```
//!
//! i.e. the Doppler value is the negated projection of the ego-velocity onto
//! the detection's bearing. Everything in this crate is phrased in terms of
//! the residual of that equation.

use nalgebra::{Matrix3, Vector3};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// 3D vector in the sensor frame, in SI units.
pub type Vec3 = Vector3<f64>;
/// 3x3 matrix (rotations, direction stacks).
pub type Mat3 = Matrix3<f64>;

/// Minimum number of detections that determine a 3D velocity.
pub const MIN_DETECTIONS: usize = 3;

/// Positions closer to the sensor origin than this are treated as zero-range
/// artefacts: their bearing is undefined.
pub const MIN_RANGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A detection sits at the sensor origin, so its bearing is undefined.
    #[error("detection at sensor origin has no bearing (range {range:.3e} m)")]
    ZeroRangeDetection { range: f64 },
}

/// A single radar detection: reflector position, measured relative radial
/// velocity (Doppler) and signal-to-noise ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Reflector position in the sensor frame [m].
    pub position: Vec3,
    /// Relative radial velocity along the bearing [m/s]. Negative when the
    /// sensor approaches a static reflector.
    pub doppler: f64,
    /// Signal-to-noise ratio [dB]; `1.0` when the source provides none.
    pub snr: f64,
}

impl Detection {
    pub fn new(position: Vec3, doppler: f64, snr: f64) -> Self {
        Self { position, doppler, snr }
    }

    /// Detection without SNR information (weight-neutral default of 1.0).
    pub fn without_snr(position: Vec3, doppler: f64) -> Self {
        Self::new(position, doppler, 1.0)
    }

    /// Range from the sensor origin [m].
    pub fn range(&self) -> f64 {
        self.position.norm()
    }

    /// Unit bearing vector from the sensor to the reflector.
    pub fn direction(&self) -> Result<Vec3, ModelError> {
        let range = self.range();
        if range < MIN_RANGE {
            return Err(ModelError::ZeroRangeDetection { range });
        }
        Ok(self.position / range)
    }
}

/// Doppler value a static reflector in direction `direction` would produce
/// for a sensor moving at `velocity`.
///
/// `direction` must be a unit vector.
pub fn predict_doppler(direction: &Vec3, velocity: &Vec3) -> f64 {
    -direction.dot(velocity)
}

/// Measured-minus-predicted Doppler for a detection under a velocity
/// hypothesis. Zero for a static reflector observed noise-free.
pub fn residual(detection: &Detection, velocity: &Vec3) -> Result<f64, ModelError> {
    let u = detection.direction()?;
    Ok(detection.doppler - predict_doppler(&u, velocity))
}

/// One radar scan: a timestamp and the detections measured in it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadarScan {
    /// Scan time [s]; must increase monotonically within a stream.
    pub timestamp: f64,
    pub detections: Vec<Detection>,
}

impl RadarScan {
    pub fn new(timestamp: f64, detections: Vec<Detection>) -> Self {
        Self { timestamp, detections }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Sign convention of the Doppler column in incoming data.
///
/// This library expects the measured value of a static reflector to equal
/// `-u . v` (positive when the range is opening). Sensors that report the
/// opposite convention need [`DopplerSign::Flipped`], which the file readers
/// apply by negating the Doppler column as it is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DopplerSign {
    #[default]
    AsIs,
    Flipped,
}

impl DopplerSign {
    pub fn apply(&self, doppler: f64) -> f64 {
        match self {
            DopplerSign::AsIs => doppler,
            DopplerSign::Flipped => -doppler,
        }
    }
}

/// How a per-scan estimate was produced (or why it was not).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimateStatus {
    /// Full estimate from the solve path.
    Estimated,
    /// Doppler statistics flagged the platform as stationary; velocity is
    /// pinned to zero without solving.
    ZeroVelocity,
    /// An estimate was computed but judged kinematically infeasible (or the
    /// solve produced non-finite values); velocity is kept for diagnostics.
    Rejected,
    /// Not enough independent detections to determine a velocity.
    Degenerate,
}

impl fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimateStatus::Estimated => "Estimated",
            EstimateStatus::ZeroVelocity => "ZeroVelocity",
            EstimateStatus::Rejected => "Rejected",
            EstimateStatus::Degenerate => "Degenerate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown estimate status {0:?} (expected Estimated, ZeroVelocity, Rejected or Degenerate)")]
pub struct ParseStatusError(pub String);

impl FromStr for EstimateStatus {
    type Err = ParseStatusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Estimated" => Ok(EstimateStatus::Estimated),
            "ZeroVelocity" => Ok(EstimateStatus::ZeroVelocity),
            "Rejected" => Ok(EstimateStatus::Rejected),
            "Degenerate" => Ok(EstimateStatus::Degenerate),
            other => Err(ParseStatusError(other.to_string())),
        }
    }
}

/// Per-scan estimation result.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityEstimate {
    /// Timestamp of the scan the estimate belongs to [s].
    pub timestamp: f64,
    /// Estimated sensor velocity in the sensor frame [m/s]. Zero for
    /// `ZeroVelocity` and `Degenerate`; the diagnostic value for `Rejected`.
    pub velocity: Vec3,
    pub status: EstimateStatus,
    /// Detections that survived outlier rejection.
    pub inlier_count: usize,
    /// Detections in the scan.
    pub total_count: usize,
    /// Root-mean-square Doppler residual over the inliers [m/s].
    pub residual_rms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn direction_normalizes_position() {
        let d = Detection::without_snr(Vec3::new(3.0, 4.0, 0.0), 0.0);
        let u = d.direction().expect("non-zero range");
        assert_relative_eq!(u, Vec3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
        assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn direction_of_origin_detection_is_an_error() {
        let d = Detection::without_snr(Vec3::zeros(), -1.0);
        assert!(matches!(
            d.direction(),
            Err(ModelError::ZeroRangeDetection { .. })
        ));
    }

    #[test]
    fn predicted_doppler_is_negated_projection() {
        let u = Vec3::new(0.6, 0.8, 0.0);
        let v = Vec3::new(1.0, 1.0, 0.0);
        assert_relative_eq!(predict_doppler(&u, &v), -1.4, epsilon = 1e-15);
    }

    #[test]
    fn approaching_a_static_reflector_gives_negative_doppler() {
        // Driving straight at a reflector ahead: closing range, negative Doppler.
        let u = Vec3::new(1.0, 0.0, 0.0);
        let v = Vec3::new(2.0, 0.0, 0.0);
        assert!(predict_doppler(&u, &v) < 0.0);
    }

    #[test]
    fn residual_vanishes_for_consistent_static_detection() {
        let d = Detection::without_snr(Vec3::new(2.0, 0.0, 0.0), -1.0);
        let v = Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(residual(&d, &v).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn residual_propagates_zero_range_error() {
        let d = Detection::without_snr(Vec3::zeros(), -1.0);
        assert!(residual(&d, &Vec3::zeros()).is_err());
    }

    #[test]
    fn status_strings_round_trip() {
        for status in [
            EstimateStatus::Estimated,
            EstimateStatus::ZeroVelocity,
            EstimateStatus::Rejected,
            EstimateStatus::Degenerate,
        ] {
            let text = status.to_string();
            assert_eq!(text.parse::<EstimateStatus>().unwrap(), status);
        }
        assert!("estimated".parse::<EstimateStatus>().is_err());
    }
}
