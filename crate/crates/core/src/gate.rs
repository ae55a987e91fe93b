//! Plausibility gates around the solver: a Doppler-based zero-velocity
//! detector and a sliding-window feasibility filter.
//!
//! The zero-velocity detector runs *before* estimation. When the platform is
//! stationary, almost every detection is static and its Doppler is near zero,
//! so the median magnitude collapses; pinning the velocity to exactly zero in
//! that case beats solving (and feeds cleaner data to anything downstream
//! that integrates velocities).
//!
//! The feasibility filter runs *after* estimation. It keeps a short window of
//! recently accepted estimates and rejects a candidate when its speed departs
//! too far from the windowed average (condition A) or when the implied
//! acceleration relative to the previous accepted estimate is impossible for
//! the platform (condition B). Until the window has filled once, only
//! condition B is checked.

use crate::types::{EstimateStatus, RadarScan, Vec3, VelocityEstimate};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Configuration of the stationary-platform detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroVelocityConfig {
    /// Median |doppler| below this flags the platform as stationary [m/s].
    pub doppler_threshold: f64,
    /// At most this fraction of detections may exceed the threshold.
    pub max_exceed_fraction: f64,
    /// Scans smaller than this are never flagged (too little evidence).
    pub min_detections: usize,
}

impl Default for ZeroVelocityConfig {
    fn default() -> Self {
        Self {
            doppler_threshold: 0.05,
            max_exceed_fraction: 0.25,
            min_detections: 5,
        }
    }
}

/// True when the scan's Doppler statistics indicate a stationary platform:
/// the median magnitude sits below the threshold *and* no more than the
/// allowed fraction of detections exceeds it.
pub fn detect_zero_velocity(scan: &RadarScan, config: &ZeroVelocityConfig) -> bool {
    let mut magnitudes: Vec<f64> = scan.detections.iter().map(|d| d.doppler.abs()).collect();
    if magnitudes.len() < config.min_detections {
        return false;
    }
    magnitudes.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = magnitudes.len();
    let median = if n % 2 == 1 {
        magnitudes[n / 2]
    } else {
        0.5 * (magnitudes[n / 2 - 1] + magnitudes[n / 2])
    };
    let exceeding = magnitudes
        .iter()
        .filter(|&&m| m > config.doppler_threshold)
        .count();
    median < config.doppler_threshold
        && exceeding as f64 / n as f64 <= config.max_exceed_fraction
}

/// How the two feasibility conditions combine into a rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateCombination {
    /// Reject when *either* condition is violated (a candidate must pass
    /// both). The default, and the stricter of the two.
    RejectOnEither,
    /// Reject only when *both* conditions are violated (one passing
    /// condition saves the candidate).
    RequireBoth,
}

/// Configuration of the sliding-window feasibility filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Number of accepted estimates averaged for condition A; the window is
    /// warm once it has seen this many.
    pub window_size: usize,
    /// Condition A: |mean speed over window - candidate speed| must stay
    /// below this [m/s].
    pub norm_threshold: f64,
    /// Condition B: ||v_k - v_{k-1}|| / dt must stay below this [m/s^2].
    pub max_acceleration: f64,
    pub combination: GateCombination,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            window_size: 5,
            norm_threshold: 7.5,
            max_acceleration: 10.0,
            combination: GateCombination::RejectOnEither,
        }
    }
}

/// Verdict of one filter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Accepted,
    /// The candidate failed the feasibility conditions; flags say which.
    RejectedInfeasible { norm_jump: bool, over_acceleration: bool },
    /// The candidate's timestamp does not advance past the newest window
    /// entry; the window is left untouched.
    RejectedNonMonotonic,
}

impl FilterDecision {
    pub fn accepted(&self) -> bool {
        matches!(self, FilterDecision::Accepted)
    }
}

/// Window of recently *accepted* estimates. Rejected candidates leave the
/// state untouched, so one wild estimate cannot poison the statistics that
/// judge the next one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterState {
    /// (timestamp, velocity) pairs, oldest first; at most `window_size + 1`
    /// entries so condition A can average `window_size` entries while
    /// condition B still sees the previous acceptance.
    window: VecDeque<(f64, Vec3)>,
}

impl FilterState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Entries currently held (bounded by `window_size + 1`).
    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Condition A activates only once the window has filled.
    pub fn is_warm(&self, config: &FilterConfig) -> bool {
        self.window.len() >= config.window_size
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }

    /// Judges a candidate and, when accepted, absorbs it into the window.
    ///
    /// Zero-velocity candidates are always accepted: they come from the
    /// Doppler statistics of the raw scan, not from a solve, and a pinned
    /// zero is exactly the kind of estimate the filter exists to protect.
    /// An empty window accepts anything (there is nothing to compare with).
    pub fn step(&mut self, config: &FilterConfig, candidate: &VelocityEstimate) -> FilterDecision {
        if let Some(&(last_t, _)) = self.window.back() {
            if candidate.timestamp <= last_t {
                return FilterDecision::RejectedNonMonotonic;
            }
        }

        let accept = if candidate.status == EstimateStatus::ZeroVelocity {
            true
        } else if let Some(&(prev_t, prev_v)) = self.window.back() {
            let dt = candidate.timestamp - prev_t;
            let acceleration = (candidate.velocity - prev_v).norm() / dt;
            let accel_ok = acceleration < config.max_acceleration;

            if self.is_warm(config) {
                let n = config.window_size;
                let mean_speed = self
                    .window
                    .iter()
                    .rev()
                    .take(n)
                    .map(|(_, v)| v.norm())
                    .sum::<f64>()
                    / n as f64;
                let norm_ok = (mean_speed - candidate.velocity.norm()).abs() < config.norm_threshold;
                let ok = match config.combination {
                    GateCombination::RejectOnEither => norm_ok && accel_ok,
                    GateCombination::RequireBoth => norm_ok || accel_ok,
                };
                if !ok {
                    return FilterDecision::RejectedInfeasible {
                        norm_jump: !norm_ok,
                        over_acceleration: !accel_ok,
                    };
                }
                true
            } else if !accel_ok {
                return FilterDecision::RejectedInfeasible {
                    norm_jump: false,
                    over_acceleration: true,
                };
            } else {
                true
            }
        } else {
            true
        };

        debug_assert!(accept);
        self.window.push_back((candidate.timestamp, candidate.velocity));
        while self.window.len() > config.window_size + 1 {
            self.window.pop_front();
        }
        FilterDecision::Accepted
    }
}
