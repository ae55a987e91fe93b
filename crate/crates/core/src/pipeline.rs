//! The per-scan estimation pipeline.
//!
//! Each scan flows through four stages:
//!
//! 1. **Zero-velocity gate** — stationary scans short-circuit to a pinned
//!    zero estimate without solving.
//! 2. **Outlier rejection** — RANSAC/MLESAC/GNC produce an inlier mask and a
//!    velocity hypothesis; `None` trusts every detection.
//! 3. **Solve** — the quadratic kernel goes through the closed-form weighted
//!    least squares; every other kernel is refined with BFGS, seeded by the
//!    rejector's hypothesis (or, without a rejector, by the last accepted
//!    estimate, falling back to a least-squares fit over everything).
//! 4. **Feasibility filter** — kinematically impossible estimates are marked
//!    [`EstimateStatus::Rejected`]; their velocity is kept for diagnostics
//!    but they never enter the filter window or seed later solves.
//!
//! Failures never escape as panics or errors: scans that cannot be solved
//! come back as [`EstimateStatus::Degenerate`].
//!
//! Determinism: the sampling rejectors receive a per-scan seed derived from
//! the configured base seed and the scan's ordinal, so re-running a stream
//! reproduces every estimate bit for bit while scans still get independent
//! sampling sequences.

use crate::consensus::{run_gnc, run_mlesac, run_ransac, RejectorConfig, RejectorMethod};
use crate::gate::{detect_zero_velocity, FilterConfig, FilterState, ZeroVelocityConfig};
use crate::loss::{scan_weights, LossKind, LossSpec};
use crate::solver::{solve_linear_ls, solve_robust, SolveResult, SolverConfig, SolverError};
use crate::synth::mix_seed;
use crate::types::{DopplerSign, EstimateStatus, RadarScan, Vec3, VelocityEstimate};
use thiserror::Error;

/// Complete configuration of the estimation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub rejector: RejectorConfig,
    pub loss: LossSpec,
    pub solver: SolverConfig,
    pub zero_velocity: ZeroVelocityConfig,
    pub filter: FilterConfig,
    /// Run the feasibility filter (stage 4). Disabled, every solved scan is
    /// reported as `Estimated`.
    pub filter_enabled: bool,
    /// Doppler sign convention of the data source. Consumed by the file
    /// readers, which normalize scans before they reach [`Pipeline`];
    /// `process_scan` assumes its input is already in convention.
    pub doppler_sign: DopplerSign,
}

impl Default for EstimatorConfig {
    /// The stock pipeline: RANSAC + least squares with the filter on.
    fn default() -> Self {
        Self {
            rejector: RejectorConfig::default(),
            loss: LossSpec::default(),
            solver: SolverConfig::default(),
            zero_velocity: ZeroVelocityConfig::default(),
            filter: FilterConfig::default(),
            filter_enabled: true,
            doppler_sign: DopplerSign::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {0}")]
pub struct InvalidConfig(pub String);

impl EstimatorConfig {
    /// Range-checks every parameter. The pipeline itself never panics on a
    /// bad configuration (misconfigured scans come back `Degenerate`), but
    /// front-ends should call this once and fail fast with a clear message.
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        self.loss.validate().map_err(|e| InvalidConfig(e.to_string()))?;
        let r = &self.rejector;
        if !(r.inlier_threshold > 0.0 && r.inlier_threshold.is_finite()) {
            return Err(InvalidConfig(format!(
                "rejector.inlier_threshold must be positive, got {}",
                r.inlier_threshold
            )));
        }
        if !(r.confidence > 0.0 && r.confidence < 1.0) {
            return Err(InvalidConfig(format!(
                "rejector.confidence must lie strictly between 0 and 1, got {}",
                r.confidence
            )));
        }
        if r.max_iterations == 0 {
            return Err(InvalidConfig("rejector.max_iterations must be at least 1".into()));
        }
        if !(r.mlesac_sigma > 0.0 && r.mlesac_sigma.is_finite()) {
            return Err(InvalidConfig(format!(
                "rejector.mlesac_sigma must be positive, got {}",
                r.mlesac_sigma
            )));
        }
        if !(r.mlesac_outlier_span > 0.0 && r.mlesac_outlier_span.is_finite()) {
            return Err(InvalidConfig(format!(
                "rejector.mlesac_outlier_span must be positive, got {}",
                r.mlesac_outlier_span
            )));
        }
        if r.gnc_mu_init.is_nan() || r.gnc_mu_init <= 1.0 {
            return Err(InvalidConfig(format!(
                "rejector.gnc_mu_init must exceed 1, got {}",
                r.gnc_mu_init
            )));
        }
        if r.gnc_mu_divisor.is_nan() || r.gnc_mu_divisor <= 1.0 {
            return Err(InvalidConfig(format!(
                "rejector.gnc_mu_divisor must exceed 1, got {}",
                r.gnc_mu_divisor
            )));
        }
        if r.gnc_max_outer == 0 {
            return Err(InvalidConfig("rejector.gnc_max_outer must be at least 1".into()));
        }
        if r.min_coplanarity.is_nan() || r.min_coplanarity < 0.0 {
            return Err(InvalidConfig(format!(
                "rejector.min_coplanarity must be non-negative, got {}",
                r.min_coplanarity
            )));
        }
        let s = &self.solver;
        if !(s.grad_tolerance > 0.0 && s.step_tolerance > 0.0) {
            return Err(InvalidConfig("solver tolerances must be positive".into()));
        }
        if !(0.0 < s.wolfe_c1 && s.wolfe_c1 < s.wolfe_c2 && s.wolfe_c2 < 1.0) {
            return Err(InvalidConfig(format!(
                "line-search constants must satisfy 0 < c1 < c2 < 1, got c1={} c2={}",
                s.wolfe_c1, s.wolfe_c2
            )));
        }
        let z = &self.zero_velocity;
        if !(z.doppler_threshold > 0.0 && z.doppler_threshold.is_finite()) {
            return Err(InvalidConfig(format!(
                "zero_velocity.doppler_threshold must be positive, got {}",
                z.doppler_threshold
            )));
        }
        if !(0.0..=1.0).contains(&z.max_exceed_fraction) {
            return Err(InvalidConfig(format!(
                "zero_velocity.max_exceed_fraction must lie in [0, 1], got {}",
                z.max_exceed_fraction
            )));
        }
        let f = &self.filter;
        if f.window_size == 0 {
            return Err(InvalidConfig("filter.window_size must be at least 1".into()));
        }
        if !(f.norm_threshold > 0.0 && f.max_acceleration > 0.0) {
            return Err(InvalidConfig(
                "filter.norm_threshold and filter.max_acceleration must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Stateful per-scan estimator. Feed scans in timestamp order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: EstimatorConfig,
    filter: FilterState,
    /// Velocity of the last accepted estimate (including zero-velocity
    /// pins); seeds iterative solves and GNC.
    last_accepted: Option<Vec3>,
    scan_index: u64,
}

impl Pipeline {
    pub fn new(config: EstimatorConfig) -> Self {
        Self {
            config,
            filter: FilterState::new(),
            last_accepted: None,
            scan_index: 0,
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn filter_state(&self) -> &FilterState {
        &self.filter
    }

    /// Scans processed so far.
    pub fn scans_seen(&self) -> u64 {
        self.scan_index
    }

    fn degenerate(scan: &RadarScan) -> VelocityEstimate {
        VelocityEstimate {
            timestamp: scan.timestamp,
            velocity: Vec3::zeros(),
            status: EstimateStatus::Degenerate,
            inlier_count: 0,
            total_count: scan.len(),
            residual_rms: 0.0,
        }
    }

    /// Least-squares fit over every detection; the seed of last resort.
    fn ls_over_all(&self, scan: &RadarScan) -> Option<Vec3> {
        let mask = vec![true; scan.len()];
        let weights = vec![1.0; scan.len()];
        solve_linear_ls(scan, &mask, &weights)
            .ok()
            .map(|r| r.velocity)
    }

    /// Runs the full pipeline on one scan. Never fails: unsolvable scans
    /// yield `Degenerate`, infeasible or non-finite ones `Rejected`.
    pub fn process_scan(&mut self, scan: &RadarScan) -> VelocityEstimate {
        let seed = mix_seed(self.config.rejector.seed, self.scan_index);
        self.scan_index += 1;

        // Stage 1: stationary platforms skip the solve entirely.
        if detect_zero_velocity(scan, &self.config.zero_velocity) {
            let sum_sq: f64 = scan.detections.iter().map(|d| d.doppler * d.doppler).sum();
            let estimate = VelocityEstimate {
                timestamp: scan.timestamp,
                velocity: Vec3::zeros(),
                status: EstimateStatus::ZeroVelocity,
                inlier_count: scan.len(),
                total_count: scan.len(),
                residual_rms: (sum_sq / scan.len() as f64).sqrt(),
            };
            if self.config.filter_enabled {
                let decision = self.filter.step(&self.config.filter, &estimate);
                debug_assert!(decision.accepted() || decision == crate::gate::FilterDecision::RejectedNonMonotonic);
            }
            self.last_accepted = Some(Vec3::zeros());
            return estimate;
        }

        // Stage 2: outlier rejection.
        let rejector = RejectorConfig { seed, ..self.config.rejector };
        let (mask, hypothesis) = match rejector.method {
            RejectorMethod::None => (vec![true; scan.len()], None),
            RejectorMethod::Ransac => match run_ransac(scan, &rejector) {
                Ok(report) => (report.inlier_mask, Some(report.hypothesis)),
                Err(_) => return Self::degenerate(scan),
            },
            RejectorMethod::Mlesac => match run_mlesac(scan, &rejector) {
                Ok(report) => (report.inlier_mask, Some(report.hypothesis)),
                Err(_) => return Self::degenerate(scan),
            },
            RejectorMethod::Gnc => {
                let initial = match self.last_accepted.or_else(|| self.ls_over_all(scan)) {
                    Some(v) => v,
                    None => return Self::degenerate(scan),
                };
                match run_gnc(scan, &rejector, &initial) {
                    Ok(report) => (report.inlier_mask, Some(report.hypothesis)),
                    Err(_) => return Self::degenerate(scan),
                }
            }
        };

        // Stage 3: solve on the inliers.
        let solve: Result<SolveResult, SolverError> = if self.config.loss.kind == LossKind::L2 {
            let weights = scan_weights(scan, &self.config.loss);
            solve_linear_ls(scan, &mask, &weights)
        } else {
            let initial = match hypothesis.or(self.last_accepted).or_else(|| self.ls_over_all(scan)) {
                Some(v) => v,
                None => return Self::degenerate(scan),
            };
            solve_robust(scan, &mask, &self.config.loss, &self.config.solver, &initial)
        };
        let solve = match solve {
            Ok(s) => s,
            Err(SolverError::NonFinite) => {
                // A velocity was unobtainable; report the scan as rejected
                // rather than pretending zero is an estimate of it.
                return VelocityEstimate {
                    timestamp: scan.timestamp,
                    velocity: Vec3::zeros(),
                    status: EstimateStatus::Rejected,
                    inlier_count: 0,
                    total_count: scan.len(),
                    residual_rms: 0.0,
                };
            }
            Err(SolverError::RankDeficient { .. }) | Err(SolverError::InvalidLoss(_)) => {
                return Self::degenerate(scan)
            }
        };

        let mut estimate = VelocityEstimate {
            timestamp: scan.timestamp,
            velocity: solve.velocity,
            status: EstimateStatus::Estimated,
            inlier_count: mask.iter().filter(|&&b| b).count(),
            total_count: scan.len(),
            residual_rms: solve.residual_rms,
        };

        // Stage 4: feasibility filtering.
        if self.config.filter_enabled {
            if self.filter.step(&self.config.filter, &estimate).accepted() {
                self.last_accepted = Some(estimate.velocity);
            } else {
                estimate.status = EstimateStatus::Rejected;
            }
        } else {
            self.last_accepted = Some(estimate.velocity);
        }
        estimate
    }
}

/// Processes a whole stream with a fresh pipeline.
pub fn process_sequence(config: &EstimatorConfig, scans: &[RadarScan]) -> Vec<VelocityEstimate> {
    let mut pipeline = Pipeline::new(config.clone());
    scans.iter().map(|s| pipeline.process_scan(s)).collect()
}
