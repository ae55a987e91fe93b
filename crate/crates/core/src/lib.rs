//! Instantaneous ego-velocity estimation from single radar scans.
//!
//! A scanning FMCW radar measures, for every detection, a bearing (the 3D
//! position of the reflector in the sensor frame) and the relative radial
//! velocity along that bearing (Doppler). For a static reflector the Doppler
//! value is the negative projection of the sensor's own velocity onto the
//! bearing direction, so a single scan with three or more non-coplanar
//! detections determines the full 3D sensor velocity — no odometry, IMU or
//! scan matching required.
//!
//! Real scans also contain moving objects and multipath ghosts, so the
//! estimation pipeline combines:
//!
//! - a linear least-squares core ([`solver::solve_linear_ls`]) and a BFGS
//!   solver for robust kernels ([`solver::solve_robust`]),
//! - pluggable sample-consensus outlier rejection — RANSAC, MLESAC and
//!   graduated non-convexity ([`consensus`]),
//! - a family of robust loss kernels, including a general adaptive kernel
//!   with shape parameter `alpha` ([`loss`]),
//! - a Doppler-based zero-velocity detector and a sliding-window feasibility
//!   filter that rejects kinematically implausible estimates ([`gate`]),
//! - a synthetic scene generator with labelled inliers/outliers ([`synth`])
//!   and an evaluation harness computing AVE/RMSE against ground truth
//!   ([`eval`]).
//!
//! [`pipeline::Pipeline`] wires these together and never panics on bad data:
//! per-scan failures are reported through [`types::EstimateStatus`].

pub mod consensus;
pub mod eval;
pub mod gate;
pub mod io;
pub mod loss;
pub mod pipeline;
pub mod solver;
pub mod synth;
pub mod types;

pub use consensus::{InlierReport, RejectorConfig, RejectorMethod};
pub use eval::{
    interpolate_gt, score, transfer_velocity, ErrorReport, EvalError, ExtrinsicSpec,
    GroundTruthSample,
};
pub use gate::{FilterConfig, FilterState, GateCombination, ZeroVelocityConfig};
pub use io::{load_config, read_scans, write_estimates, write_scans, ConfigError, FileError};
pub use loss::{LossKind, LossSpec};
pub use pipeline::{process_sequence, EstimatorConfig, InvalidConfig, Pipeline};
pub use solver::{SolveResult, SolverConfig};
pub use synth::SceneSpec;
pub use types::{Detection, DopplerSign, EstimateStatus, Mat3, RadarScan, Vec3, VelocityEstimate};
