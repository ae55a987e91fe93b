//! Velocity solvers: weighted linear least squares and BFGS for robust
//! kernels.
//!
//! Both solvers operate on the masked subset of a scan. Each masked detection
//! contributes one scalar equation `doppler_i + u_i . v = r_i`, where `u_i`
//! is the unit bearing, so the quadratic kernel has the closed form
//!
//! ```text
//! min_v  sum_i w_i (doppler_i + u_i . v)^2 / 2
//! ```
//!
//! solved here via an orthogonal factorization of the stacked row matrix.
//! Every other kernel is minimized iteratively with BFGS and a strong-Wolfe
//! line search; the objective is three-dimensional and smooth almost
//! everywhere, so a handful of iterations suffices.
//!
//! Detections with zero range carry no bearing information and are skipped as
//! if masked out.

use crate::loss::{scan_weights, LossError, LossSpec};
use crate::types::{Mat3, RadarScan, Vec3, MIN_DETECTIONS, MIN_RANGE};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Singular values below this are treated as a rank deficiency: the masked
/// bearings do not span 3D space.
pub const MIN_SINGULAR_VALUE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(
        "masked detections do not determine a 3D velocity \
         ({usable} usable rows, smallest singular value {min_singular:.3e})"
    )]
    RankDeficient { usable: usize, min_singular: f64 },
    #[error("inputs contain non-finite values")]
    NonFinite,
    #[error(transparent)]
    InvalidLoss(#[from] LossError),
}

/// Stopping rules and line-search constants for the iterative solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop when the gradient norm falls below this [m/s per m/s].
    pub grad_tolerance: f64,
    /// Stop when the accepted step is shorter than this [m/s].
    pub step_tolerance: f64,
    pub max_iterations: usize,
    /// Armijo (sufficient decrease) constant.
    pub wolfe_c1: f64,
    /// Curvature constant of the strong Wolfe conditions.
    pub wolfe_c2: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tolerance: 1e-8,
            step_tolerance: 1e-10,
            max_iterations: 100,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
        }
    }
}

/// Outcome of a solve over the masked detections.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub velocity: Vec3,
    /// Final objective value `sum w_i rho(r_i)`.
    pub objective: f64,
    /// Gradient norm of the objective at `velocity`.
    pub gradient_norm: f64,
    /// Iterations actually performed (1 for the direct linear solve).
    pub iterations: usize,
    /// Whether a stopping criterion (gradient or step tolerance) was met
    /// before the iteration budget ran out.
    pub converged: bool,
    /// Unweighted RMS Doppler residual over the masked detections [m/s].
    pub residual_rms: f64,
}

/// One usable observation row: unit bearing, Doppler, weight.
struct Row {
    u: Vec3,
    doppler: f64,
    weight: f64,
}

/// Collects masked, non-zero-range rows and checks finiteness.
fn collect_rows(
    scan: &RadarScan,
    mask: &[bool],
    weights: &[f64],
) -> Result<Vec<Row>, SolverError> {
    assert_eq!(mask.len(), scan.len(), "mask must parallel the detections");
    assert_eq!(weights.len(), scan.len(), "weights must parallel the detections");
    let mut rows = Vec::new();
    for (i, d) in scan.detections.iter().enumerate() {
        if !mask[i] {
            continue;
        }
        let range = d.position.norm();
        if !(range.is_finite() && d.doppler.is_finite() && weights[i].is_finite()) {
            return Err(SolverError::NonFinite);
        }
        if range < MIN_RANGE {
            continue;
        }
        rows.push(Row {
            u: d.position / range,
            doppler: d.doppler,
            weight: weights[i],
        });
    }
    Ok(rows)
}

fn residual_rms(rows: &[Row], v: &Vec3) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = rows
        .iter()
        .map(|r| {
            let e = r.doppler + r.u.dot(v);
            e * e
        })
        .sum();
    (sum_sq / rows.len() as f64).sqrt()
}

fn objective_of_rows(rows: &[Row], loss: &LossSpec, v: &Vec3) -> (f64, Vec3) {
    let mut f = 0.0;
    let mut g = Vec3::zeros();
    for r in rows {
        let e = r.doppler + r.u.dot(v);
        f += r.weight * loss.rho(e);
        g += r.weight * loss.drho(e) * r.u;
    }
    (f, g)
}

/// Weighted linear least squares over the masked detections.
///
/// `weights` must be non-negative and parallel to `scan.detections`; use
/// [`crate::loss::scan_weights`] for the SNR policy. Errors with
/// [`SolverError::RankDeficient`] when fewer than three usable rows remain or
/// the stacked bearings are (numerically) coplanar.
pub fn solve_linear_ls(
    scan: &RadarScan,
    mask: &[bool],
    weights: &[f64],
) -> Result<SolveResult, SolverError> {
    let rows = collect_rows(scan, mask, weights)?;
    if rows.len() < MIN_DETECTIONS {
        return Err(SolverError::RankDeficient {
            usable: rows.len(),
            min_singular: 0.0,
        });
    }

    let mut a = DMatrix::zeros(rows.len(), 3);
    let mut b = DVector::zeros(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let sw = row.weight.max(0.0).sqrt();
        a.set_row(k, &(sw * row.u.transpose()));
        b[k] = -sw * row.doppler;
    }

    let svd = a.svd(true, true);
    let min_singular = svd.singular_values.iter().copied().fold(f64::MAX, f64::min);
    if min_singular < MIN_SINGULAR_VALUE {
        return Err(SolverError::RankDeficient {
            usable: rows.len(),
            min_singular,
        });
    }
    let x = svd.solve(&b, 0.0).expect("SVD of a full-rank system solves");
    let v = Vec3::new(x[0], x[1], x[2]);
    if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
        return Err(SolverError::NonFinite);
    }

    let (objective, gradient) = objective_of_rows(&rows, &LossSpec::l2(), &v);
    Ok(SolveResult {
        velocity: v,
        objective,
        gradient_norm: gradient.norm(),
        iterations: 1,
        converged: true,
        residual_rms: residual_rms(&rows, &v),
    })
}

/// Objective `sum_i w_i rho(r_i(v))` and its gradient over the masked
/// detections, with weights drawn from the loss spec's SNR policy.
pub fn objective_and_gradient(
    scan: &RadarScan,
    mask: &[bool],
    loss: &LossSpec,
    v: &Vec3,
) -> (f64, Vec3) {
    let weights = scan_weights(scan, loss);
    match collect_rows(scan, mask, &weights) {
        Ok(rows) => objective_of_rows(&rows, loss, v),
        Err(_) => (f64::NAN, Vec3::new(f64::NAN, f64::NAN, f64::NAN)),
    }
}

/// Minimizes the robust objective with BFGS from `initial`.
///
/// The inverse Hessian approximation starts at the identity and is reset to
/// it whenever the curvature condition `y.s > 1e-12` fails, so the update
/// can never destroy positive definiteness. Accepted steps satisfy the strong
/// Wolfe conditions, which makes the objective sequence strictly decreasing.
pub fn solve_robust(
    scan: &RadarScan,
    mask: &[bool],
    loss: &LossSpec,
    config: &SolverConfig,
    initial: &Vec3,
) -> Result<SolveResult, SolverError> {
    loss.validate()?;
    if !(initial.x.is_finite() && initial.y.is_finite() && initial.z.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let weights = scan_weights(scan, loss);
    let rows = collect_rows(scan, mask, &weights)?;
    if rows.len() < MIN_DETECTIONS {
        return Err(SolverError::RankDeficient {
            usable: rows.len(),
            min_singular: 0.0,
        });
    }

    let obj = |v: &Vec3| objective_of_rows(&rows, loss, v);

    let mut x = *initial;
    let (mut f, mut g) = obj(&x);
    if !f.is_finite() || !g.iter().all(|c| c.is_finite()) {
        return Err(SolverError::NonFinite);
    }

    let mut h = Mat3::identity();
    let mut iterations = 0;
    let mut converged = g.norm() < config.grad_tolerance;

    while !converged && iterations < config.max_iterations {
        let mut p = -(h * g);
        if p.dot(&g) >= 0.0 {
            // Numerical loss of descent direction: fall back to steepest descent.
            h = Mat3::identity();
            p = -g;
        }

        let step = match strong_wolfe(&obj, &x, &p, f, g.dot(&p), config) {
            Some(step) => step,
            None => break, // line search failed; report non-convergence
        };
        iterations += 1;

        let s = step.x - x;
        let y = step.g - g;
        x = step.x;
        f = step.f;
        g = step.g;

        if g.norm() < config.grad_tolerance || s.norm() < config.step_tolerance {
            converged = true;
            break;
        }

        let ys = y.dot(&s);
        if ys > 1e-12 {
            let rho = 1.0 / ys;
            let i = Mat3::identity();
            let v = i - rho * s * y.transpose();
            h = v * h * v.transpose() + rho * s * s.transpose();
        } else {
            h = Mat3::identity();
        }
    }
    if g.norm() < config.grad_tolerance {
        converged = true;
    }

    if !f.is_finite() || !x.iter().all(|c| c.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    Ok(SolveResult {
        velocity: x,
        objective: f,
        gradient_norm: g.norm(),
        iterations,
        converged,
        residual_rms: residual_rms(&rows, &x),
    })
}

struct WolfeStep {
    x: Vec3,
    f: f64,
    g: Vec3,
}

/// Strong Wolfe line search (bracketing plus bisection zoom).
///
/// `d0 = g0 . p` must be negative. Returns a step satisfying both the
/// sufficient-decrease and the strong curvature condition, or a plain
/// Armijo point when the zoom stalls, or `None` when no decrease exists
/// along `p` within the bracket budget.
fn strong_wolfe(
    obj: &impl Fn(&Vec3) -> (f64, Vec3),
    x0: &Vec3,
    p: &Vec3,
    f0: f64,
    d0: f64,
    config: &SolverConfig,
) -> Option<WolfeStep> {
    if d0 >= 0.0 {
        return None;
    }
    let (c1, c2) = (config.wolfe_c1, config.wolfe_c2);
    let phi = |a: f64| {
        let xa = x0 + a * p;
        let (f, g) = obj(&xa);
        (f, g.dot(p), xa, g)
    };

    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut a = 1.0;
    for iter in 0..20 {
        let (fa, da, xa, ga) = phi(a);
        let armijo_failed = !fa.is_finite() || fa > f0 + c1 * a * d0 || (iter > 0 && fa >= f_prev);
        if armijo_failed {
            return zoom(obj, x0, p, f0, d0, a_prev, f_prev, a, config);
        }
        if da.abs() <= -c2 * d0 {
            return Some(WolfeStep { x: xa, f: fa, g: ga });
        }
        if da >= 0.0 {
            return zoom(obj, x0, p, f0, d0, a, fa, a_prev, config);
        }
        a_prev = a;
        f_prev = fa;
        a *= 2.0;
    }
    None
}

/// Shrinks `[lo, hi]` (where `lo` satisfies Armijo) by bisection until the
/// curvature condition holds.
#[allow(clippy::too_many_arguments)]
fn zoom(
    obj: &impl Fn(&Vec3) -> (f64, Vec3),
    x0: &Vec3,
    p: &Vec3,
    f0: f64,
    d0: f64,
    mut lo: f64,
    mut f_lo: f64,
    mut hi: f64,
    config: &SolverConfig,
) -> Option<WolfeStep> {
    let (c1, c2) = (config.wolfe_c1, config.wolfe_c2);
    let phi = |a: f64| {
        let xa = x0 + a * p;
        let (f, g) = obj(&xa);
        (f, g.dot(p), xa, g)
    };

    for _ in 0..40 {
        let a = 0.5 * (lo + hi);
        let (fa, da, xa, ga) = phi(a);
        if !fa.is_finite() || fa > f0 + c1 * a * d0 || fa >= f_lo {
            hi = a;
        } else {
            if da.abs() <= -c2 * d0 {
                return Some(WolfeStep { x: xa, f: fa, g: ga });
            }
            if da * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = a;
            f_lo = fa;
        }
        if (hi - lo).abs() < 1e-16 {
            break;
        }
    }

    // The curvature condition was never met; settle for sufficient decrease.
    if lo > 0.0 && f_lo <= f0 + c1 * lo * d0 {
        let (fa, _, xa, ga) = phi(lo);
        return Some(WolfeStep { x: xa, f: fa, g: ga });
    }
    None
}
