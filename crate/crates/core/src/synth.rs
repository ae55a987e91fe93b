//! Synthetic radar scenes with known ground truth.
//!
//! The generator builds scans from three detection populations:
//!
//! - **static** reflectors, whose Doppler is exactly the ego-motion
//!   projection plus measurement noise — the inliers;
//! - **dynamic** targets with an extra radial speed of random sign and
//!   magnitude, like other vehicles or pedestrians;
//! - **ghost** detections with one coherent Doppler bias, imitating the
//!   multipath reflections that all arrive through the same surface.
//!
//! Detections are laid out in that block order and every scan comes with the
//! matching inlier labels, so rejection quality can be scored exactly.
//!
//! All randomness flows from one seed through a counter-based generator.
//! The geometry (bearings, ranges, SNR, noise draws) depends only on the
//! seed, never on the ego velocity: two scenes that differ only in
//! `ego_velocity` share identical detections up to the Doppler column, which
//! makes controlled comparisons trivial.

use crate::types::{Detection, RadarScan, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

/// Where bearings come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectionModel {
    /// Uniform over the whole unit sphere (e.g. a spinning sensor).
    FullSphere,
    /// Uniform over a cone of the given half-angle around +x (a
    /// forward-facing automotive sensor).
    ForwardCone { half_angle_rad: f64 },
}

/// Recipe for one synthetic scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub n_static: usize,
    pub n_dynamic: usize,
    pub n_ghost: usize,
    /// True sensor velocity the static detections are consistent with [m/s].
    pub ego_velocity: Vec3,
    /// Standard deviation of the Doppler measurement noise [m/s].
    pub doppler_noise_sigma: f64,
    /// Extra radial speed of dynamic targets is drawn uniformly from
    /// `[dynamic_radial_min, dynamic_radial_max]` with a random sign [m/s].
    pub dynamic_radial_min: f64,
    pub dynamic_radial_max: f64,
    /// Coherent Doppler offset shared by all ghost detections [m/s].
    pub ghost_doppler_bias: f64,
    pub directions: DirectionModel,
    /// Reflector ranges are uniform in `[range_min, range_max)` [m].
    pub range_min: f64,
    pub range_max: f64,
    /// SNR values are uniform in `[snr_min, snr_max)` [dB].
    pub snr_min: f64,
    pub snr_max: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_static: 100,
            n_dynamic: 0,
            n_ghost: 0,
            ego_velocity: Vec3::zeros(),
            doppler_noise_sigma: 0.0,
            dynamic_radial_min: 0.5,
            dynamic_radial_max: 5.0,
            ghost_doppler_bias: 2.0,
            directions: DirectionModel::FullSphere,
            range_min: 1.0,
            range_max: 50.0,
            snr_min: 5.0,
            snr_max: 30.0,
            seed: 0,
        }
    }
}

/// SplitMix64 step; decorrelates per-scan seeds derived from one base seed.
pub(crate) fn mix_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_direction(rng: &mut ChaCha8Rng, model: &DirectionModel) -> Vec3 {
    match model {
        DirectionModel::FullSphere => loop {
            let v = Vec3::new(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            );
            let n = v.norm();
            if n > 1e-6 {
                return v / n;
            }
        },
        DirectionModel::ForwardCone { half_angle_rad } => {
            let cos_min = half_angle_rad.cos();
            let cos_theta = rng.random_range(cos_min..=1.0);
            let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            Vec3::new(cos_theta, sin_theta * phi.cos(), sin_theta * phi.sin())
        }
    }
}

/// Generates one scan and its inlier labels (`true` = static detection).
///
/// Identical specs produce identical scans.
pub fn generate_scan(spec: &SceneSpec, timestamp: f64) -> (RadarScan, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = if spec.doppler_noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.doppler_noise_sigma).expect("sigma checked positive"))
    } else {
        None
    };

    let total = spec.n_static + spec.n_dynamic + spec.n_ghost;
    let mut detections = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);

    for k in 0..total {
        let u = sample_direction(&mut rng, &spec.directions);
        let range = rng.random_range(spec.range_min..spec.range_max);
        let snr = rng.random_range(spec.snr_min..spec.snr_max);

        let mut doppler = -u.dot(&spec.ego_velocity);
        let is_static = k < spec.n_static;
        if !is_static {
            if k < spec.n_static + spec.n_dynamic {
                // Dynamic target: extra radial speed, random sign.
                let magnitude =
                    rng.random_range(spec.dynamic_radial_min..=spec.dynamic_radial_max);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                doppler += sign * magnitude;
            } else {
                doppler += spec.ghost_doppler_bias;
            }
        }
        if let Some(n) = &noise {
            doppler += n.sample(&mut rng);
        }

        detections.push(Detection::new(range * u, doppler, snr));
        labels.push(is_static);
    }

    (RadarScan::new(timestamp, detections), labels)
}

/// A scan at `index` whose Doppler data encodes an extra velocity `offset` —
/// a sensor-level glitch that produces a self-consistent but kinematically
/// impossible estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WildInjection {
    pub index: usize,
    pub offset: Vec3,
}

/// Velocity-vs-time profiles used by the stream generator and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityProfile {
    Constant(Vec3),
    /// `base + amplitude .* sin(2 pi f t)` per axis.
    Sinusoid {
        base: Vec3,
        amplitude: Vec3,
        frequency_hz: Vec3,
    },
}

impl VelocityProfile {
    pub fn at(&self, t: f64) -> Vec3 {
        match self {
            VelocityProfile::Constant(v) => *v,
            VelocityProfile::Sinusoid { base, amplitude, frequency_hz } => {
                let phase = |f: f64| (std::f64::consts::TAU * f * t).sin();
                base + Vec3::new(
                    amplitude.x * phase(frequency_hz.x),
                    amplitude.y * phase(frequency_hz.y),
                    amplitude.z * phase(frequency_hz.z),
                )
            }
        }
    }
}

/// Generates `round(rate_hz * duration_s)` scans at `t_k = k / rate_hz`
/// following a velocity profile, each scan with its own derived seed.
///
/// Returns `(scan, true_velocity)` pairs. Wild injections corrupt the *scan
/// data* (the Doppler column encodes `profile(t) + offset`) while the
/// returned true velocity stays on the profile — exactly the situation a
/// downstream feasibility filter exists to catch.
pub fn generate_stream(
    base: &SceneSpec,
    profile: impl Fn(f64) -> Vec3,
    rate_hz: f64,
    duration_s: f64,
    injections: &[WildInjection],
) -> Vec<(RadarScan, Vec3)> {
    assert!(rate_hz > 0.0, "scan rate must be positive");
    let count = (rate_hz * duration_s).round().max(0.0) as usize;
    (0..count)
        .map(|k| {
            let t = k as f64 / rate_hz;
            let truth = profile(t);
            let mut encoded = truth;
            if let Some(w) = injections.iter().find(|w| w.index == k) {
                encoded += w.offset;
            }
            let spec = SceneSpec {
                ego_velocity: encoded,
                seed: mix_seed(base.seed, k as u64),
                ..base.clone()
            };
            (generate_scan(&spec, t).0, truth)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_linear_ls;
    use crate::types::residual;
    use approx::assert_relative_eq;

    fn moving_spec() -> SceneSpec {
        SceneSpec {
            n_static: 60,
            ego_velocity: Vec3::new(3.0, -1.0, 0.5),
            seed: 7,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn identical_specs_generate_identical_scans() {
        let spec = moving_spec();
        let (a, la) = generate_scan(&spec, 1.5);
        let (b, lb) = generate_scan(&spec, 1.5);
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn labels_follow_the_block_layout() {
        let spec = SceneSpec {
            n_static: 10,
            n_dynamic: 4,
            n_ghost: 3,
            ..moving_spec()
        };
        let (scan, labels) = generate_scan(&spec, 0.0);
        assert_eq!(scan.len(), 17);
        assert_eq!(labels.len(), 17);
        assert!(labels[..10].iter().all(|&l| l));
        assert!(labels[10..].iter().all(|&l| !l));
    }

    #[test]
    fn noise_free_static_detections_are_exactly_consistent() {
        let spec = moving_spec();
        let (scan, _) = generate_scan(&spec, 0.0);
        for d in &scan.detections {
            let r = residual(d, &spec.ego_velocity).unwrap();
            assert!(r.abs() < 1e-12, "static residual {r} should vanish");
        }
        // And the linear solve recovers the exact velocity.
        let mask = vec![true; scan.len()];
        let weights = vec![1.0; scan.len()];
        let solved = solve_linear_ls(&scan, &mask, &weights).unwrap();
        assert_relative_eq!(solved.velocity, spec.ego_velocity, epsilon = 1e-10);
    }

    #[test]
    fn dynamic_targets_carry_bounded_two_sided_offsets() {
        let spec = SceneSpec {
            n_static: 0,
            n_dynamic: 200,
            dynamic_radial_min: 0.5,
            dynamic_radial_max: 5.0,
            ..moving_spec()
        };
        let (scan, _) = generate_scan(&spec, 0.0);
        let mut positive = 0;
        let mut negative = 0;
        for d in &scan.detections {
            let r = residual(d, &spec.ego_velocity).unwrap();
            assert!(
                (0.5..=5.0).contains(&r.abs()),
                "dynamic offset {r} outside the configured band"
            );
            if r > 0.0 {
                positive += 1;
            } else {
                negative += 1;
            }
        }
        assert!(positive > 50 && negative > 50, "both signs must occur ({positive}/{negative})");
    }

    #[test]
    fn ghost_detections_share_one_coherent_bias() {
        let spec = SceneSpec {
            n_static: 0,
            n_ghost: 50,
            ghost_doppler_bias: 2.0,
            ..moving_spec()
        };
        let (scan, _) = generate_scan(&spec, 0.0);
        for d in &scan.detections {
            let r = residual(d, &spec.ego_velocity).unwrap();
            assert_relative_eq!(r, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_cone_respects_the_half_angle() {
        let half = 0.6;
        let spec = SceneSpec {
            n_static: 500,
            directions: DirectionModel::ForwardCone { half_angle_rad: half },
            ..moving_spec()
        };
        let (scan, _) = generate_scan(&spec, 0.0);
        for d in &scan.detections {
            let u = d.direction().unwrap();
            assert!(
                u.x >= half.cos() - 1e-12,
                "bearing {u:?} outside the {half} rad cone"
            );
        }
    }

    #[test]
    fn full_sphere_covers_all_octants_with_unit_bearings() {
        let spec = SceneSpec { n_static: 2000, ..moving_spec() };
        let (scan, _) = generate_scan(&spec, 0.0);
        let mut mean = Vec3::zeros();
        for d in &scan.detections {
            let u = d.direction().unwrap();
            assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-12);
            mean += u;
        }
        mean /= scan.len() as f64;
        assert!(mean.norm() < 0.1, "directional bias {mean:?} on the sphere");
    }

    #[test]
    fn ranges_and_snr_stay_in_their_intervals() {
        let spec = SceneSpec {
            n_static: 300,
            range_min: 2.0,
            range_max: 20.0,
            snr_min: 1.0,
            snr_max: 9.0,
            ..moving_spec()
        };
        let (scan, _) = generate_scan(&spec, 0.0);
        for d in &scan.detections {
            assert!((2.0..20.0).contains(&d.range()));
            assert!((1.0..9.0).contains(&d.snr));
        }
    }

    #[test]
    fn geometry_is_independent_of_the_ego_velocity() {
        let a_spec = moving_spec();
        let b_spec = SceneSpec { ego_velocity: Vec3::new(-4.0, 2.0, 1.0), ..a_spec.clone() };
        let (a, _) = generate_scan(&a_spec, 0.0);
        let (b, _) = generate_scan(&b_spec, 0.0);
        let delta = b_spec.ego_velocity - a_spec.ego_velocity;
        for (da, db) in a.detections.iter().zip(&b.detections) {
            assert_eq!(da.position, db.position, "geometry must be velocity-invariant");
            assert_eq!(da.snr, db.snr);
            let u = da.direction().unwrap();
            assert_relative_eq!(db.doppler - da.doppler, -u.dot(&delta), epsilon = 1e-12);
        }
    }

    #[test]
    fn doppler_noise_scatter_matches_sigma() {
        let sigma = 0.05;
        let spec = SceneSpec {
            n_static: 4000,
            doppler_noise_sigma: sigma,
            ..moving_spec()
        };
        let (scan, _) = generate_scan(&spec, 0.0);
        let residuals: Vec<f64> = scan
            .detections
            .iter()
            .map(|d| residual(d, &spec.ego_velocity).unwrap())
            .collect();
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
            / residuals.len() as f64;
        assert!(mean.abs() < 0.01, "noise mean {mean} should be near zero");
        assert!(
            (var.sqrt() - sigma).abs() < 0.3 * sigma,
            "noise std {} should be near {sigma}",
            var.sqrt()
        );
    }

    #[test]
    fn stream_length_and_timestamps_follow_the_rate() {
        let scans = generate_stream(
            &SceneSpec { n_static: 5, ..SceneSpec::default() },
            |_| Vec3::new(1.0, 0.0, 0.0),
            10.0,
            78.9,
            &[],
        );
        assert_eq!(scans.len(), 789);
        assert_relative_eq!(scans[0].0.timestamp, 0.0);
        assert_relative_eq!(scans[10].0.timestamp, 1.0, epsilon = 1e-12);
        assert_relative_eq!(scans[788].0.timestamp, 78.8, epsilon = 1e-12);
    }

    #[test]
    fn stream_scans_use_distinct_derived_seeds() {
        let scans = generate_stream(
            &SceneSpec { n_static: 20, ..SceneSpec::default() },
            |_| Vec3::zeros(),
            10.0,
            1.0,
            &[],
        );
        let first = &scans[0].0;
        let second = &scans[1].0;
        assert_ne!(
            first.detections[0].position, second.detections[0].position,
            "scans must not repeat the same geometry"
        );
    }

    #[test]
    fn wild_injection_corrupts_the_data_but_not_the_truth() {
        let profile = |_: f64| Vec3::new(2.0, 0.0, 0.0);
        let offset = Vec3::new(9.0, 0.0, 0.0);
        let scans = generate_stream(
            &SceneSpec { n_static: 50, ..SceneSpec::default() },
            profile,
            10.0,
            2.0,
            &[WildInjection { index: 7, offset }],
        );
        let (wild_scan, truth) = &scans[7];
        assert_relative_eq!(*truth, Vec3::new(2.0, 0.0, 0.0));
        let mask = vec![true; wild_scan.len()];
        let weights = vec![1.0; wild_scan.len()];
        let solved = solve_linear_ls(wild_scan, &mask, &weights).unwrap();
        assert_relative_eq!(
            solved.velocity,
            Vec3::new(11.0, 0.0, 0.0),
            epsilon = 1e-9
        );
    }
}
