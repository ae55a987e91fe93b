//! `egovel` — radar ego-velocity estimation at the command line.
//!
//! Three subcommands cover the whole workflow:
//!
//! - `estimate` runs the per-scan pipeline over a scan file (or stdin, one
//!   estimate emitted as each scan completes) and writes an estimate log;
//! - `eval` scores an estimate log against a reference trajectory and
//!   reports per-axis AVE/RMSE;
//! - `synth` generates labelled synthetic fixtures from a scene description.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O or data
//! error, 3 empty result (no scans, or nothing to score).

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use egovel::consensus::RejectorMethod;
use egovel::eval::{score, ExtrinsicSpec};
use egovel::io::{
    load_config, read_estimates, read_ground_truth, write_estimate_header, write_estimate_row,
    write_ground_truth, write_scans, ConfigError, FileError, ScanReader,
};
use egovel::pipeline::Pipeline;
use egovel::synth::{generate_stream, DirectionModel, SceneSpec, VelocityProfile, WildInjection};
use egovel::types::{Mat3, Vec3};
use serde::Deserialize;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "egovel",
    version,
    about = "Instantaneous radar ego-velocity estimation from Doppler point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimation pipeline over a scan file or stream.
    Estimate(EstimateArgs),
    /// Score an estimate log against a reference trajectory.
    Eval(EvalArgs),
    /// Generate a synthetic scan fixture (and optionally its ground truth).
    Synth(SynthArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// TOML configuration; defaults apply when omitted. Environment
    /// variables EGOVEL_SECTION__KEY override individual keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scan file, or '-' to stream line-by-line from stdin.
    #[arg(long, default_value = "-")]
    input: String,
    /// Estimate log destination, or '-' for stdout.
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimate log produced by `estimate`.
    #[arg(long)]
    estimates: PathBuf,
    /// Reference trajectory file (timestamp,vx,vy,vz[,wx,wy,wz]).
    #[arg(long)]
    gt: PathBuf,
    /// Radar position in the reference body frame, metres.
    #[arg(long, value_name = "X,Y,Z")]
    lever_arm: Option<String>,
    /// Body-to-radar rotation, nine row-major entries.
    #[arg(long, value_name = "R00,R01,...,R22")]
    rotation: Option<String>,
    /// Where to write the JSON error report (the table always prints).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene/stream description in TOML.
    #[arg(long)]
    spec: PathBuf,
    /// Scan file destination, or '-' for stdout.
    #[arg(long, default_value = "-")]
    output: String,
    /// Optional ground-truth file to write alongside the scans.
    #[arg(long)]
    gt: Option<PathBuf>,
}

/// An error carrying the process exit code it should produce.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(1, message)
    }

    fn in_file(path: &str, err: FileError) -> Self {
        CliError::new(2, format!("{path}: {err}"))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(2, e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new(1, e.to_string())
    }
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        let file = File::open(path)
            .map_err(|e| CliError::new(2, format!("cannot open {path}: {e}")))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn open_output(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let file = File::create(path)
            .map_err(|e| CliError::new(2, format!("cannot create {path}: {e}")))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn run_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let mut pipeline = Pipeline::new(config.clone());
    let mut reader = ScanReader::new(open_input(&args.input)?, config.doppler_sign);
    let mut output = open_output(&args.output)?;

    write_estimate_header(&mut output)?;
    let mut scan_count = 0usize;
    let mut warned_gnc_size = false;
    while let Some(scan) = reader
        .next_scan()
        .map_err(|e| CliError::in_file(&args.input, e))?
    {
        if config.rejector.method == RejectorMethod::Gnc
            && scan.len() > 100
            && !warned_gnc_size
        {
            eprintln!(
                "warning: scan with {} detections exceeds the recommended maximum of 100 \
                 for the gnc rejector; results may degrade",
                scan.len()
            );
            warned_gnc_size = true;
        }
        let estimate = pipeline.process_scan(&scan);
        write_estimate_row(&mut output, &estimate)?;
        // Flush per scan so downstream consumers see estimates as they
        // happen when the log goes to a pipe.
        output.flush()?;
        scan_count += 1;
    }
    if scan_count == 0 {
        return Err(CliError::new(3, format!("{}: no scans in input", args.input)));
    }
    Ok(())
}

fn parse_numbers(raw: &str, expected: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == expected => Ok(v),
        Ok(v) => Err(CliError::usage(format!(
            "{what} needs {expected} comma-separated numbers, got {}",
            v.len()
        ))),
        Err(e) => Err(CliError::usage(format!("{what}: {e}"))),
    }
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let estimates_path = args.estimates.display().to_string();
    let estimates = read_estimates(open_input(&estimates_path)?)
        .map_err(|e| CliError::in_file(&estimates_path, e))?;
    let gt_path = args.gt.display().to_string();
    let gt = read_ground_truth(open_input(&gt_path)?)
        .map_err(|e| CliError::in_file(&gt_path, e))?;
    if !gt.has_angular {
        eprintln!(
            "warning: {gt_path} has no angular velocity columns; treating it as zero \
             (the lever arm then has no effect)"
        );
    }

    let lever_arm = match &args.lever_arm {
        Some(raw) => {
            let v = parse_numbers(raw, 3, "--lever-arm")?;
            Vec3::new(v[0], v[1], v[2])
        }
        None => Vec3::zeros(),
    };
    let rotation = match &args.rotation {
        Some(raw) => {
            let r = parse_numbers(raw, 9, "--rotation")?;
            Mat3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8])
        }
        None => Mat3::identity(),
    };
    let ext = ExtrinsicSpec { lever_arm, rotation };

    let report = score(&estimates, &gt.samples, &ext).map_err(|e| {
        use egovel::eval::EvalError;
        match e {
            EvalError::NoPairs => CliError::new(3, e.to_string()),
            EvalError::InvalidRotation { .. } => CliError::usage(e.to_string()),
            other => CliError::new(2, other.to_string()),
        }
    })?;

    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::new(2, format!("cannot encode report: {e}")))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::new(2, format!("cannot write {}: {e}", path.display())))?;
    }
    print!("{}", report.render_table());
    Ok(())
}

/// TOML description of a synthetic stream (see `synth --help`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthSpec {
    #[serde(default)]
    scene: SceneSection,
    #[serde(default)]
    stream: StreamSection,
    #[serde(default)]
    wild: Vec<WildSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneSection {
    n_static: Option<usize>,
    n_dynamic: Option<usize>,
    n_ghost: Option<usize>,
    doppler_noise_sigma: Option<f64>,
    dynamic_radial_min: Option<f64>,
    dynamic_radial_max: Option<f64>,
    ghost_doppler_bias: Option<f64>,
    directions: Option<String>,
    cone_half_angle_rad: Option<f64>,
    range_min: Option<f64>,
    range_max: Option<f64>,
    snr_min: Option<f64>,
    snr_max: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StreamSection {
    rate_hz: f64,
    duration_s: f64,
    profile: Option<String>,
    velocity: Option<[f64; 3]>,
    amplitude: Option<[f64; 3]>,
    frequency_hz: Option<[f64; 3]>,
}

impl Default for StreamSection {
    fn default() -> Self {
        Self {
            rate_hz: 10.0,
            duration_s: 10.0,
            profile: None,
            velocity: None,
            amplitude: None,
            frequency_hz: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WildSection {
    index: usize,
    offset: [f64; 3],
}

fn vec3_of(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn build_scene(section: &SceneSection) -> Result<SceneSpec, CliError> {
    let mut scene = SceneSpec::default();
    if let Some(v) = section.n_static {
        scene.n_static = v;
    }
    if let Some(v) = section.n_dynamic {
        scene.n_dynamic = v;
    }
    if let Some(v) = section.n_ghost {
        scene.n_ghost = v;
    }
    if let Some(v) = section.doppler_noise_sigma {
        scene.doppler_noise_sigma = v;
    }
    if let Some(v) = section.dynamic_radial_min {
        scene.dynamic_radial_min = v;
    }
    if let Some(v) = section.dynamic_radial_max {
        scene.dynamic_radial_max = v;
    }
    if let Some(v) = section.ghost_doppler_bias {
        scene.ghost_doppler_bias = v;
    }
    if let Some(v) = section.range_min {
        scene.range_min = v;
    }
    if let Some(v) = section.range_max {
        scene.range_max = v;
    }
    if let Some(v) = section.snr_min {
        scene.snr_min = v;
    }
    if let Some(v) = section.snr_max {
        scene.snr_max = v;
    }
    if let Some(v) = section.seed {
        scene.seed = v;
    }
    match section.directions.as_deref() {
        None | Some("full_sphere") => {}
        Some("forward_cone") => {
            let half = section.cone_half_angle_rad.unwrap_or(0.8);
            if !(half > 0.0 && half <= std::f64::consts::PI) {
                return Err(CliError::usage(format!(
                    "scene.cone_half_angle_rad must lie in (0, pi], got {half}"
                )));
            }
            scene.directions = DirectionModel::ForwardCone { half_angle_rad: half };
        }
        Some(other) => {
            return Err(CliError::usage(format!(
                "scene.directions must be full_sphere or forward_cone, got {other:?}"
            )))
        }
    }
    if scene.doppler_noise_sigma.is_nan() || scene.doppler_noise_sigma < 0.0 {
        return Err(CliError::usage("scene.doppler_noise_sigma must be non-negative"));
    }
    if !(scene.range_min > 0.0 && scene.range_min < scene.range_max) {
        return Err(CliError::usage("scene ranges must satisfy 0 < range_min < range_max"));
    }
    if scene.snr_min.is_nan() || scene.snr_max.is_nan() || scene.snr_min >= scene.snr_max {
        return Err(CliError::usage("scene SNRs must satisfy snr_min < snr_max"));
    }
    if !(scene.dynamic_radial_min > 0.0 && scene.dynamic_radial_min <= scene.dynamic_radial_max) {
        return Err(CliError::usage(
            "dynamic radial speeds must satisfy 0 < dynamic_radial_min <= dynamic_radial_max",
        ));
    }
    Ok(scene)
}

fn build_profile(section: &StreamSection) -> Result<VelocityProfile, CliError> {
    let velocity = vec3_of(section.velocity.unwrap_or([2.0, 0.0, 0.0]));
    match section.profile.as_deref() {
        None | Some("constant") => Ok(VelocityProfile::Constant(velocity)),
        Some("sinusoid") => Ok(VelocityProfile::Sinusoid {
            base: velocity,
            amplitude: vec3_of(section.amplitude.unwrap_or([1.0, 0.0, 0.0])),
            frequency_hz: vec3_of(section.frequency_hz.unwrap_or([0.1, 0.0, 0.0])),
        }),
        Some(other) => Err(CliError::usage(format!(
            "stream.profile must be constant or sinusoid, got {other:?}"
        ))),
    }
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::new(2, format!("cannot read {}: {e}", args.spec.display())))?;
    let spec: SynthSpec = toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.spec.display())))?;

    let scene = build_scene(&spec.scene)?;
    let profile = build_profile(&spec.stream)?;
    if spec.stream.rate_hz.is_nan() || spec.stream.rate_hz <= 0.0 {
        return Err(CliError::usage("stream.rate_hz must be positive"));
    }
    if spec.stream.duration_s.is_nan() || spec.stream.duration_s < 0.0 {
        return Err(CliError::usage("stream.duration_s must be non-negative"));
    }
    let injections: Vec<WildInjection> = spec
        .wild
        .iter()
        .map(|w| WildInjection { index: w.index, offset: vec3_of(w.offset) })
        .collect();

    let stream = generate_stream(
        &scene,
        |t| profile.at(t),
        spec.stream.rate_hz,
        spec.stream.duration_s,
        &injections,
    );
    if stream.is_empty() {
        return Err(CliError::new(3, "the stream description produces no scans"));
    }

    let scans: Vec<_> = stream.iter().map(|(s, _)| s.clone()).collect();
    let mut output = open_output(&args.output)?;
    write_scans(&mut output, &scans)?;
    output.flush()?;

    if let Some(gt_path) = &args.gt {
        let samples: Vec<_> = stream
            .iter()
            .map(|(s, v)| egovel::eval::GroundTruthSample::new(s.timestamp, *v, Vec3::zeros()))
            .collect();
        let file = File::create(gt_path)
            .map_err(|e| CliError::new(2, format!("cannot create {}: {e}", gt_path.display())))?;
        let mut writer = BufWriter::new(file);
        write_ground_truth(&mut writer, &samples)?;
        writer.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let result = match cli.command {
        Command::Estimate(args) => run_estimate(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
