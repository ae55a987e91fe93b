//! Delimited text formats and configuration loading.
//!
//! Three row formats, each with a header line that defines the column order.
//! Files may be comma- or whitespace-delimited (decided by whether the
//! header contains a comma); blank lines and `#` comments are skipped:
//!
//! - scan files: `scan_id,timestamp,x,y,z,doppler[,snr]`
//! - estimate logs: `timestamp,vx,vy,vz,status,inliers,total,residual_rms`
//! - reference trajectories: `timestamp,vx,vy,vz[,wx,wy,wz]`
//!
//! Columns beyond the known ones are ignored, so logs carrying extra fields
//! (azimuth, RCS, ...) load without conversion. Numbers are written with 9
//! significant digits; parsing a written file and writing it again
//! reproduces the text byte for byte, and values survive the first trip to
//! within one unit of the 9th significant digit.
//!
//! Configuration is TOML mirroring [`EstimatorConfig`] section by section.
//! Unknown keys are hard errors so typos cannot silently fall back to
//! defaults. Any key can also be supplied through the environment as
//! `EGOVEL_<SECTION>__<KEY>` (double underscore between section and key,
//! e.g. `EGOVEL_REJECTOR__METHOD=gnc`), which takes precedence over the
//! file.

use crate::consensus::RejectorMethod;
use crate::eval::GroundTruthSample;
use crate::gate::GateCombination;
use crate::loss::LossSpec;
use crate::pipeline::EstimatorConfig;
use crate::types::{Detection, DopplerSign, EstimateStatus, RadarScan, Vec3, VelocityEstimate};
use serde::Deserialize;
use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::path::Path;
use thiserror::Error;

/// Formats a number with 9 significant digits, switching to exponent
/// notation outside `1e-4..1e9`. Zero prints as `0`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..=8).contains(&mag) {
        format!("{:.*}", (8 - mag).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing required column '{0}'")]
    MissingColumn(&'static str),
    #[error("line {line}: scan_id {id} goes back before {last} (ids must be nondecreasing)")]
    NonMonotonicScanId { line: usize, id: u64, last: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, reason: impl Into<String>) -> FileError {
    FileError::Parse { line, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Delim {
    Comma,
    Whitespace,
}

fn split_row(line: &str, delim: Delim) -> Vec<&str> {
    match delim {
        Delim::Comma => line.split(',').map(str::trim).collect(),
        Delim::Whitespace => line.split_whitespace().collect(),
    }
}

/// A parsed header: delimiter choice plus column positions by name.
#[derive(Debug)]
struct Header {
    delim: Delim,
    columns: HashMap<String, usize>,
    n_cols: usize,
}

impl Header {
    fn parse(line: &str, line_no: usize) -> Result<Self, FileError> {
        let delim = if line.contains(',') { Delim::Comma } else { Delim::Whitespace };
        let mut columns = HashMap::new();
        let names = split_row(line, delim);
        for (idx, name) in names.iter().enumerate() {
            if columns.insert(name.to_ascii_lowercase(), idx).is_some() {
                return Err(parse_err(line_no, format!("duplicate column '{name}'")));
            }
        }
        Ok(Self { delim, columns, n_cols: names.len() })
    }

    fn require(&self, name: &'static str) -> Result<usize, FileError> {
        self.columns.get(name).copied().ok_or(FileError::MissingColumn(name))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    fn cells<'a>(&self, line: &'a str, line_no: usize) -> Result<Vec<&'a str>, FileError> {
        let cells = split_row(line, self.delim);
        if cells.len() != self.n_cols {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", self.n_cols, cells.len()),
            ));
        }
        Ok(cells)
    }
}

fn cell_f64(cells: &[&str], idx: usize, name: &str, line: usize) -> Result<f64, FileError> {
    cells[idx]
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("cannot parse {name} from {:?}", cells[idx])))
}

fn cell_int<T: std::str::FromStr>(
    cells: &[&str],
    idx: usize,
    name: &str,
    line: usize,
) -> Result<T, FileError> {
    cells[idx]
        .parse::<T>()
        .map_err(|_| parse_err(line, format!("cannot parse {name} from {:?}", cells[idx])))
}

/// Reads non-blank, non-comment lines while tracking line numbers.
struct LineSource<R: BufRead> {
    reader: R,
    line_no: usize,
}

impl<R: BufRead> LineSource<R> {
    fn new(reader: R) -> Self {
        Self { reader, line_no: 0 }
    }

    fn next_line(&mut self) -> Result<Option<(usize, String)>, FileError> {
        loop {
            let mut buf = String::new();
            if self.reader.read_line(&mut buf)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let trimmed = buf.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok(Some((self.line_no, trimmed.to_owned())));
        }
    }
}

/// Positions of the scan-file columns.
struct ScanColumns {
    scan_id: usize,
    timestamp: usize,
    x: usize,
    y: usize,
    z: usize,
    doppler: usize,
    snr: Option<usize>,
}

impl ScanColumns {
    fn from_header(header: &Header) -> Result<Self, FileError> {
        Ok(Self {
            scan_id: header.require("scan_id")?,
            timestamp: header.require("timestamp")?,
            x: header.require("x")?,
            y: header.require("y")?,
            z: header.require("z")?,
            doppler: header.require("doppler")?,
            snr: header.optional("snr"),
        })
    }
}

/// Incremental scan reader: yields each scan as soon as all its rows have
/// arrived, which is what makes line-streamed (stdin) and batch processing
/// behave identically.
pub struct ScanReader<R: BufRead> {
    source: LineSource<R>,
    header: Option<(Header, ScanColumns)>,
    sign: DopplerSign,
    pending: Option<(u64, RadarScan)>,
    last_id: Option<u64>,
}

impl<R: BufRead> ScanReader<R> {
    pub fn new(reader: R, sign: DopplerSign) -> Self {
        Self {
            source: LineSource::new(reader),
            header: None,
            sign,
            pending: None,
            last_id: None,
        }
    }

    /// Returns the next complete scan, or `None` at end of input.
    pub fn next_scan(&mut self) -> Result<Option<RadarScan>, FileError> {
        loop {
            let Some((line_no, line)) = self.source.next_line()? else {
                // End of input flushes the scan under construction.
                return Ok(self.pending.take().map(|(_, scan)| scan));
            };
            if self.header.is_none() {
                let header = Header::parse(&line, line_no)?;
                let columns = ScanColumns::from_header(&header)?;
                self.header = Some((header, columns));
                continue;
            }
            let (header, cols) = self.header.as_ref().expect("header parsed above");
            let cells = header.cells(&line, line_no)?;
            let id: u64 = cell_int(&cells, cols.scan_id, "scan_id", line_no)?;
            let timestamp = cell_f64(&cells, cols.timestamp, "timestamp", line_no)?;
            let position = Vec3::new(
                cell_f64(&cells, cols.x, "x", line_no)?,
                cell_f64(&cells, cols.y, "y", line_no)?,
                cell_f64(&cells, cols.z, "z", line_no)?,
            );
            let doppler = self.sign.apply(cell_f64(&cells, cols.doppler, "doppler", line_no)?);
            let detection = match cols.snr {
                Some(idx) => Detection::new(position, doppler, cell_f64(&cells, idx, "snr", line_no)?),
                None => Detection::without_snr(position, doppler),
            };

            if let Some(last) = self.last_id {
                if id < last {
                    return Err(FileError::NonMonotonicScanId { line: line_no, id, last });
                }
            }
            self.last_id = Some(id);

            match &mut self.pending {
                Some((pending_id, scan)) if *pending_id == id => {
                    if scan.timestamp != timestamp {
                        return Err(parse_err(
                            line_no,
                            format!(
                                "scan {id} has conflicting timestamps ({} vs {})",
                                scan.timestamp, timestamp
                            ),
                        ));
                    }
                    scan.detections.push(detection);
                }
                _ => {
                    let finished = self.pending.take().map(|(_, scan)| scan);
                    self.pending = Some((id, RadarScan::new(timestamp, vec![detection])));
                    if let Some(scan) = finished {
                        return Ok(Some(scan));
                    }
                }
            }
        }
    }
}

/// Reads a whole scan file. Equivalent to draining a [`ScanReader`].
pub fn read_scans(reader: impl BufRead, sign: DopplerSign) -> Result<Vec<RadarScan>, FileError> {
    let mut scans = Vec::new();
    let mut source = ScanReader::new(reader, sign);
    while let Some(scan) = source.next_scan()? {
        scans.push(scan);
    }
    Ok(scans)
}

/// Writes scans with sequential ids starting at 0. Detections are written in
/// the library's Doppler convention; scans without detections produce no
/// rows and therefore vanish on read.
pub fn write_scans(mut writer: impl Write, scans: &[RadarScan]) -> io::Result<()> {
    writeln!(writer, "scan_id,timestamp,x,y,z,doppler,snr")?;
    for (id, scan) in scans.iter().enumerate() {
        let t = fmt_sig(scan.timestamp);
        for d in &scan.detections {
            writeln!(
                writer,
                "{id},{t},{},{},{},{},{}",
                fmt_sig(d.position.x),
                fmt_sig(d.position.y),
                fmt_sig(d.position.z),
                fmt_sig(d.doppler),
                fmt_sig(d.snr),
            )?;
        }
    }
    Ok(())
}

pub const ESTIMATE_HEADER: &str = "timestamp,vx,vy,vz,status,inliers,total,residual_rms";

pub fn write_estimate_header(mut writer: impl Write) -> io::Result<()> {
    writeln!(writer, "{ESTIMATE_HEADER}")
}

pub fn write_estimate_row(mut writer: impl Write, est: &VelocityEstimate) -> io::Result<()> {
    writeln!(
        writer,
        "{},{},{},{},{},{},{},{}",
        fmt_sig(est.timestamp),
        fmt_sig(est.velocity.x),
        fmt_sig(est.velocity.y),
        fmt_sig(est.velocity.z),
        est.status,
        est.inlier_count,
        est.total_count,
        fmt_sig(est.residual_rms),
    )
}

pub fn write_estimates(mut writer: impl Write, estimates: &[VelocityEstimate]) -> io::Result<()> {
    write_estimate_header(&mut writer)?;
    for est in estimates {
        write_estimate_row(&mut writer, est)?;
    }
    Ok(())
}

pub fn read_estimates(reader: impl BufRead) -> Result<Vec<VelocityEstimate>, FileError> {
    let mut source = LineSource::new(reader);
    let Some((line_no, line)) = source.next_line()? else {
        return Ok(Vec::new());
    };
    let header = Header::parse(&line, line_no)?;
    let timestamp = header.require("timestamp")?;
    let vx = header.require("vx")?;
    let vy = header.require("vy")?;
    let vz = header.require("vz")?;
    let status = header.require("status")?;
    let inliers = header.require("inliers")?;
    let total = header.require("total")?;
    let residual_rms = header.require("residual_rms")?;

    let mut estimates = Vec::new();
    while let Some((line_no, line)) = source.next_line()? {
        let cells = header.cells(&line, line_no)?;
        estimates.push(VelocityEstimate {
            timestamp: cell_f64(&cells, timestamp, "timestamp", line_no)?,
            velocity: Vec3::new(
                cell_f64(&cells, vx, "vx", line_no)?,
                cell_f64(&cells, vy, "vy", line_no)?,
                cell_f64(&cells, vz, "vz", line_no)?,
            ),
            status: cells[status]
                .parse::<EstimateStatus>()
                .map_err(|e| parse_err(line_no, e.to_string()))?,
            inlier_count: cell_int(&cells, inliers, "inliers", line_no)?,
            total_count: cell_int(&cells, total, "total", line_no)?,
            residual_rms: cell_f64(&cells, residual_rms, "residual_rms", line_no)?,
        });
    }
    Ok(estimates)
}

/// A parsed reference trajectory plus whether the file carried angular
/// velocity columns (callers warn and use zero rotation when it did not).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFile {
    pub samples: Vec<GroundTruthSample>,
    pub has_angular: bool,
}

pub fn read_ground_truth(reader: impl BufRead) -> Result<GroundTruthFile, FileError> {
    let mut source = LineSource::new(reader);
    let Some((line_no, line)) = source.next_line()? else {
        return Ok(GroundTruthFile { samples: Vec::new(), has_angular: false });
    };
    let header = Header::parse(&line, line_no)?;
    let timestamp = header.require("timestamp")?;
    let vx = header.require("vx")?;
    let vy = header.require("vy")?;
    let vz = header.require("vz")?;
    // Angular velocity columns are all-or-nothing.
    let angular = if ["wx", "wy", "wz"].iter().any(|c| header.optional(c).is_some()) {
        Some((header.require("wx")?, header.require("wy")?, header.require("wz")?))
    } else {
        None
    };

    let mut samples: Vec<GroundTruthSample> = Vec::new();
    while let Some((line_no, line)) = source.next_line()? {
        let cells = header.cells(&line, line_no)?;
        let t = cell_f64(&cells, timestamp, "timestamp", line_no)?;
        if let Some(last) = samples.last() {
            if t <= last.timestamp {
                return Err(parse_err(
                    line_no,
                    format!("timestamps must be strictly increasing ({t} after {})", last.timestamp),
                ));
            }
        }
        let velocity = Vec3::new(
            cell_f64(&cells, vx, "vx", line_no)?,
            cell_f64(&cells, vy, "vy", line_no)?,
            cell_f64(&cells, vz, "vz", line_no)?,
        );
        let angular_velocity = match angular {
            Some((wx, wy, wz)) => Vec3::new(
                cell_f64(&cells, wx, "wx", line_no)?,
                cell_f64(&cells, wy, "wy", line_no)?,
                cell_f64(&cells, wz, "wz", line_no)?,
            ),
            None => Vec3::zeros(),
        };
        samples.push(GroundTruthSample::new(t, velocity, angular_velocity));
    }
    Ok(GroundTruthFile { samples, has_angular: angular.is_some() })
}

pub fn write_ground_truth(mut writer: impl Write, samples: &[GroundTruthSample]) -> io::Result<()> {
    writeln!(writer, "timestamp,vx,vy,vz,wx,wy,wz")?;
    for s in samples {
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            fmt_sig(s.timestamp),
            fmt_sig(s.velocity.x),
            fmt_sig(s.velocity.y),
            fmt_sig(s.velocity.z),
            fmt_sig(s.angular_velocity.x),
            fmt_sig(s.angular_velocity.y),
            fmt_sig(s.angular_velocity.z),
        )?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read configuration: {0}")]
    Io(#[from] io::Error),
    #[error("configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("environment override {var}: {reason}")]
    Env { var: String, reason: String },
}

/// Environment variables starting with this prefix override config keys.
pub const ENV_PREFIX: &str = "EGOVEL_";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    doppler_sign: Option<String>,
    filter_enabled: Option<bool>,
    #[serde(default)]
    rejector: RejectorSection,
    #[serde(default)]
    loss: LossSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    zero_velocity: ZeroVelocitySection,
    #[serde(default)]
    filter: FilterSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RejectorSection {
    method: Option<String>,
    inlier_threshold: Option<f64>,
    max_iterations: Option<usize>,
    confidence: Option<f64>,
    seed: Option<u64>,
    mlesac_sigma: Option<f64>,
    mlesac_outlier_span: Option<f64>,
    gnc_mu_init: Option<f64>,
    gnc_mu_divisor: Option<f64>,
    gnc_max_outer: Option<usize>,
    min_coplanarity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossSection {
    kind: Option<String>,
    scale: Option<f64>,
    alpha: Option<f64>,
    truncation: Option<f64>,
    snr_weighting: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    grad_tolerance: Option<f64>,
    step_tolerance: Option<f64>,
    max_iterations: Option<usize>,
    wolfe_c1: Option<f64>,
    wolfe_c2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZeroVelocitySection {
    doppler_threshold: Option<f64>,
    max_exceed_fraction: Option<f64>,
    min_detections: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSection {
    window_size: Option<usize>,
    norm_threshold: Option<f64>,
    max_acceleration: Option<f64>,
    combination: Option<String>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr; $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

/// Resolves the loss section: the `kind` name picks a base spec (including
/// the classic aliases), explicit keys then override what the name implies.
fn build_loss(section: LossSection) -> Result<LossSpec, ConfigError> {
    let mut spec = match &section.kind {
        None => LossSpec::default(),
        Some(kind) => {
            let canonical = kind.to_ascii_lowercase().replace('-', "_");
            match canonical.as_str() {
                "l2" | "ls" | "least_squares" => LossSpec::l2(),
                "wls" => LossSpec::l2().with_snr_weighting(true),
                "truncated_l2" | "tls" => LossSpec::truncated_l2(),
                "wtls" => LossSpec::truncated_l2().with_snr_weighting(true),
                "huber" => LossSpec::huber(),
                "cauchy" => LossSpec::cauchy(),
                "barron" | "general" => {
                    let alpha = section.alpha.ok_or_else(|| {
                        ConfigError::Invalid(format!(
                            "loss.kind = {kind:?} needs an explicit loss.alpha"
                        ))
                    })?;
                    LossSpec::barron(alpha)
                }
                "geman_mcclure" | "german_mcclure" => LossSpec::barron(-2.0),
                "l1_l2" => LossSpec::barron(1.0),
                "welsch" | "leclerc" => LossSpec::barron(f64::NEG_INFINITY),
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown loss kind {kind:?} (expected l2/ls, wls, truncated_l2/tls, \
                         wtls, huber, cauchy, barron, geman-mcclure, l1-l2, welsch or leclerc)"
                    )))
                }
            }
        }
    };
    if let Some(c) = section.scale {
        spec.c = c;
    }
    if let Some(alpha) = section.alpha {
        spec.alpha = alpha;
    }
    if let Some(t) = section.truncation {
        spec.truncation = t;
    }
    if let Some(s) = section.snr_weighting {
        spec.snr_weighting = s;
    }
    Ok(spec)
}

fn build_config(file: ConfigFile) -> Result<EstimatorConfig, ConfigError> {
    let mut cfg = EstimatorConfig::default();

    if let Some(sign) = &file.doppler_sign {
        cfg.doppler_sign = match sign.as_str() {
            "as_is" => DopplerSign::AsIs,
            "flipped" => DopplerSign::Flipped,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "doppler_sign must be \"as_is\" or \"flipped\", got {other:?}"
                )))
            }
        };
    }
    if let Some(enabled) = file.filter_enabled {
        cfg.filter_enabled = enabled;
    }

    if let Some(method) = &file.rejector.method {
        cfg.rejector.method = match method.to_ascii_lowercase().as_str() {
            "none" => RejectorMethod::None,
            "ransac" => RejectorMethod::Ransac,
            "mlesac" => RejectorMethod::Mlesac,
            "gnc" => RejectorMethod::Gnc,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "rejector.method must be none, ransac, mlesac or gnc, got {other:?}"
                )))
            }
        };
    }
    overlay!(cfg.rejector, file.rejector;
        inlier_threshold, max_iterations, confidence, seed, mlesac_sigma,
        mlesac_outlier_span, gnc_mu_init, gnc_mu_divisor, gnc_max_outer,
        min_coplanarity,
    );

    cfg.loss = build_loss(file.loss)?;

    overlay!(cfg.solver, file.solver;
        grad_tolerance, step_tolerance, max_iterations, wolfe_c1, wolfe_c2,
    );
    overlay!(cfg.zero_velocity, file.zero_velocity;
        doppler_threshold, max_exceed_fraction, min_detections,
    );
    overlay!(cfg.filter, file.filter; window_size, norm_threshold, max_acceleration);
    if let Some(combination) = &file.filter.combination {
        cfg.filter.combination = match combination.to_ascii_lowercase().as_str() {
            "reject_on_either" => GateCombination::RejectOnEither,
            "require_both" => GateCombination::RequireBoth,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "filter.combination must be reject_on_either or require_both, got {other:?}"
                )))
            }
        };
    }

    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

/// Best-effort typed TOML value from an environment string.
fn env_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_owned())
}

fn apply_env(
    table: &mut toml::Table,
    vars: impl Iterator<Item = (String, String)>,
) -> Result<(), ConfigError> {
    for (var, raw) in vars {
        let Some(path) = var.strip_prefix(ENV_PREFIX) else { continue };
        if path.is_empty() {
            continue;
        }
        let value = env_scalar(&raw);
        match path.split_once("__") {
            None => {
                table.insert(path.to_ascii_lowercase(), value);
            }
            Some((section, key)) if !section.is_empty() && !key.is_empty() => {
                let entry = table
                    .entry(section.to_ascii_lowercase())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                match entry.as_table_mut() {
                    Some(t) => {
                        t.insert(key.to_ascii_lowercase(), value);
                    }
                    None => {
                        return Err(ConfigError::Env {
                            var,
                            reason: "the config file uses this name for a non-section value".into(),
                        })
                    }
                }
            }
            _ => {
                return Err(ConfigError::Env {
                    var,
                    reason: "expected the form EGOVEL_KEY or EGOVEL_SECTION__KEY".into(),
                })
            }
        }
    }
    Ok(())
}

/// Builds a validated configuration from TOML text plus environment-style
/// overrides (highest precedence). An empty string yields the defaults.
pub fn config_from_sources(
    toml_text: &str,
    env: impl Iterator<Item = (String, String)>,
) -> Result<EstimatorConfig, ConfigError> {
    let mut table: toml::Table = toml_text.parse()?;
    apply_env(&mut table, env)?;
    let file: ConfigFile = toml::Value::Table(table).try_into()?;
    build_config(file)
}

/// Loads configuration from an optional TOML file and the process
/// environment. With no path, defaults plus environment overrides apply.
pub fn load_config(path: Option<&Path>) -> Result<EstimatorConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    config_from_sources(&text, std::env::vars())
}
