//! Run configuration, the three experiment commands, and their outputs.
//!
//! Configuration values are dimensionless: detunings and rates in units of
//! `g`, times in units of `1/g`. The config file is JSON with sections
//! mirroring [`RunConfig`]; every field except `model.g` has a default.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{evolve_unitary, run_protocol, Diagnostics, FinalState, IntegratorConfig};
use crate::entanglement::{report, EntanglementReport};
use crate::model::{ModelParams, NoiseConfig, NoiseKind, PhysicalCalibration};
use crate::protocol::{basis_input, canonical_entangling_schedule, Schedule};

pub const CSV_HEADER: &str = "gamma_over_g,noise_kind,concurrence,eof,leakage,trace_error";

/// Per-row fidelity required by the truth table.
pub const TRUTH_TABLE_MIN_FIDELITY: f64 = 0.99;
/// Allowed deviation of the (1,1) row's relative phase from π, radians.
pub const TRUTH_TABLE_PHASE_TOL: f64 = 1e-2;

pub const LEAKAGE_CONVENTION: &str =
    "cavity traced out, dots projected onto {|0>,|1>}, renormalized; leakage reported separately";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("diagnostic breach: {0}")]
    Diagnostic(String),
}

impl ExperimentError {
    /// 1 validation, 2 diagnostic breach, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } | ExperimentError::Model(_) => 1,
            ExperimentError::Diagnostic(_) => 2,
            ExperimentError::Io { .. } => 3,
        }
    }

    fn config(path: &str, message: impl Into<String>) -> Self {
        ExperimentError::Config { path: path.into(), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub g: f64,
    /// Frequency offset of dot A relative to dot B, in units of g.
    pub delta_omega: f64,
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    pub gamma_over_g: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { kind: NoiseKind::None, gamma_over_g: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    /// Log-spaced values from `min` to `max` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let ratio = self.max / self.min;
        let last = self.points - 1;
        (0..self.points)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => self.min * ratio.powf(i as f64 / last as f64),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<NoiseKind>,
    #[serde(default = "default_grid")]
    pub gamma_over_g: GridSpec,
}

fn default_kinds() -> Vec<NoiseKind> {
    NoiseKind::ALL_CHANNELS.to_vec()
}

fn default_grid() -> GridSpec {
    GridSpec { min: 1e-3, max: 1.0, points: 25 }
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { kinds: default_kinds(), gamma_over_g: default_grid() }
    }
}

/// Fully resolved configuration. Serializing it gives a complete config
/// file with every default spelled out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSection,
    pub noise: NoiseSection,
    pub integrator: IntegratorConfig,
    pub sweep: Option<SweepSpec>,
    pub output_path: Option<PathBuf>,
    pub calibration: PhysicalCalibration,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection { g: 1.0, delta_omega: 20.0, n_max: 2 },
            noise: NoiseSection::default(),
            integrator: IntegratorConfig::default(),
            sweep: Some(SweepSpec::default()),
            output_path: None,
            calibration: PhysicalCalibration::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    g: Option<f64>,
    delta_omega: Option<f64>,
    n_max: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    kind: Option<NoiseKind>,
    gamma_over_g: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    noise: Option<RawNoise>,
    integrator: Option<IntegratorConfig>,
    sweep: Option<SweepSpec>,
    output_path: Option<PathBuf>,
    calibration: Option<PhysicalCalibration>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ExperimentError::config(&path, e.into_inner().to_string())
        })?;
        let defaults = RunConfig::default();
        let model = raw.model.ok_or_else(|| ExperimentError::config("model.g", "required field is missing"))?;
        let g = model.g.ok_or_else(|| ExperimentError::config("model.g", "required field is missing"))?;
        let noise = raw.noise.map_or(defaults.noise, |n| NoiseSection {
            kind: n.kind.unwrap_or(NoiseKind::None),
            gamma_over_g: n.gamma_over_g.unwrap_or(0.0),
        });
        let cfg = RunConfig {
            model: ModelSection {
                g,
                delta_omega: model.delta_omega.unwrap_or(defaults.model.delta_omega),
                n_max: model.n_max.unwrap_or(defaults.model.n_max),
            },
            noise,
            integrator: raw.integrator.unwrap_or_default(),
            sweep: raw.sweep,
            output_path: raw.output_path,
            calibration: raw.calibration.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ExperimentError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.g > 0.0 && m.g.is_finite()) {
            return Err(ExperimentError::config("model.g", "must be positive and finite"));
        }
        if !m.delta_omega.is_finite() {
            return Err(ExperimentError::config("model.delta_omega", "must be finite"));
        }
        if m.n_max < 1 {
            return Err(ExperimentError::config("model.n_max", "must be at least 1"));
        }
        if !(self.noise.gamma_over_g >= 0.0 && self.noise.gamma_over_g.is_finite()) {
            return Err(ExperimentError::config("noise.gamma_over_g", "must be non-negative"));
        }
        self.integrator.validate()?;
        self.calibration.validate()?;
        if let Some(s) = &self.sweep {
            if !(s.gamma_over_g.min > 0.0) {
                return Err(ExperimentError::config("sweep.gamma_over_g.min", "must be positive"));
            }
            if !(s.gamma_over_g.max >= s.gamma_over_g.min && s.gamma_over_g.max.is_finite()) {
                return Err(ExperimentError::config("sweep.gamma_over_g.max", "must be finite and ≥ min"));
            }
            if s.gamma_over_g.points < 2 {
                return Err(ExperimentError::config("sweep.gamma_over_g.points", "must be at least 2"));
            }
            if s.kinds.is_empty() {
                return Err(ExperimentError::config("sweep.kinds", "must not be empty"));
            }
        }
        Ok(())
    }

    /// Engine parameters in absolute units.
    pub fn model_params(&self) -> Result<ModelParams> {
        let g = self.model.g;
        Ok(ModelParams::two_dot(g, self.model.delta_omega * g, self.model.n_max)?)
    }

    pub fn noise_config(&self, kind: NoiseKind, gamma_over_g: f64) -> Result<NoiseConfig> {
        Ok(NoiseConfig::new(kind, gamma_over_g * self.model.g)?)
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig { dt: self.integrator.dt / self.model.g, ..self.integrator }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub gamma_over_g: f64,
    pub noise_kind: NoiseKind,
    pub concurrence: f64,
    pub eof: f64,
    pub leakage: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_top_fock_population: f64,
    pub failed: bool,
    pub breaches: Vec<String>,
}

impl PointResult {
    fn new(kind: NoiseKind, gamma_over_g: f64, rep: EntanglementReport, d: Diagnostics, breaches: Vec<String>) -> Self {
        Self {
            gamma_over_g,
            noise_kind: kind,
            concurrence: rep.concurrence,
            eof: rep.eof,
            leakage: rep.leakage,
            max_trace_drift: d.max_trace_drift,
            min_eigenvalue: d.min_eigenvalue,
            max_top_fock_population: d.max_top_fock_population,
            failed: !breaches.is_empty(),
            breaches,
        }
    }

    fn failure(kind: NoiseKind, gamma_over_g: f64, message: String) -> Self {
        Self {
            gamma_over_g,
            noise_kind: kind,
            concurrence: f64::NAN,
            eof: f64::NAN,
            leakage: f64::NAN,
            max_trace_drift: f64::NAN,
            min_eigenvalue: f64::NAN,
            max_top_fock_population: f64::NAN,
            failed: true,
            breaches: vec![message],
        }
    }
}

/// Runs the protocol once and reduces the result. Numerical failures are
/// folded into the returned point rather than propagated.
pub fn run_point(config: &RunConfig, kind: NoiseKind, gamma_over_g: f64) -> Result<PointResult> {
    let params = config.model_params()?;
    let noise = config.noise_config(kind, gamma_over_g)?;
    let out = match run_protocol(&params, &noise, &config.integrator_config()) {
        Ok(out) => out,
        Err(e) => return Ok(PointResult::failure(kind, gamma_over_g, e.to_string())),
    };
    Ok(match report(&out.final_state.density()) {
        Ok(rep) => PointResult::new(kind, gamma_over_g, rep, out.diagnostics, out.breaches),
        Err(e) => PointResult::failure(kind, gamma_over_g, e.to_string()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTableRow {
    pub input: [usize; 2],
    pub expected_sign: i8,
    pub fidelity: f64,
    /// Phase of this row's overlap relative to row (0,0), after dividing
    /// out the analytic local detuning phases.
    pub relative_phase: f64,
    pub phase_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub rows: Vec<TruthTableRow>,
    pub local_phases_factored: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub engine: String,
    pub engine_version: String,
    pub command: String,
    pub config: RunConfig,
    pub schedule: Schedule,
    pub leakage_convention: String,
    pub points: Vec<PointResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_table: Option<TruthTable>,
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    fn new(command: &str, config: &RunConfig) -> Result<Self> {
        Ok(Self {
            engine: env!("CARGO_PKG_NAME").into(),
            engine_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            schedule: canonical_entangling_schedule(&config.model_params()?)?,
            leakage_convention: LEAKAGE_CONVENTION.into(),
            points: Vec::new(),
            truth_table: None,
            wall_clock_seconds: 0.0,
        })
    }

    pub fn failed(&self) -> bool {
        self.points.iter().any(|p| p.failed) || self.truth_table.as_ref().is_some_and(|t| !t.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json())
    }
}

/// Single protocol execution at the configured noise.
pub fn cmd_run(config: &RunConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let mut record = RunRecord::new("run", config)?;
    record.points.push(run_point(config, config.noise.kind, config.noise.gamma_over_g)?);
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI { PI } else { y }
}

/// Noiseless protocol on each computational input, compared against the
/// `(+, +, +, −)` phase pattern.
pub fn cmd_truth_table(config: &RunConfig) -> Result<RunRecord> {
    let start = Instant::now();
    if config.noise.kind != NoiseKind::None && config.noise.gamma_over_g != 0.0 {
        return Err(ExperimentError::config("noise", "the truth table requires a noiseless configuration"));
    }
    let params = config.model_params()?;
    let schedule = canonical_entangling_schedule(&params)?;
    let local = schedule.local_ground_phases(&params);
    let commensurate = local.iter().all(|p| (p - C64::new(1.0, 0.0)).norm() < 1e-9);
    let space = params.space();

    let mut overlaps = Vec::new();
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let input = basis_input(a, b, &space)?;
        let out = evolve_unitary(&input, &schedule, &params)?;
        let FinalState::Pure(psi) = out.final_state else { unreachable!("unitary path is pure") };
        let mut ov = input.inner(&psi);
        if a == 1 {
            ov /= local[0];
        }
        if b == 1 {
            ov /= local[1];
        }
        overlaps.push(((a, b), ov));
    }
    let reference = overlaps[0].1.arg();
    let rows: Vec<TruthTableRow> = overlaps
        .iter()
        .map(|&((a, b), ov)| {
            let expected_sign: i8 = if a == 1 && b == 1 { -1 } else { 1 };
            let expected_phase = if expected_sign < 0 { PI } else { 0.0 };
            let relative_phase = wrap_phase(ov.arg() - reference);
            let phase_error = wrap_phase(relative_phase - expected_phase).abs();
            let fidelity = ov.norm_sqr();
            let mut pass = fidelity >= TRUTH_TABLE_MIN_FIDELITY;
            if expected_sign < 0 {
                pass &= phase_error <= TRUTH_TABLE_PHASE_TOL;
            }
            TruthTableRow { input: [a, b], expected_sign, fidelity, relative_phase, phase_error, pass }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    let mut record = RunRecord::new("truth-table", config)?;
    record.truth_table = Some(TruthTable { rows, local_phases_factored: !commensurate, pass });
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Every (kind, Γ/g) pair of the sweep, kind-major with ascending Γ/g.
/// Points run in parallel on the current rayon pool; output order does
/// not depend on completion order.
pub fn cmd_sweep(config: &RunConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| ExperimentError::config("sweep", "a sweep section is required"))?;
    let grid = sweep.gamma_over_g.values();
    let tasks: Vec<(NoiseKind, f64)> =
        sweep.kinds.iter().flat_map(|&k| grid.iter().map(move |&x| (k, x))).collect();
    let points = tasks
        .par_iter()
        .map(|&(k, x)| run_point(config, k, x))
        .collect::<Result<Vec<_>>>()?;
    let mut record = RunRecord::new("sweep", config)?;
    record.points = points;
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

fn sci(x: f64) -> String {
    format!("{x:.10e}")
}

/// CSV body for a set of points with the fixed header.
pub fn points_csv(points: &[PointResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sci(p.gamma_over_g),
            p.noise_kind,
            sci(p.concurrence),
            sci(p.eof),
            sci(p.leakage),
            sci(p.max_trace_drift)
        );
    }
    out
}

/// Gnuplot script plotting EoF against Γ/g for each noise kind in `csv`.
pub fn gnuplot_script(csv: &Path, kinds: &[NoiseKind]) -> String {
    let name = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale x\nset xlabel 'Gamma / g'\nset ylabel 'entanglement of formation'\n");
    s.push_str("set yrange [0:1.05]\nset key bottom left\n");
    let styles = ["lt 1", "dt 2", "dt 3", "dt 4"];
    let plots: Vec<String> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            format!(
                "'{name}' using 1:(strcol(2) eq '{k}' ? $4 : NaN) with lines {} title '{k}'",
                styles[i % styles.len()]
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// `results/sweep.csv` → `results/sweep.record.json`
pub fn record_path_for(csv: &Path) -> PathBuf {
    csv.with_extension("record.json")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io { path: dir.to_owned(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| ExperimentError::Io { path: path.to_owned(), source })
}
