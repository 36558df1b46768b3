//! Config ingestion, subcommand dispatch, and deterministic CSV/JSON output.
//!
//! Configs are JSON documents; complex scalars are `[re, im]` pairs and all
//! energies/times are in hbar = 1 units. Output floats use the shortest
//! round-trip decimal form, so identical configs always produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    effective_time_series, kaon_transition_probability, time_grid, validate_kaon, KaonParams,
};
use crate::model::{
    full_hamiltonian, validate_model, DoubletSpec, InvarianceMode, LevelSpec, ModelSpec,
};
use crate::oracle::{compare_ww, ExactPropagator};
use crate::reduction::{decay_matrix, effective_generator, mass_matrix};
use crate::spectral::{oscillation_period, splitting, Mixing, SpectralResult};
use crate::{C64, DMat, DVec, Error, Mat2, DEFAULT_INVARIANCE_TOL};

/// Errors of the config/dispatch layer. Library errors pass through and
/// keep their own classification for exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: chiralosc <config.json>")]
    Usage,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("sweep path `{0}` does not address a numeric scalar")]
    BadSweepPath(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Exit code classes: 1 parse/schema/usage, 2 model validation,
    /// 3 invariance precondition, 4 degeneracy without broadening, 5 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage
            | CliError::Parse { .. }
            | CliError::Schema { .. }
            | CliError::BadSweepPath(_) => 1,
            CliError::Lib(err) => match err {
                Error::NonFinite(_)
                | Error::NonHermitianInput { .. }
                | Error::InvalidParameter(_)
                | Error::NonzeroDecay => 2,
                Error::NotCptSymmetric { .. }
                | Error::NotTSymmetric { .. }
                | Error::ZeroSplitting => 3,
                Error::DegenerateLevelWithoutBroadening { .. } => 4,
            },
            CliError::Io { .. } => 5,
        }
    }
}

/// Complex scalar in the document schema: exactly `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Pair(f64, f64);

impl<'de> Deserialize<'de> for Pair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parts = Vec::<f64>::deserialize(deserializer)?;
        if parts.len() != 2 {
            return Err(serde::de::Error::invalid_length(
                parts.len(),
                &"a complex number as a two-element [re, im] array",
            ));
        }
        Ok(Pair(parts[0], parts[1]))
    }
}

impl From<Pair> for C64 {
    fn from(p: Pair) -> C64 {
        C64::new(p.0, p.1)
    }
}

impl From<C64> for Pair {
    fn from(z: C64) -> Pair {
        Pair(z.re, z.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoubletDoc {
    m: f64,
    delta: f64,
    epsilon: f64,
    theta_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelDoc {
    energy: f64,
    #[serde(rename = "g_L")]
    g_l: Pair,
    #[serde(rename = "g_R")]
    g_r: Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeDoc {
    t_max: f64,
    steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Reduce,
    Spectrum,
    Evolve,
    Oracle,
    Compare,
    Kaon,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    path: String,
    values: Vec<f64>,
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    doublet: DoubletDoc,
    levels: Vec<LevelDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_override: Option<[[Pair; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_couplings: Option<Vec<Vec<Pair>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degeneracy_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    broadening: Option<f64>,
    invariance: InvarianceMode,
    command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    time: Option<TimeDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kaon: Option<KaonParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepDoc>,
    output: String,
}

/// Sweep request: rerun `command` once per value of the addressed parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub path: String,
    pub values: Vec<f64>,
    pub command: Command,
}

/// A fully validated run request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub command: Command,
    pub time: Option<(f64, usize)>,
    pub kaon: Option<KaonParams>,
    pub sweep: Option<SweepSpec>,
    pub output_path: PathBuf,
}

fn mat2_from_doc(doc: &[[Pair; 2]; 2]) -> Mat2 {
    Mat2::new(
        doc[0][0].into(),
        doc[0][1].into(),
        doc[1][0].into(),
        doc[1][1].into(),
    )
}

fn mat2_to_doc(m: &Mat2) -> [[Pair; 2]; 2] {
    [
        [m[(0, 0)].into(), m[(0, 1)].into()],
        [m[(1, 0)].into(), m[(1, 1)].into()],
    ]
}

fn cross_from_doc(doc: &[Vec<Pair>]) -> DMat {
    let n = doc.len();
    DMat::from_fn(n, doc.first().map_or(0, Vec::len), |r, c| {
        doc[r][c].into()
    })
}

impl RunConfig {
    fn from_doc(doc: ConfigDoc) -> Result<RunConfig, CliError> {
        let model = ModelSpec {
            doublet: DoubletSpec {
                m: doc.doublet.m,
                delta: doc.doublet.delta,
                epsilon: doc.doublet.epsilon,
                theta_max: doc.doublet.theta_max,
            },
            levels: doc
                .levels
                .iter()
                .map(|l| LevelSpec {
                    energy: l.energy,
                    g_l: l.g_l.into(),
                    g_r: l.g_r.into(),
                })
                .collect(),
            h_override: doc.h_override.as_ref().map(mat2_from_doc),
            cross_couplings: doc.cross_couplings.as_ref().map(|c| cross_from_doc(c)),
            degeneracy_tolerance: doc
                .degeneracy_tolerance
                .unwrap_or(crate::DEFAULT_DEGENERACY_TOL),
            broadening: doc.broadening,
            invariance_mode: doc.invariance,
        };
        if let Some(cross) = &doc.cross_couplings {
            if cross.len() != doc.levels.len() || cross.iter().any(|row| row.len() != cross.len())
            {
                return Err(CliError::Schema {
                    path: "cross_couplings".to_string(),
                    message: format!(
                        "must be a {n}x{n} matrix matching the level count",
                        n = doc.levels.len()
                    ),
                });
            }
        }

        let config = RunConfig {
            model,
            command: doc.command,
            time: doc.time.map(|t| (t.t_max, t.steps)),
            kaon: doc.kaon,
            sweep: doc.sweep.map(|s| SweepSpec {
                path: s.path,
                values: s.values,
                command: s.command,
            }),
            output_path: PathBuf::from(doc.output),
        };
        config.check_shape()?;
        Ok(config)
    }

    /// Structural invariants that don't touch numerics: sweep presence,
    /// grid sanity, required sections per command.
    fn check_shape(&self) -> Result<(), CliError> {
        let schema = |path: &str, message: &str| {
            Err(CliError::Schema {
                path: path.to_string(),
                message: message.to_string(),
            })
        };
        match (&self.command, &self.sweep) {
            (Command::Sweep, None) => return schema("sweep", "required when command is \"sweep\""),
            (Command::Sweep, Some(sweep)) => {
                if sweep.command == Command::Sweep {
                    return schema("sweep.command", "nested sweeps are not supported");
                }
                sweep_target(&sweep.path)
                    .ok_or_else(|| CliError::BadSweepPath(sweep.path.clone()))?;
            }
            (_, Some(_)) => {
                return schema("sweep", "only allowed when command is \"sweep\"")
            }
            (_, None) => {}
        }

        let effective = self.effective_command();
        if matches!(
            effective,
            Command::Evolve | Command::Oracle | Command::Compare | Command::Kaon
        ) {
            match self.time {
                None => return schema("time", "required for time-based commands"),
                Some((t_max, steps)) => {
                    if !(t_max.is_finite() && t_max > 0.0) {
                        return schema("time.t_max", "must be finite and > 0");
                    }
                    if steps < 2 {
                        return schema("time.steps", "must be at least 2");
                    }
                }
            }
        }
        if effective == Command::Kaon && self.kaon.is_none() {
            return schema("kaon", "required when the kaon command runs");
        }
        Ok(())
    }

    /// The command that actually produces output (the sweep's inner command
    /// when sweeping).
    pub fn effective_command(&self) -> Command {
        match (&self.command, &self.sweep) {
            (Command::Sweep, Some(sweep)) => sweep.command,
            _ => self.command,
        }
    }

    fn to_doc(&self) -> ConfigDoc {
        ConfigDoc {
            doublet: DoubletDoc {
                m: self.model.doublet.m,
                delta: self.model.doublet.delta,
                epsilon: self.model.doublet.epsilon,
                theta_max: self.model.doublet.theta_max,
            },
            levels: self
                .model
                .levels
                .iter()
                .map(|l| LevelDoc {
                    energy: l.energy,
                    g_l: l.g_l.into(),
                    g_r: l.g_r.into(),
                })
                .collect(),
            h_override: self.model.h_override.as_ref().map(mat2_to_doc),
            cross_couplings: self.model.cross_couplings.as_ref().map(|m| {
                (0..m.nrows())
                    .map(|r| (0..m.ncols()).map(|c| m[(r, c)].into()).collect())
                    .collect()
            }),
            degeneracy_tolerance: Some(self.model.degeneracy_tolerance),
            broadening: self.model.broadening,
            invariance: self.model.invariance_mode,
            command: self.command,
            time: self.time.map(|(t_max, steps)| TimeDoc { t_max, steps }),
            kaon: self.kaon,
            sweep: self.sweep.as_ref().map(|s| SweepDoc {
                path: s.path.clone(),
                values: s.values.clone(),
                command: s.command,
            }),
            output: self.output_path.to_string_lossy().into_owned(),
        }
    }

    /// Serializes back to the document schema (the inverse of parsing).
    pub fn to_document(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_doc()).expect("schema types");
        text.push('\n');
        text
    }
}

/// Parses and validates a JSON config document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    let doc: ConfigDoc = serde_path_to_error::deserialize(deserializer).map_err(|err| {
        let inner = err.inner();
        if inner.is_syntax() || inner.is_eof() {
            CliError::Parse {
                line: inner.line(),
                column: inner.column(),
                message: trim_position(&inner.to_string()),
            }
        } else {
            CliError::Schema {
                path: err.path().to_string(),
                message: trim_position(&inner.to_string()),
            }
        }
    })?;
    RunConfig::from_doc(doc)
}

/// serde_json appends " at line L column C" to every message; the position
/// is reported separately, so strip it here.
fn trim_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(pos) => message[..pos].to_string(),
        None => message.to_string(),
    }
}

// Sweep targets: which scalar a sweep path addresses.
enum SweepTarget {
    DoubletM,
    DoubletDelta,
    DoubletEpsilon,
    DoubletThetaMax,
    DegeneracyTolerance,
    Broadening,
    LevelEnergy(usize),
    KaonM1,
    KaonM2,
    KaonGamma1,
    KaonGamma2,
    CouplingScale,
}

fn sweep_target(path: &str) -> Option<SweepTarget> {
    use SweepTarget::*;
    Some(match path {
        "doublet.m" => DoubletM,
        "doublet.delta" => DoubletDelta,
        "doublet.epsilon" => DoubletEpsilon,
        "doublet.theta_max" => DoubletThetaMax,
        "degeneracy_tolerance" => DegeneracyTolerance,
        "broadening" => Broadening,
        "kaon.m1" => KaonM1,
        "kaon.m2" => KaonM2,
        "kaon.gamma1" => KaonGamma1,
        "kaon.gamma2" => KaonGamma2,
        "coupling_scale" => CouplingScale,
        _ => {
            let index = path
                .strip_prefix("levels.")?
                .strip_suffix(".energy")?
                .parse()
                .ok()?;
            LevelEnergy(index)
        }
    })
}

fn apply_sweep_value(config: &RunConfig, path: &str, value: f64) -> Result<RunConfig, CliError> {
    let target = sweep_target(path).ok_or_else(|| CliError::BadSweepPath(path.to_string()))?;
    let mut out = RunConfig {
        sweep: None,
        command: config.effective_command(),
        ..config.clone()
    };
    use SweepTarget::*;
    match target {
        DoubletM => out.model.doublet.m = value,
        DoubletDelta => out.model.doublet.delta = value,
        DoubletEpsilon => out.model.doublet.epsilon = value,
        DoubletThetaMax => out.model.doublet.theta_max = value,
        DegeneracyTolerance => out.model.degeneracy_tolerance = value,
        Broadening => out.model.broadening = Some(value),
        LevelEnergy(index) => {
            if index >= out.model.levels.len() {
                return Err(CliError::BadSweepPath(path.to_string()));
            }
            out.model.levels[index].energy = value;
        }
        KaonM1 | KaonM2 | KaonGamma1 | KaonGamma2 => {
            let kaon = out.kaon.as_mut().ok_or_else(|| {
                CliError::Schema {
                    path: "kaon".to_string(),
                    message: "required to sweep a kaon parameter".to_string(),
                }
            })?;
            match target {
                KaonM1 => kaon.m1 = value,
                KaonM2 => kaon.m2 = value,
                KaonGamma1 => kaon.gamma1 = value,
                KaonGamma2 => kaon.gamma2 = value,
                _ => unreachable!(),
            }
        }
        CouplingScale => {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "coupling scale must be finite and nonnegative, got {value}"
                ))
                .into());
            }
            out.model = out.model.with_scaled_couplings(value);
        }
    }
    Ok(out)
}

// Shortest round-trip decimal for CSV cells.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn time_series_csv(rows: &[(f64, f64, f64, f64)]) -> Vec<u8> {
    let mut out = String::from("t,p_l,p_r,theta_ratio\n");
    for &(t, p_l, p_r, theta) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(t),
            fmt_f64(p_l),
            fmt_f64(p_r),
            fmt_f64(theta)
        );
    }
    out.into_bytes()
}

fn json_bytes(value: serde_json::Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(&value).expect("finite values");
    text.push('\n');
    text.into_bytes()
}

fn pair_json(z: C64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}

fn mat2_json(m: &Mat2) -> serde_json::Value {
    serde_json::json!([
        [pair_json(m[(0, 0)]), pair_json(m[(0, 1)])],
        [pair_json(m[(1, 0)]), pair_json(m[(1, 1)])],
    ])
}

fn vec2_json(v: &crate::Vec2) -> serde_json::Value {
    serde_json::json!([pair_json(v[0]), pair_json(v[1])])
}

fn mixing_json(mixing: &Mixing) -> serde_json::Value {
    match mixing {
        Mixing::Cpt { p, alpha, degenerate } => serde_json::json!({
            "mode": "CPT",
            "p": pair_json(*p),
            "alpha": alpha,
            "degenerate": degenerate,
        }),
        Mixing::T { phi } => serde_json::json!({ "mode": "T", "phi": phi }),
        Mixing::General => serde_json::json!({ "mode": "General" }),
    }
}

fn spectrum_json(result: &SpectralResult, delta_split: f64, tau: Option<f64>) -> Vec<u8> {
    json_bytes(serde_json::json!({
        "lambda_plus": result.lambda_plus,
        "lambda_minus": result.lambda_minus,
        "psi_plus": vec2_json(&result.psi_plus),
        "psi_minus": vec2_json(&result.psi_minus),
        "mixing": mixing_json(&result.mixing),
        "delta_split": delta_split,
        "tau": tau,
    }))
}

/// Runs one non-sweep command and renders its output bytes.
fn run_to_bytes(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let mode = config.model.invariance_mode;
    let model = validate_model(config.model.clone())?;
    match config.command {
        Command::Reduce => {
            let m = mass_matrix(&model);
            let gamma = decay_matrix(&model)?;
            let w = effective_generator(&m, &gamma);
            Ok(json_bytes(serde_json::json!({
                "M": mat2_json(&m.matrix),
                "Gamma": mat2_json(&gamma.matrix),
                "W": mat2_json(&w.matrix),
            })))
        }
        Command::Spectrum => {
            let m = mass_matrix(&model);
            // a degenerate level without broadening is rejected uniformly,
            // whether or not the command consumes the decay matrix
            decay_matrix(&model)?;
            let result = match mode {
                InvarianceMode::Cpt => crate::spectral::eigen_cpt(&m, DEFAULT_INVARIANCE_TOL)?,
                InvarianceMode::T => crate::spectral::eigen_t(&m, DEFAULT_INVARIANCE_TOL)?,
                InvarianceMode::General => crate::spectral::eigen_general(&m),
            };
            let delta_split = splitting(&m, mode);
            let tau = match oscillation_period(&m, mode) {
                Ok(period) => Some(period.tau),
                Err(Error::ZeroSplitting) => None,
                Err(other) => return Err(other.into()),
            };
            Ok(spectrum_json(&result, delta_split, tau))
        }
        Command::Evolve => {
            let (t_max, steps) = config.time.expect("checked in parse");
            let m = mass_matrix(&model);
            let gamma = decay_matrix(&model)?;
            let series = effective_time_series(&m, &gamma, mode, &time_grid(t_max, steps))?;
            let rows: Vec<_> = series
                .samples
                .iter()
                .map(|s| (s.t, s.p_l, s.p_r, s.theta_ratio))
                .collect();
            Ok(time_series_csv(&rows))
        }
        Command::Oracle => {
            let (t_max, steps) = config.time.expect("checked in parse");
            let h = full_hamiltonian(&model);
            let propagator = ExactPropagator::new(&h);
            let mut psi0 = DVec::zeros(h.matrix.nrows());
            psi0[0] = C64::new(1.0, 0.0);
            let rows: Vec<_> = time_grid(t_max, steps)
                .iter()
                .map(|&t| {
                    let psi = propagator.evolve(&psi0, t);
                    let (p_l, p_r) = (psi[0].norm_sqr(), psi[1].norm_sqr());
                    (t, p_l, p_r, p_l - p_r)
                })
                .collect();
            Ok(time_series_csv(&rows))
        }
        Command::Compare => {
            let (t_max, steps) = config.time.expect("checked in parse");
            let report = compare_ww(&model, &time_grid(t_max, steps))?;
            Ok(json_bytes(serde_json::json!({
                "lambda": report.coupling_scale,
                "max_abs_error_pl": report.max_abs_error_pl,
                "max_abs_error_pr": report.max_abs_error_pr,
            })))
        }
        Command::Kaon => {
            let (t_max, steps) = config.time.expect("checked in parse");
            let params = config.kaon.expect("checked in parse");
            validate_kaon(&params)?;
            let mut out = String::from("t,p_kbar\n");
            for t in time_grid(t_max, steps) {
                let _ = writeln!(
                    out,
                    "{},{}",
                    fmt_f64(t),
                    fmt_f64(kaon_transition_probability(&params, t))
                );
            }
            Ok(out.into_bytes())
        }
        Command::Sweep => unreachable!("sweep is dispatched by run()"),
    }
}

/// Runs a sweep: one output block per value, each byte-identical to the
/// standalone run with that value substituted, concatenated in input order.
fn run_sweep_to_bytes(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let sweep = config.sweep.as_ref().expect("checked in parse");
    let mut out = Vec::new();
    for &value in &sweep.values {
        let point = apply_sweep_value(config, &sweep.path, value)?;
        out.extend_from_slice(&run_to_bytes(&point)?);
    }
    Ok(out)
}

/// Executes the config and writes its output file.
pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let bytes = match config.command {
        Command::Sweep => run_sweep_to_bytes(config)?,
        _ => run_to_bytes(config)?,
    };
    std::fs::write(&config.output_path, bytes).map_err(|source| CliError::Io {
        path: config.output_path.clone(),
        source,
    })
}

/// Full entry point: read the config file, parse, run. Returns the process
/// exit code instead of exiting, so tests can drive it directly.
pub fn main_entry(args: &[String]) -> i32 {
    let config_path = match args {
        [path] => Path::new(path),
        _ => {
            eprintln!("{}", CliError::Usage);
            return CliError::Usage.exit_code();
        }
    };
    let text = match std::fs::read_to_string(config_path) {
        Ok(text) => text,
        Err(source) => {
            let err = CliError::Io {
                path: config_path.to_path_buf(),
                source,
            };
            eprintln!("{err}");
            return err.exit_code();
        }
    };
    let result = parse_config(&text).and_then(|config| run(&config));
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}
