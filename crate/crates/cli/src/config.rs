//! Run configuration files.
//!
//! A run is described by one TOML file. Every field has a default, so an
//! empty file reproduces the reference scenario (β = 1, η = 0.1, ω_c = 50,
//! t_f = 6π, symmetric drive). The fully resolved configuration is written
//! next to every run's outputs as `effective_config.toml`.

use std::path::{Path, PathBuf};

use entangle_core::bath::{BathSpec, GridKind};
use entangle_core::control::OptimizerSettings;
use entangle_core::pulse::DriveMode;
use entangle_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    /// Single source of randomness for the run.
    pub seed: u64,
    /// Relative paths are resolved against the config file; `--out` replaces it.
    pub output_dir: PathBuf,
    pub bath: BathConfig,
    pub pulse: PulseConfig,
    pub integration: IntegrationConfig,
    pub optimizer: OptimizerConfig,
    pub wigner: WignerConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "default".into(),
            seed: 0,
            output_dir: PathBuf::from("out"),
            bath: BathConfig::default(),
            pulse: PulseConfig::default(),
            integration: IntegrationConfig::default(),
            optimizer: OptimizerConfig::default(),
            wigner: WignerConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    pub eta: f64,
    pub omega_c: f64,
    pub beta: f64,
    pub n_modes: usize,
    pub omega_max: f64,
    pub grid: GridKind,
    pub linear_cutoff: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        let s = BathSpec::default();
        Self {
            eta: s.eta,
            omega_c: s.omega_c,
            beta: s.beta,
            n_modes: s.n_modes,
            omega_max: s.omega_max,
            grid: s.grid_kind,
            linear_cutoff: s.linear_cutoff,
        }
    }
}

impl BathConfig {
    pub fn spec(&self) -> BathSpec {
        BathSpec {
            eta: self.eta,
            omega_c: self.omega_c,
            beta: self.beta,
            n_modes: self.n_modes,
            omega_max: self.omega_max,
            grid_kind: self.grid,
            linear_cutoff: self.linear_cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Zero,
    /// Square wave ±amplitude with period π.
    Resonance,
    /// Segments read from `pulse.file`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub mode: DriveMode,
    pub t_f: f64,
    pub n_segments: usize,
    pub bound: f64,
    pub kind: PulseKind,
    pub amplitude: f64,
    /// Pulse CSV; relative paths are resolved against the config file.
    pub file: Option<PathBuf>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            mode: DriveMode::Symmetric,
            t_f: 6.0 * std::f64::consts::PI,
            n_segments: 48,
            bound: 4.0,
            kind: PulseKind::Zero,
            amplitude: 0.5,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    /// Step size; absent picks min(0.25/omega_max, shortest segment/8).
    pub dt: Option<f64>,
    pub samples: usize,
    /// Free evolution after switch-off, appended to the time series.
    pub continuation: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: None,
            samples: 200,
            continuation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub budget: usize,
    pub multi_start: usize,
    /// Roughness weight λ.
    pub lambda: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub seed_amplitude: f64,
    /// Modes of the coarse inner-loop bath; 0 optimizes on the full bath.
    pub inner_modes: usize,
    pub inner_omega_max: f64,
    pub polish_budget: usize,
    pub gradient_check: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let s = OptimizerSettings::default();
        let (inner_modes, inner_omega_max) = s.fast_inner.unwrap_or((0, 20.0));
        Self {
            budget: s.budget,
            multi_start: s.multi_start,
            lambda: 1e-3,
            initial_step: s.initial_step,
            min_step: s.min_step,
            seed_amplitude: s.seed_amplitude,
            inner_modes,
            inner_omega_max,
            polish_budget: s.polish_budget,
            gradient_check: s.gradient_check,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    pub half_width: f64,
    pub points: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            points: 81,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Beta,
    Eta,
    #[serde(rename = "t_f")]
    TF,
    NSegments,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(SweepAxis::Beta),
            "eta" => Ok(SweepAxis::Eta),
            "t_f" => Ok(SweepAxis::TF),
            "n_segments" => Ok(SweepAxis::NSegments),
            other => Err(Error::Usage(format!(
                "unknown sweep axis {other:?} (expected beta, eta, t_f or n_segments)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Eta => "eta",
            SweepAxis::TF => "t_f",
            SweepAxis::NSegments => "n_segments",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Beta,
            values: vec![1.0, 0.5, 0.1],
        }
    }
}

/// A configuration together with the text and path it was read from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: Option<(PathBuf, String)>,
}

impl LoadedConfig {
    pub fn defaults() -> Self {
        Self {
            config: RunConfig::default(),
            source: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let config = parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        Ok(Self {
            config,
            source: Some((path.to_path_buf(), text)),
        })
    }

    /// Validates every field, naming the line of the offending key.
    pub fn validate(&self) -> Result<()> {
        let problems = self.config.problems();
        if problems.is_empty() {
            return Ok(());
        }
        let lines: Vec<String> = problems
            .iter()
            .map(|(table, key, msg)| {
                let at = match &self.source {
                    Some((path, text)) => match locate(text, table, key) {
                        Some(line) => format!("{}:{line}: ", path.display()),
                        None => format!("{} (default value): ", path.display()),
                    },
                    None => "(default value): ".into(),
                };
                let name = if table.is_empty() { key.to_string() } else { format!("{table}.{key}") };
                format!("{at}{name}: {msg}")
            })
            .collect();
        Err(Error::Config(lines.join("\n")))
    }

    fn resolve(&self, file: &Path) -> PathBuf {
        match &self.source {
            Some((path, _)) if file.is_relative() => path.parent().unwrap_or(Path::new(".")).join(file),
            _ => file.to_path_buf(),
        }
    }

    /// `pulse.file`, relative to the config file's directory.
    pub fn pulse_file(&self) -> Option<PathBuf> {
        Some(self.resolve(self.config.pulse.file.as_ref()?))
    }

    /// `output_dir`, relative to the config file's directory.
    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }
}

/// Parses TOML text; syntax and type errors carry line and column.
pub fn parse(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().trim_end().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                Error::Config(format!("line {line}, column {col}: {msg}"))
            }
            None => Error::Config(msg),
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// 1-based line of `key` inside `[table]` (top level for an empty table).
pub fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim().trim_matches('"');
        let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
        let wanted = if table.is_empty() { key.to_string() } else { format!("{table}.{key}") };
        if full == wanted {
            return Some(i + 1);
        }
    }
    None
}

type Problem = (&'static str, &'static str, String);

impl RunConfig {
    /// Every invalid field as (table, key, message).
    pub fn problems(&self) -> Vec<Problem> {
        let mut out: Vec<Problem> = Vec::new();
        let mut need = |ok: bool, table: &'static str, key: &'static str, msg: String| {
            if !ok {
                out.push((table, key, msg));
            }
        };
        let b = &self.bath;
        need(b.eta >= 0.0, "bath", "eta", format!("must be >= 0, got {}", b.eta));
        need(b.omega_c > 0.0, "bath", "omega_c", format!("must be > 0, got {}", b.omega_c));
        need(b.beta > 0.0, "bath", "beta", format!("must be > 0, got {}", b.beta));
        need(b.n_modes >= 1, "bath", "n_modes", "must be >= 1".into());
        need(b.omega_max > 0.0, "bath", "omega_max", format!("must be > 0, got {}", b.omega_max));
        need(
            b.grid != GridKind::Composite || b.linear_cutoff > 0.0,
            "bath",
            "linear_cutoff",
            format!("must be > 0, got {}", b.linear_cutoff),
        );
        let p = &self.pulse;
        need(p.t_f > 0.0 && p.t_f.is_finite(), "pulse", "t_f", format!("must be > 0, got {}", p.t_f));
        need(p.n_segments >= 1, "pulse", "n_segments", "must be >= 1".into());
        need(p.bound > 0.0 && p.bound.is_finite(), "pulse", "bound", format!("must be > 0, got {}", p.bound));
        need(
            p.amplitude.abs() <= p.bound,
            "pulse",
            "amplitude",
            format!("|{}| exceeds the bound {}", p.amplitude, p.bound),
        );
        need(
            p.kind != PulseKind::File || p.file.is_some(),
            "pulse",
            "file",
            "is required when kind = \"file\"".into(),
        );
        let i = &self.integration;
        need(
            i.dt.is_none_or(|dt| dt > 0.0 && dt.is_finite()),
            "integration",
            "dt",
            format!("must be > 0, got {:?}", i.dt),
        );
        need(i.samples >= 1, "integration", "samples", "must be >= 1".into());
        need(
            i.continuation >= 0.0 && i.continuation.is_finite(),
            "integration",
            "continuation",
            format!("must be >= 0, got {}", i.continuation),
        );
        let o = &self.optimizer;
        need(o.budget >= 1, "optimizer", "budget", "must be >= 1".into());
        need(o.multi_start >= 1, "optimizer", "multi_start", "must be >= 1".into());
        need(o.lambda >= 0.0, "optimizer", "lambda", format!("must be >= 0, got {}", o.lambda));
        need(o.initial_step > 0.0, "optimizer", "initial_step", format!("must be > 0, got {}", o.initial_step));
        need(o.min_step > 0.0, "optimizer", "min_step", format!("must be > 0, got {}", o.min_step));
        need(
            o.seed_amplitude.abs() <= p.bound,
            "optimizer",
            "seed_amplitude",
            format!("|{}| exceeds the pulse bound {}", o.seed_amplitude, p.bound),
        );
        need(
            o.inner_modes == 0 || o.inner_omega_max > 0.0,
            "optimizer",
            "inner_omega_max",
            format!("must be > 0, got {}", o.inner_omega_max),
        );
        let w = &self.wigner;
        need(w.half_width > 0.0, "wigner", "half_width", format!("must be > 0, got {}", w.half_width));
        need(w.points >= 2, "wigner", "points", "must be >= 2".into());
        let s = &self.sweep;
        need(!s.values.is_empty(), "sweep", "values", "must not be empty".into());
        need(
            s.values.iter().all(|v| v.is_finite()),
            "sweep",
            "values",
            "must be finite numbers".into(),
        );
        out
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        let o = &self.optimizer;
        OptimizerSettings {
            seed: self.seed,
            budget: o.budget,
            multi_start: o.multi_start,
            initial_step: o.initial_step,
            min_step: o.min_step,
            seed_amplitude: o.seed_amplitude,
            fast_inner: (o.inner_modes > 0).then_some((o.inner_modes, o.inner_omega_max)),
            polish_budget: o.polish_budget,
            gradient_check: o.gradient_check,
            samples: self.integration.samples,
        }
    }

    /// The configuration with one sweep coordinate applied.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Beta => c.bath.beta = value,
            SweepAxis::Eta => c.bath.eta = value,
            SweepAxis::TF => c.pulse.t_f = value,
            SweepAxis::NSegments => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("n_segments sweep value {value} is not a positive integer")));
                }
                c.pulse.n_segments = value as usize;
            }
        }
        if let Some((table, key, msg)) = c.problems().into_iter().next() {
            return Err(Error::Config(format!("sweep value {value} for {}: {table}.{key} {msg}", axis.name())));
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_scenario() {
        let c = parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.bath.beta, 1.0);
        assert_eq!(c.bath.eta, 0.1);
        assert_eq!(c.bath.omega_c, 50.0);
        assert!((c.pulse.t_f - 6.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!(c.problems().is_empty());
    }

    #[test]
    fn effective_config_round_trips() {
        let mut c = RunConfig::default();
        c.integration.dt = Some(0.01);
        c.pulse.file = Some("p.csv".into());
        let text = c.to_toml().unwrap();
        assert_eq!(parse(&text).unwrap(), c);
        assert_eq!(parse(&text).unwrap().to_toml().unwrap(), text);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse("seed = 1\n[bath]\nbeta = \"hot\"\n").unwrap_err().to_string();
        assert!(err.contains("line 3, column 8"), "{err}");
        let err = parse("[bath]\nbetta = 1\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_key_line() {
        let text = "scenario = \"x\"\n\n[bath]\n# colder\nbeta = -1\n[pulse]\nn_segments = 0\n";
        let loaded = LoadedConfig {
            config: parse(text).unwrap(),
            source: Some(("run.toml".into(), text.into())),
        };
        let err = loaded.validate().unwrap_err().to_string();
        assert!(err.contains("run.toml:5: bath.beta: must be > 0"), "{err}");
        assert!(err.contains("run.toml:7: pulse.n_segments"), "{err}");
    }

    #[test]
    fn locate_ignores_other_tables() {
        let text = "beta = 3\n[optimizer]\nbudget = 4\n[bath]\nbeta = 2 # hot\n";
        assert_eq!(locate(text, "bath", "beta"), Some(5));
        assert_eq!(locate(text, "", "beta"), Some(1));
        assert_eq!(locate(text, "bath", "eta"), None);
    }

    #[test]
    fn sweep_axis_applies_and_validates() {
        let c = RunConfig::default();
        assert_eq!(c.with_axis(SweepAxis::Beta, 0.5).unwrap().bath.beta, 0.5);
        assert_eq!(c.with_axis(SweepAxis::NSegments, 24.0).unwrap().pulse.n_segments, 24);
        assert!(c.with_axis(SweepAxis::NSegments, 2.5).is_err());
        assert!(c.with_axis(SweepAxis::Eta, -0.1).is_err());
    }
}
