use std::fs::File;
use std::path::{Path, PathBuf};

use entangle_core::analysis::{analyze_state, to_normal_modes, LabelThresholds, StateReport};
use entangle_core::bath::{discretize, thermal_initial_covariance, DiscretizedBath};
use entangle_core::control::{self, Objective, OptimizationReport};
use entangle_core::gaussian::{wigner_grid, CovarianceMatrix, PhaseGrid, WignerGrid};
use entangle_core::io::{self, from_json, to_json};
use entangle_core::propagation::{self, continue_free, Diagnostics, PropagateOptions, SampleSchedule};
use entangle_core::pulse::ControlPulse;
use entangle_core::{Error, Result};
use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{to_bytes, Artifacts};
use crate::config::{parse, LoadedConfig, PulseKind, RunConfig, SweepAxis};

/// Reduced covariance at one instant, the input of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// Bath inverse temperature; `analyze` falls back to the config when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub sigma: CovarianceMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub snapshot: String,
    pub t: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub report: StateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    pub best_e_n: f64,
    pub neg_log_nu: f64,
    pub wall_time_s: f64,
}

/// What a command did, for the one-line report on stdout.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    fn from(artifacts: Artifacts, summary: String) -> Self {
        Self {
            dir: artifacts.dir().to_path_buf(),
            files: artifacts.written,
            summary,
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn build_pulse(loaded: &LoadedConfig) -> Result<ControlPulse> {
    let p = &loaded.config.pulse;
    match p.kind {
        PulseKind::Zero => ControlPulse::zero(p.mode, p.t_f, p.n_segments, p.bound),
        PulseKind::Resonance => ControlPulse::parametric_resonance(p.mode, p.t_f, p.n_segments, p.bound, p.amplitude),
        PulseKind::File => {
            let path = loaded
                .pulse_file()
                .ok_or_else(|| Error::Config("pulse.file is required when kind = \"file\"".into()))?;
            io::read_pulse_csv(open(&path)?, p.mode, p.bound).map_err(|e| in_file(&path, e))
        }
    }
}

fn write_config(a: &mut Artifacts, config: &RunConfig) -> Result<()> {
    let text = config.to_toml()?;
    a.write("effective_config.toml", text.as_bytes(), |back| {
        let s = std::str::from_utf8(back).map_err(|e| Error::Parse(e.to_string()))?;
        if parse(s)? != *config || parse(s)?.to_toml()? != text {
            return Err(Error::Parse("effective config does not reproduce the run configuration".into()));
        }
        Ok(())
    })?;
    Ok(())
}

fn write_json<T: Serialize + serde::de::DeserializeOwned>(a: &mut Artifacts, name: &str, value: &T) -> Result<()> {
    a.write_round_trip(name, value, |v| Ok(to_json(v)?.into_bytes()), |b| {
        from_json(std::str::from_utf8(b).map_err(|e| Error::Parse(e.to_string()))?)
    })?;
    Ok(())
}

fn write_pulse(a: &mut Artifacts, pulse: &ControlPulse) -> Result<()> {
    let (mode, bound) = (pulse.mode, pulse.bound);
    a.write_round_trip(
        "pulse.csv",
        pulse,
        |p| to_bytes(|b| io::write_pulse_csv(p, b)),
        |b| io::read_pulse_csv(b, mode, bound),
    )?;
    Ok(())
}

fn write_time_series(a: &mut Artifacts, name: &str, result: &propagation::PropagationResult) -> Result<()> {
    let samples = io::time_series(result)?;
    a.write_round_trip(
        name,
        &samples,
        |s| to_bytes(|b| io::write_time_series_csv(s, b)),
        |b| io::read_time_series_csv(b),
    )?;
    Ok(())
}

fn write_wigner(a: &mut Artifacts, name: &str, grid: &WignerGrid) -> Result<()> {
    let bytes = to_bytes(|b| io::write_wigner_csv(grid, b))?;
    a.write(name, &bytes, |back| {
        let rows = io::read_wigner_csv(back)?;
        let (qs, ps) = (grid.grid.q_points(), grid.grid.p_points());
        let expected = qs.iter().enumerate().flat_map(|(i, &q)| ps.iter().enumerate().map(move |(j, &p)| (i, j, q, p)));
        if rows.len() != qs.len() * ps.len() {
            return Err(Error::Parse(format!("{} rows, expected {}", rows.len(), qs.len() * ps.len())));
        }
        for (row, (i, j, q, p)) in rows.iter().zip(expected) {
            if *row != [q, p, grid.values[(i, j)]] {
                return Err(Error::Parse(format!("row ({q}, {p}) does not match the grid")));
            }
        }
        Ok(())
    })?;
    Ok(())
}

fn write_bath(a: &mut Artifacts, bath: &DiscretizedBath) -> Result<()> {
    let bytes = to_bytes(|b| io::write_bath_csv(bath, b))?;
    a.write("bath.csv", &bytes, |back| {
        let rows = io::read_bath_csv(back)?;
        let same = rows.len() == bath.n_modes()
            && rows.iter().zip(bath.omegas.iter().zip(&bath.couplings)).all(|(r, (w, c))| r.0 == *w && r.1 == *c);
        if !same {
            return Err(Error::Parse("bath table does not match the discretized bath".into()));
        }
        Ok(())
    })?;
    Ok(())
}

/// Wigner functions of the (Q_+, P_+) and (Q_-, P_-) marginals.
fn write_normal_mode_wigner(a: &mut Artifacts, config: &RunConfig, sigma: &CovarianceMatrix) -> Result<()> {
    let nm = to_normal_modes(sigma)?;
    let grid = PhaseGrid::square(config.wigner.half_width, config.wigner.points);
    for (name, block) in [("wigner_plus.csv", nm.plus()), ("wigner_minus.csv", nm.minus())] {
        let w = wigner_grid(&CovarianceMatrix::from_matrix2(&block)?, Vector2::zeros(), grid.clone())?;
        write_wigner(a, name, &w)?;
    }
    Ok(())
}

pub fn simulate(loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let c = &loaded.config;
    let pulse = build_pulse(loaded)?;
    let t_f = pulse.t_f();
    let cont = c.integration.continuation;
    let spec = c.bath.spec();
    let bath = discretize(&spec, Some(t_f + cont))?;
    let initial = thermal_initial_covariance(&bath, spec.beta);
    let opts = PropagateOptions {
        dt: c.integration.dt,
        samples: SampleSchedule::Uniform(c.integration.samples),
        retain_full: cont > 0.0,
        ..PropagateOptions::default()
    };
    let run = propagation::propagate(&initial, &pulse, &bath, &opts)?;
    let at_tf = run.final_reduced().clone();
    let run = if cont > 0.0 { continue_free(&run, &bath, cont, &opts)? } else { run };

    let mut a = Artifacts::new(out)?;
    write_config(&mut a, c)?;
    write_pulse(&mut a, &pulse)?;
    write_bath(&mut a, &bath)?;
    write_time_series(&mut a, "time_series.csv", &run)?;
    let snapshot = Snapshot {
        t: t_f,
        beta: Some(spec.beta),
        sigma: at_tf.clone(),
    };
    write_json(&mut a, "covariance.json", &snapshot)?;
    a.write_round_trip(
        "covariance_bars.csv",
        &at_tf,
        |s| to_bytes(|b| io::write_bars_csv(s, b)),
        |b| io::read_bars_csv(b),
    )?;
    write_normal_mode_wigner(&mut a, c, &at_tf)?;
    write_json::<Diagnostics>(&mut a, "propagation.json", &run.diagnostics)?;

    let e_tf = entangle_core::gaussian::log_negativity(&at_tf)?;
    let mut summary = format!("E_N(t_f = {t_f:.4}) = {e_tf:.6}");
    if cont > 0.0 {
        let e_end = entangle_core::gaussian::log_negativity(run.final_reduced())?;
        summary.push_str(&format!(", E_N({:.4}) = {e_end:.6} after switch-off", run.final_time()));
    }
    Ok(Outcome::from(a, summary))
}

pub fn run_optimizer(config: &RunConfig) -> Result<OptimizationReport> {
    let p = &config.pulse;
    let spec = config.bath.spec();
    let template = control::template(p.mode, p.t_f, p.n_segments, p.bound)?;
    let mut objective = Objective::thermal(template, &spec, spec.beta, config.optimizer.lambda)?;
    objective.dt = config.integration.dt;
    control::optimize(&objective, &config.optimizer_settings())
}

fn write_optimization(a: &mut Artifacts, config: &RunConfig, report: &OptimizationReport) -> Result<()> {
    write_config(a, config)?;
    write_json(a, "report.json", report)?;
    write_pulse(a, &report.best_pulse)?;
    write_time_series(a, "trajectory.csv", &report.final_result)?;
    let snapshot = Snapshot {
        t: report.final_result.final_time(),
        beta: Some(config.bath.beta),
        sigma: report.final_result.final_reduced().clone(),
    };
    write_json(a, "covariance.json", &snapshot)
}

pub fn optimize(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let report = run_optimizer(config)?;
    let mut a = Artifacts::new(out)?;
    write_optimization(&mut a, config, &report)?;
    let summary = format!(
        "best E_N(t_f) = {:.6}, -ln nu = {:.6}, {} evaluations, {:.1} s",
        report.final_e_n, report.final_neg_log_nu, report.evaluations, report.wall_time_s
    );
    Ok(Outcome::from(a, summary))
}

/// Directory name of one sweep point, e.g. `beta_0.5`.
pub fn point_dir(axis: SweepAxis, value: f64) -> String {
    format!("{}_{value}", axis.name())
}

pub fn sweep(config: &RunConfig, out: &Path, axis: SweepAxis, values: &[f64], workers: usize) -> Result<Outcome> {
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }
    let points = values.iter().map(|&v| config.with_axis(axis, v)).collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))?;
    let mut a = Artifacts::new(out)?;
    let results: Vec<Result<(SummaryRow, Vec<PathBuf>)>> = pool.install(|| {
        points
            .par_iter()
            .zip(values)
            .map(|(point, &value)| {
                let report = run_optimizer(point)?;
                let mut run_dir = Artifacts::new(&a.dir().join(point_dir(axis, value)))?;
                write_optimization(&mut run_dir, point, &report)?;
                let row = SummaryRow {
                    value,
                    best_e_n: report.final_e_n,
                    neg_log_nu: report.final_neg_log_nu,
                    wall_time_s: report.wall_time_s,
                };
                Ok((row, run_dir.written))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let (row, files) = r?;
        rows.push(row);
        a.written.extend(files);
    }
    write_config(&mut a, config)?;
    a.write_round_trip("summary.csv", &rows, |r| write_summary(r), |b| read_summary(b))?;
    let list: Vec<String> = rows.iter().map(|r| format!("{}: {:.4}", r.value, r.best_e_n)).collect();
    Ok(Outcome::from(a, format!("best E_N by {}: {}", axis.name(), list.join(", "))))
}

pub fn write_summary(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn read_summary(bytes: &[u8]) -> Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .map(|r| {
            r.map_err(|e| {
                let at = e.position().map_or(String::new(), |p| format!(" at byte offset {}", p.byte()));
                Error::Parse(format!("summary CSV{at}: {e}"))
            })
        })
        .collect()
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = read_text(path)?;
    let snap: Snapshot = from_json(&text).map_err(|e| in_file(path, e))?;
    if snap.sigma.dim() != 4 {
        return Err(Error::Parse(format!(
            "{}: snapshot covariance must be 4x4, found {}x{}",
            path.display(),
            snap.sigma.dim(),
            snap.sigma.dim()
        )));
    }
    snap.sigma
        .validate_physical()
        .map_err(|e| Error::Parse(format!("{}: snapshot is not a physical state: {e}", path.display())))?;
    Ok(snap)
}

pub fn analyze(snapshot: &Path, config: &RunConfig, out: &Path) -> Result<Outcome> {
    let snap = read_snapshot(snapshot)?;
    let beta = snap.beta.unwrap_or(config.bath.beta);
    let report = analyze_state(&snap.sigma, beta, &LabelThresholds::default())?;
    let diag = StateDiagnostics {
        snapshot: snapshot.display().to_string(),
        t: snap.t,
        beta,
        report,
    };
    let mut a = Artifacts::new(out)?;
    write_json(&mut a, "diagnostics.json", &diag)?;
    let r = &diag.report;
    let summary = format!(
        "E_N = {:.6}, label {:?}, r_- = {:.4}, r_+ = {:.4}, m = {:.3}",
        r.e_n, r.semi_epr.label, r.semi_epr.r_minus, r.semi_epr.r_plus, r.mode_count
    );
    Ok(Outcome::from(a, summary))
}
