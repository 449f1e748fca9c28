//! Browser bindings for three small demos: normal-mode Wigner functions of a
//! two-mode state, the temperature bound on Q_- squeezing, and E_N(t) of a
//! resonantly driven pair on a coarse bath.
//!
//! The plain Rust functions are what the tests exercise; the `#[wasm_bindgen]`
//! exports only convert errors.

use entangle_core::analysis::{self, LabelThresholds, NormalModeState};
use entangle_core::bath::{self, BathSpec, GridKind};
use entangle_core::gaussian::{self, coth, CovarianceMatrix, PhaseGrid};
use entangle_core::propagation::{self, PropagateOptions, SampleSchedule};
use entangle_core::pulse::{ControlPulse, DriveMode};
use entangle_core::Result;
use nalgebra::Vector2;
use wasm_bindgen::prelude::*;

/// Two-mode state built from squeezed normal modes, with its diagnostics and
/// Wigner grids of Q_+ and Q_- (row-major, rows index Q).
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct StateView {
    e_n: f64,
    four_det_gamma: f64,
    label: String,
    bound_satisfied: bool,
    threshold: f64,
    points: usize,
    half_width: f64,
    wigner_plus: Vec<f64>,
    wigner_minus: Vec<f64>,
}

#[wasm_bindgen]
impl StateView {
    #[wasm_bindgen(getter)]
    pub fn e_n(&self) -> f64 {
        self.e_n
    }

    #[wasm_bindgen(getter)]
    pub fn four_det_gamma(&self) -> f64 {
        self.four_det_gamma
    }

    #[wasm_bindgen(getter)]
    pub fn label(&self) -> String {
        self.label.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn bound_satisfied(&self) -> bool {
        self.bound_satisfied
    }

    /// ½ arccosh(coth β).
    #[wasm_bindgen(getter)]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[wasm_bindgen(getter)]
    pub fn points(&self) -> usize {
        self.points
    }

    #[wasm_bindgen(getter)]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[wasm_bindgen(getter)]
    pub fn wigner_plus(&self) -> Vec<f64> {
        self.wigner_plus.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn wigner_minus(&self) -> Vec<f64> {
        self.wigner_minus.clone()
    }
}

/// Q_+ thermal at β and squeezed by `r_plus`, Q_- a squeezed vacuum with
/// `r_minus`; positive r stretches Q and compresses P.
pub fn normal_mode_state(r_minus: f64, r_plus: f64, beta: f64) -> Result<CovarianceMatrix> {
    let c = coth(0.5 * beta);
    let plus = CovarianceMatrix::from_row_major(2, &[0.5 * c * (2.0 * r_plus).exp(), 0.0, 0.0, 0.5 * c * (-2.0 * r_plus).exp()])?;
    let minus = CovarianceMatrix::from_row_major(2, &[0.5 * (2.0 * r_minus).exp(), 0.0, 0.0, 0.5 * (-2.0 * r_minus).exp()])?;
    let nm = NormalModeState {
        sigma: plus.direct_sum(&minus),
        transform: analysis::normal_mode_transform(),
    };
    Ok(nm.to_local())
}

fn flatten(sigma: &CovarianceMatrix, grid: PhaseGrid) -> Result<Vec<f64>> {
    let w = gaussian::wigner_grid(sigma, Vector2::zeros(), grid)?;
    let (nq, np) = (grid.nq, grid.np);
    Ok((0..nq).flat_map(|i| (0..np).map(move |j| (i, j))).map(|ij| w.values[ij]).collect())
}

pub fn state_view(r_minus: f64, r_plus: f64, beta: f64, points: usize, half_width: f64) -> Result<StateView> {
    let sigma = normal_mode_state(r_minus, r_plus, beta)?;
    let report = analysis::analyze_state(&sigma, beta, &LabelThresholds::default())?;
    let nm = analysis::to_normal_modes(&sigma)?;
    let grid = PhaseGrid::square(half_width, points);
    let label = serde_label(report.semi_epr.label);
    Ok(StateView {
        e_n: report.e_n,
        four_det_gamma: 4.0 * report.det_gamma,
        label,
        bound_satisfied: report.temperature_bound.satisfied,
        threshold: report.temperature_bound.threshold,
        points,
        half_width,
        wigner_plus: flatten(&CovarianceMatrix::from_matrix2(&nm.plus())?, grid)?,
        wigner_minus: flatten(&CovarianceMatrix::from_matrix2(&nm.minus())?, grid)?,
    })
}

fn serde_label(label: analysis::EprLabel) -> String {
    match label {
        analysis::EprLabel::Epr => "epr",
        analysis::EprLabel::SemiEpr => "semi-epr",
        analysis::EprLabel::Neither => "neither",
    }
    .to_string()
}

/// Pairs (β, ½ arccosh(coth β)) on `n` log-spaced temperatures, flattened.
pub fn threshold_curve(beta_min: f64, beta_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(beta_min > 0.0 && beta_max > beta_min) || n < 2 {
        return Err(entangle_core::Error::Config("need 0 < beta_min < beta_max and n >= 2".into()));
    }
    let (lo, hi) = (beta_min.ln(), beta_max.ln());
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let beta = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        out.push(beta);
        out.push(analysis::temperature_bound_check(0.0, beta)?.threshold);
    }
    Ok(out)
}

/// E_N(t) samples of a resonance run.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    e_n: Vec<f64>,
}

#[wasm_bindgen]
impl Trajectory {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn e_n(&self) -> Vec<f64> {
        self.e_n.clone()
    }
}

/// Coarse bath for interactive runs: 120 linear modes up to ω = 20, ω_c = 10.
pub fn demo_bath(eta: f64, beta: f64) -> BathSpec {
    BathSpec {
        eta,
        omega_c: 10.0,
        beta,
        n_modes: 120,
        omega_max: 20.0,
        grid_kind: GridKind::Linear,
        linear_cutoff: 20.0,
    }
}

/// Square-wave parametric drive with `amplitude` on the demo bath, sampled
/// at `samples + 1` times over [0, t_f].
pub fn resonance_run(mode: &str, eta: f64, beta: f64, amplitude: f64, t_f: f64, samples: usize) -> Result<Trajectory> {
    let mode: DriveMode = mode.parse()?;
    let spec = demo_bath(eta, beta);
    spec.validate()?;
    let bath = bath::discretize(&spec, Some(t_f))?;
    let n_segments = ((t_f / (0.5 * std::f64::consts::PI)).round() as usize).max(1);
    let pulse = ControlPulse::parametric_resonance(mode, t_f, n_segments, 4.0, amplitude)?;
    let initial = bath::thermal_initial_covariance(&bath, beta);
    let options = PropagateOptions {
        samples: SampleSchedule::Uniform(samples),
        ..PropagateOptions::default()
    };
    let run = propagation::propagate(&initial, &pulse, &bath, &options)?;
    Ok(Trajectory {
        e_n: run.log_negativity()?,
        times: run.times,
    })
}

fn js(e: entangle_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = stateView)]
pub fn state_view_js(r_minus: f64, r_plus: f64, beta: f64, points: usize, half_width: f64) -> std::result::Result<StateView, JsError> {
    state_view(r_minus, r_plus, beta, points, half_width).map_err(js)
}

#[wasm_bindgen(js_name = thresholdCurve)]
pub fn threshold_curve_js(beta_min: f64, beta_max: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    threshold_curve(beta_min, beta_max, n).map_err(js)
}

#[wasm_bindgen(js_name = resonanceRun)]
pub fn resonance_run_js(mode: &str, eta: f64, beta: f64, amplitude: f64, t_f: f64, samples: usize) -> std::result::Result<Trajectory, JsError> {
    resonance_run(mode, eta, beta, amplitude, t_f, samples).map_err(js)
}
