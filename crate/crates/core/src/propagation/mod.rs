//! Exact Gaussian time evolution of the system + bath model.
//!
//! The total Hamiltonian is H = ½ pᵀM⁻¹p + ½ xᵀV x with
//! V[q_j, q_j] = 1 + u_j(t) + 2μ, V[q_A, q_B] = 2μ, V[q_j, x_k] = c_k and
//! V[x_k, x_k] = m_k ω_k². Covariances evolve as σ ← S σ Sᵀ with the symplectic
//! one-step maps of [`kernel`].
//!
//! The default backend never forms the full covariance: the four system rows
//! of the propagator are pulled back from each sample time and contracted with
//! the (sparse) initial covariance. The dense backend propagates the whole
//! matrix and is kept for cross-checks and for retaining the final state.

pub(crate) mod adjoint;
pub(crate) mod kernel;
pub mod semianalytic;

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::DiscretizedBath;
use crate::error::{Error, Result};
use crate::gaussian::{self, CovarianceMatrix};
use crate::pulse::{ControlPulse, DriveMode};
use kernel::{system_rows, Block, Lanes, Plan, Stepper, SYS};

pub use semianalytic::{propagate_normal_mode_semianalytic, FundamentalSolutions};

/// Largest admissible step in units of 1/omega_max.
pub const MAX_STEP_OMEGA: f64 = 0.4;
const DEFAULT_STEP_OMEGA: f64 = 0.25;
/// Tolerance of the runtime Heisenberg-floor check for well-conditioned
/// states. Rounding in σ_sys grows with its condition number κ, so the
/// tolerance applied is `floor_tolerance(κ)`.
pub const FLOOR_TOLERANCE: f64 = 1e-7;

pub fn floor_tolerance(condition: f64) -> f64 {
    FLOOR_TOLERANCE.max(1e-15 * condition)
}

/// Drift matrix A(t) = Ω H(t) of the linear phase-space flow at one instant.
///
/// Stored in factored form; [`Generator::to_dense`] builds the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub stiffness_a: f64,
    pub stiffness_b: f64,
    pub counterterm: f64,
    pub couplings: Vec<f64>,
    pub omegas: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        SYS + 2 * self.omegas.len()
    }

    /// Symmetric Hamiltonian matrix H with H(x) = ½ xᵀ H x.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        let mu2 = 2.0 * self.counterterm;
        h[(0, 0)] = self.stiffness_a + mu2;
        h[(2, 2)] = self.stiffness_b + mu2;
        h[(0, 2)] = mu2;
        h[(2, 0)] = mu2;
        h[(1, 1)] = 1.0;
        h[(3, 3)] = 1.0;
        for k in 0..self.omegas.len() {
            let (x, p) = (SYS + 2 * k, SYS + 2 * k + 1);
            let m = self.masses[k];
            h[(x, x)] = m * self.omegas[k] * self.omegas[k];
            h[(p, p)] = 1.0 / m;
            for q in [0, 2] {
                h[(q, x)] = self.couplings[k];
                h[(x, q)] = self.couplings[k];
            }
        }
        h
    }

    /// A = Ω H.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let h = self.hamiltonian();
        let mut a = DMatrix::zeros(h.nrows(), h.ncols());
        for i in (0..h.nrows()).step_by(2) {
            a.set_row(i, &h.row(i + 1));
            a.set_row(i + 1, &(-h.row(i)));
        }
        a
    }
}

/// Generator in force at time `t` (segments closed on the left).
pub fn assemble_generator(pulse: &ControlPulse, bath: &DiscretizedBath, t: f64) -> Generator {
    let (ua, ub) = pulse.amplitudes_at(t);
    Generator {
        stiffness_a: 1.0 + ua,
        stiffness_b: 1.0 + ub,
        counterterm: bath.counterterm_sum,
        couplings: bath.couplings.clone(),
        omegas: bath.omegas.clone(),
        masses: bath.masses.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSchedule {
    /// `n + 1` equally spaced times including both ends.
    Uniform(usize),
    Times(Vec<f64>),
    FinalOnly,
}

impl SampleSchedule {
    pub fn times(&self, t_start: f64, t_end: f64) -> Result<Vec<f64>> {
        let times = match self {
            SampleSchedule::Uniform(n) => {
                let n = (*n).max(1);
                (0..=n)
                    .map(|i| if i == n { t_end } else { t_start + (t_end - t_start) * i as f64 / n as f64 })
                    .collect()
            }
            SampleSchedule::Times(ts) => ts.clone(),
            SampleSchedule::FinalOnly => vec![t_end],
        };
        let tol = 1e-9 * t_end.abs().max(1.0);
        if times.is_empty() {
            return Err(Error::Config("sample schedule is empty".into()));
        }
        for w in times.windows(2) {
            if !(w[1] >= w[0]) {
                return Err(Error::Config("sample times must be non-decreasing".into()));
            }
        }
        if !(times[0] >= t_start - tol) || !(times[times.len() - 1] <= t_end + tol) {
            return Err(Error::Config(format!(
                "sample times must lie in [{t_start}, {t_end}]"
            )));
        }
        Ok(times.into_iter().map(|t| t.clamp(t_start, t_end)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Heisenberg,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    /// Step size; `None` picks min(0.25/omega_max, shortest segment/8).
    pub dt: Option<f64>,
    pub samples: SampleSchedule,
    pub backend: Backend,
    /// Keep what [`continue_free`] needs: the full final covariance with the
    /// dense backend, otherwise the initial state and pulse for a replay.
    pub retain_full: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            dt: None,
            samples: SampleSchedule::Uniform(200),
            backend: Backend::Heisenberg,
            retain_full: false,
        }
    }
}

impl PropagateOptions {
    pub fn final_only() -> Self {
        Self {
            samples: SampleSchedule::FinalOnly,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// ‖R Ω Rᵀ − Ω‖_max for the system rows R of the accumulated propagator at the last sample.
    pub symplectic_residual: f64,
    /// Smallest symplectic eigenvalue over all reduced samples.
    pub min_symplectic_eigenvalue: f64,
    /// ½ Σ_j (⟨p_j²⟩ + (1 + u_j) ⟨q_j²⟩) per sample.
    pub system_energy: Vec<f64>,
    pub dt: f64,
    pub n_steps: usize,
}

/// Initial state and pulse, enough to replay a run.
#[derive(Debug, Clone)]
pub struct Replay {
    pub initial: Arc<CovarianceMatrix>,
    pub pulse: ControlPulse,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    /// Reduced 4×4 system covariances at `times`.
    pub reduced: Vec<CovarianceMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_full: Option<CovarianceMatrix>,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub replay: Option<Replay>,
}

impl PropagationResult {
    pub fn final_reduced(&self) -> &CovarianceMatrix {
        &self.reduced[self.reduced.len() - 1]
    }

    pub fn final_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn log_negativity(&self) -> Result<Vec<f64>> {
        self.reduced.iter().map(gaussian::log_negativity).collect()
    }

    pub fn neg_log_nu(&self) -> Result<Vec<f64>> {
        self.reduced.iter().map(gaussian::neg_log_nu).collect()
    }

    pub fn det_gamma(&self) -> Result<Vec<f64>> {
        self.reduced.iter().map(gaussian::det_gamma).collect()
    }
}

pub(crate) fn resolve_dt(pulse: &ControlPulse, bath: &DiscretizedBath, dt: Option<f64>) -> Result<f64> {
    let w = bath.omega_max().max(1.0);
    let shortest = pulse
        .edges()
        .windows(2)
        .map(|e| e[1] - e[0])
        .fold(f64::INFINITY, f64::min);
    let dt = dt.unwrap_or_else(|| (DEFAULT_STEP_OMEGA / w).min(shortest / 8.0));
    if !(dt > 0.0) || dt > MAX_STEP_OMEGA / w * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "step dt = {dt} must be positive and at most {MAX_STEP_OMEGA}/omega_max = {}",
            MAX_STEP_OMEGA / w
        )));
    }
    Ok(dt)
}

/// Bath with no modes, used when every coupling vanishes.
fn empty_bath() -> DiscretizedBath {
    DiscretizedBath {
        omegas: Vec::new(),
        couplings: Vec::new(),
        masses: Vec::new(),
        spacings: Vec::new(),
        counterterm_sum: 0.0,
    }
}

/// Upper-triangle nonzeros of a symmetric matrix, restricted to the leading `dim` block.
pub(crate) struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(m: &DMatrix<f64>, dim: usize) -> Self {
        let mut entries = Vec::new();
        for j in 0..dim {
            for i in 0..=j {
                let v = m[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// R σ Rᵀ for the rows R stored as lanes (`x[i][l] = R[l][i]`).
    pub fn contract(&self, x: &[Lanes]) -> Matrix4<f64> {
        let mut out = Matrix4::zeros();
        for &(i, j, v) in &self.entries {
            let (a, b) = (&x[i], &x[j]);
            if i == j {
                for l in 0..4 {
                    for m in 0..4 {
                        out[(l, m)] += v * a[l] * a[m];
                    }
                }
            } else {
                for l in 0..4 {
                    for m in 0..4 {
                        out[(l, m)] += v * (a[l] * b[m] + b[l] * a[m]);
                    }
                }
            }
        }
        0.5 * (out + out.transpose())
    }

    /// σ Rᵀ G as lanes.
    pub fn apply(&self, x: &[Lanes], g: &Matrix4<f64>, dim: usize) -> Vec<Lanes> {
        let mut y = vec![[0.0; 4]; dim];
        let mut acc = |i: usize, j: usize, v: f64| {
            for a in 0..4 {
                let mut s = 0.0;
                for l in 0..4 {
                    s += x[j][l] * g[(l, a)];
                }
                y[i][a] += v * s;
            }
        };
        for &(i, j, v) in &self.entries {
            acc(i, j, v);
            if i != j {
                acc(j, i, v);
            }
        }
        y
    }
}

fn rows_residual(x: &[Lanes]) -> f64 {
    let mut worst: f64 = 0.0;
    for l in 0..4 {
        for m in 0..4 {
            let mut s = 0.0;
            for k in (0..x.len()).step_by(2) {
                s += x[k][l] * x[k + 1][m] - x[k + 1][l] * x[k][m];
            }
            let target = match (l, m) {
                (0, 1) | (2, 3) => 1.0,
                (1, 0) | (3, 2) => -1.0,
                _ => 0.0,
            };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}

fn stepper_for<'a>(bath: &'a DiscretizedBath, plan: &Plan, extra: &[Block]) -> Stepper<'a> {
    let mut st = Stepper::new(bath);
    st.prepare_all(plan.segments());
    st.prepare_all(extra);
    st
}

/// Propagates the full model and returns reduced system covariances at the sample times.
pub fn propagate(
    initial: &CovarianceMatrix,
    pulse: &ControlPulse,
    bath: &DiscretizedBath,
    options: &PropagateOptions,
) -> Result<PropagationResult> {
    propagate_from(initial, pulse, bath, options, 0.0)
}

fn propagate_from(
    initial: &CovarianceMatrix,
    pulse: &ControlPulse,
    bath: &DiscretizedBath,
    options: &PropagateOptions,
    t_offset: f64,
) -> Result<PropagationResult> {
    if initial.dim() != bath.total_dim() {
        return Err(Error::shape(
            format!("{}×{} covariance (4 + 2·{} bath modes)", bath.total_dim(), bath.total_dim(), bath.n_modes()),
            format!("{}×{}", initial.dim(), initial.dim()),
        ));
    }
    let dt = resolve_dt(pulse, bath, options.dt)?;
    let t_f = pulse.t_f();
    if bath.is_coupled() {
        bath.check_horizon(t_offset + t_f)?;
    }
    let times = options.samples.times(0.0, t_f)?;
    let plan = Plan::new(pulse, dt);
    let located: Vec<(usize, Option<Block>)> = times.iter().map(|&t| plan.locate(t)).collect();

    let (reduced, residual, final_full) = match options.backend {
        Backend::Heisenberg => {
            let (reduced, residual) = heisenberg(initial, bath, &plan, &located)?;
            (reduced, residual, None)
        }
        Backend::Dense => dense(initial, bath, &plan, &located, options.retain_full)?,
    };

    let shifted: Vec<f64> = times.iter().map(|t| t + t_offset).collect();
    let mut min_nu = f64::INFINITY;
    let mut energy = Vec::with_capacity(reduced.len());
    let mut covs = Vec::with_capacity(reduced.len());
    for ((m, &t), &t_local) in reduced.iter().zip(&shifted).zip(&times) {
        let fail = |reason: String| Error::PropagationFailure { time: t, reason };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite covariance entry".into()));
        }
        let cov = CovarianceMatrix::new(DMatrix::from_column_slice(4, 4, m.as_slice()))
            .map_err(|e| fail(e.to_string()))?;
        let nu = gaussian::symplectic_eigenvalues(&cov).map_err(|e| fail(e.to_string()))?[0];
        let eig = m.symmetric_eigenvalues();
        if nu < 1.0 - floor_tolerance(eig.max() / eig.min()) {
            return Err(fail(format!("symplectic eigenvalue {nu} below the Heisenberg floor")));
        }
        min_nu = min_nu.min(nu);
        let (ua, ub) = pulse.amplitudes_at(t_local);
        energy.push(0.5 * (m[(1, 1)] + (1.0 + ua) * m[(0, 0)] + m[(3, 3)] + (1.0 + ub) * m[(2, 2)]));
        covs.push(cov);
    }
    let replay = (options.retain_full && final_full.is_none()).then(|| Replay {
        initial: Arc::new(initial.clone()),
        pulse: pulse.clone(),
        dt,
    });
    Ok(PropagationResult {
        times: shifted,
        reduced: covs,
        final_full,
        diagnostics: Diagnostics {
            symplectic_residual: residual,
            min_symplectic_eigenvalue: min_nu,
            system_energy: energy,
            dt,
            n_steps: plan.n_steps(),
        },
        replay,
    })
}

fn heisenberg(
    initial: &CovarianceMatrix,
    bath: &DiscretizedBath,
    plan: &Plan,
    located: &[(usize, Option<Block>)],
) -> Result<(Vec<Matrix4<f64>>, f64)> {
    let coupled = bath.is_coupled();
    let empty = empty_bath();
    let bath = if coupled { bath } else { &empty };
    let dim = bath.total_dim();
    let sigma0 = SparseSym::new(initial.entries(), dim);
    let partials: Vec<Block> = located.iter().filter_map(|l| l.1).collect();
    let stepper = stepper_for(bath, plan, &partials);

    if partials.is_empty() && plan.is_constant() {
        // P M^{n+1} = (P M^n) M: one forward sweep of the rows.
        let mut x = system_rows(dim);
        let mut done = 0;
        let mut out = Vec::with_capacity(located.len());
        for &(n, _) in located {
            stepper.backward(&plan.blocks_between(done, n), &mut x);
            done = n;
            out.push(sigma0.contract(&x));
        }
        return Ok((out, rows_residual(&x)));
    }

    let results: Vec<(Matrix4<f64>, f64)> = located
        .par_iter()
        .enumerate()
        .map(|(i, &(n, partial))| {
            let mut blocks = plan.blocks_between(0, n);
            blocks.extend(partial);
            let mut x = system_rows(dim);
            stepper.backward(&blocks, &mut x);
            let residual = if i + 1 == located.len() { rows_residual(&x) } else { 0.0 };
            (sigma0.contract(&x), residual)
        })
        .collect();
    let residual = results.last().map_or(0.0, |r| r.1);
    Ok((results.into_iter().map(|r| r.0).collect(), residual))
}

/// x ← M x applied to every column of `m`, four columns at a time.
fn apply_columns(stepper: &Stepper<'_>, blocks: &[Block], m: &mut DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let chunks: Vec<(usize, Vec<Lanes>)> = (0..cols)
        .step_by(4)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|c0| {
            let width = (cols - c0).min(4);
            let mut x = vec![[0.0; 4]; rows];
            for l in 0..width {
                let col = m.column(c0 + l);
                for i in 0..rows {
                    x[i][l] = col[i];
                }
            }
            stepper.forward(blocks, &mut x);
            (c0, x)
        })
        .collect();
    for (c0, x) in chunks {
        let width = (cols - c0).min(4);
        for l in 0..width {
            let mut col = m.column_mut(c0 + l);
            for i in 0..rows {
                col[i] = x[i][l];
            }
        }
    }
}

/// σ ← M σ Mᵀ for the given blocks.
fn conjugate(stepper: &Stepper<'_>, blocks: &[Block], sigma: &mut DMatrix<f64>) {
    if blocks.is_empty() {
        return;
    }
    apply_columns(stepper, blocks, sigma);
    sigma.transpose_mut();
    apply_columns(stepper, blocks, sigma);
    let sym = (&*sigma + sigma.transpose()) * 0.5;
    *sigma = sym;
}

type DenseOut = (Vec<Matrix4<f64>>, f64, Option<CovarianceMatrix>);

fn dense(
    initial: &CovarianceMatrix,
    bath: &DiscretizedBath,
    plan: &Plan,
    located: &[(usize, Option<Block>)],
    retain: bool,
) -> Result<DenseOut> {
    let partials: Vec<Block> = located.iter().filter_map(|l| l.1).collect();
    let stepper = stepper_for(bath, plan, &partials);
    let mut sigma = initial.entries().clone();
    let mut done = 0;
    let mut out = Vec::with_capacity(located.len());
    let mut last_full = None;
    for (i, &(n, partial)) in located.iter().enumerate() {
        conjugate(&stepper, &plan.blocks_between(done, n), &mut sigma);
        done = n;
        let last = i + 1 == located.len();
        let view = match partial {
            Some(b) => {
                let mut s = sigma.clone();
                conjugate(&stepper, &[b], &mut s);
                s
            }
            None if last && retain => sigma.clone(),
            None => {
                out.push(sigma.fixed_view::<4, 4>(0, 0).into_owned());
                continue;
            }
        };
        out.push(view.fixed_view::<4, 4>(0, 0).into_owned());
        if last && retain {
            last_full = Some(view);
        }
    }
    // residual of the system rows at the last sample, recomputed in the row picture
    let (n, partial) = located[located.len() - 1];
    let mut blocks = plan.blocks_between(0, n);
    blocks.extend(partial);
    let mut x = system_rows(bath.total_dim());
    stepper.backward(&blocks, &mut x);
    let residual = rows_residual(&x);
    let full = match last_full {
        Some(m) => Some(CovarianceMatrix::new(m)?),
        None => None,
    };
    Ok((out, residual, full))
}

/// Full propagator S(t) of the total model; intended for small baths.
pub fn full_propagator(pulse: &ControlPulse, bath: &DiscretizedBath, t: f64, dt: Option<f64>) -> Result<DMatrix<f64>> {
    let dt = resolve_dt(pulse, bath, dt)?;
    let plan = Plan::new(pulse, dt);
    let (n, partial) = plan.locate(t.clamp(0.0, pulse.t_f()));
    let mut blocks = plan.blocks_between(0, n);
    blocks.extend(partial);
    let stepper = stepper_for(bath, &plan, &blocks);
    let mut s = DMatrix::identity(bath.total_dim(), bath.total_dim());
    apply_columns(&stepper, &blocks, &mut s);
    Ok(s)
}

/// Continues a finished run with the drive switched off for `extra_time`.
///
/// Needs either the full final covariance (dense backend with `retain_full`)
/// or the replay record kept by the Heisenberg backend with `retain_full`.
/// `options.samples` is laid over the continuation interval; returned
/// samples are the original ones followed by the new ones after the switch-off.
pub fn continue_free(
    result: &PropagationResult,
    bath: &DiscretizedBath,
    extra_time: f64,
    options: &PropagateOptions,
) -> Result<PropagationResult> {
    if !(extra_time >= 0.0) {
        return Err(Error::Usage("continuation time must be >= 0".into()));
    }
    if extra_time == 0.0 {
        return Ok(result.clone());
    }
    let t0 = result.final_time();
    let new_times: Vec<f64> = options
        .samples
        .times(t0, t0 + extra_time)?
        .into_iter()
        .filter(|&t| t > t0 + 1e-12 * t0.max(1.0))
        .collect();
    if new_times.is_empty() {
        return Ok(result.clone());
    }
    let tail = if let Some(full) = &result.final_full {
        let off = ControlPulse::zero(DriveMode::Free, extra_time, 1, 0.0)?;
        let opts = PropagateOptions {
            samples: SampleSchedule::Times(new_times.iter().map(|t| t - t0).collect()),
            dt: options.dt,
            ..options.clone()
        };
        propagate_from(full, &off, bath, &opts, t0)?
    } else if let Some(replay) = &result.replay {
        let pulse = replay.pulse.extended_with_zeros(t0 + extra_time - replay.pulse.t_f())?;
        let opts = PropagateOptions {
            samples: SampleSchedule::Times(new_times.clone()),
            dt: Some(replay.dt),
            backend: Backend::Heisenberg,
            retain_full: true,
        };
        propagate(&replay.initial, &pulse, bath, &opts)?
    } else {
        return Err(Error::Usage(
            "continuation needs a run propagated with retain_full".into(),
        ));
    };
    let mut out = result.clone();
    out.times.extend(&tail.times);
    out.reduced.extend(tail.reduced);
    out.diagnostics.symplectic_residual = tail.diagnostics.symplectic_residual;
    out.diagnostics.min_symplectic_eigenvalue =
        out.diagnostics.min_symplectic_eigenvalue.min(tail.diagnostics.min_symplectic_eigenvalue);
    out.diagnostics.system_energy.extend(tail.diagnostics.system_energy);
    out.final_full = tail.final_full;
    out.replay = tail.replay;
    Ok(out)
}
