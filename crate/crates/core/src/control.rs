//! End-time negativity objective, its exact gradient and a multi-start
//! projected gradient ascent.
//!
//! The optimizer climbs the smooth surrogate −ln ν̃_- (minus the roughness
//! penalty); reported values use E_N = max{0, −ln ν̃_-}.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{discretize, thermal_initial_covariance, BathSpec, DiscretizedBath};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, TwoModeInvariants};
use crate::propagation::{self, adjoint, PropagateOptions, PropagationResult, SampleSchedule};
use crate::pulse::{ControlPulse, DriveMode};

/// Relative width below which the two partially transposed symplectic
/// eigenvalues count as degenerate.
const DEGENERACY: f64 = 1e-9;

/// Largest condition number κ of σ_sys the optimizer accepts; pulses beyond
/// it are infeasible. Rounding in the propagated covariance is of order
/// 1e-16·κ relative to its smallest eigenvalue; the adjoint gradient picks up
/// a relative error of up to about 2e-10·κ from it.
pub const MAX_CONDITION: f64 = 1e5;

fn check_conditioning(sigma: &Matrix4<f64>, t: f64) -> Result<()> {
    let eig = sigma.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::PropagationFailure {
            time: t,
            reason: format!("reduced covariance too ill-conditioned to trust (eigenvalues {lo:e} .. {hi:e})"),
        });
    }
    Ok(())
}

/// F[u] = E_N(σ(t_f)) − λ Σ (u_{i+1} − u_i)².
#[derive(Debug, Clone)]
pub struct Objective {
    pub template: ControlPulse,
    pub bath: Arc<DiscretizedBath>,
    pub initial: Arc<CovarianceMatrix>,
    pub lambda: f64,
    pub dt: Option<f64>,
    /// Bath parameters and temperature, when the objective was built from them.
    pub scenario: Option<(BathSpec, f64)>,
}

impl Objective {
    /// Ground-state oscillators and a thermal bath at inverse temperature `beta`.
    pub fn thermal(template: ControlPulse, spec: &BathSpec, beta: f64, lambda: f64) -> Result<Self> {
        let spec = BathSpec { beta, ..spec.clone() };
        let bath = discretize(&spec, Some(template.t_f()))?;
        let initial = thermal_initial_covariance(&bath, beta);
        let mut obj = Self::new(template, Arc::new(bath), Arc::new(initial), lambda)?;
        obj.scenario = Some((spec, beta));
        Ok(obj)
    }

    pub fn new(
        template: ControlPulse,
        bath: Arc<DiscretizedBath>,
        initial: Arc<CovarianceMatrix>,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("roughness weight must be >= 0, got {lambda}")));
        }
        if initial.dim() != bath.total_dim() {
            return Err(Error::shape(format!("{}", bath.total_dim()), format!("{}", initial.dim())));
        }
        Ok(Self {
            template,
            bath,
            initial,
            lambda,
            dt: None,
            scenario: None,
        })
    }

    /// Same scenario on a coarse linear bath of `n_modes` up to `omega_max`.
    pub fn reduced(&self, n_modes: usize, omega_max: f64) -> Result<Self> {
        let (spec, beta) = self
            .scenario
            .clone()
            .ok_or_else(|| Error::Usage("a reduced objective needs the bath parameters".into()))?;
        let mut obj = Self::thermal(self.template.clone(), &spec.reduced(n_modes, omega_max), beta, self.lambda)?;
        obj.dt = None;
        Ok(obj)
    }

    fn check(&self, pulse: &ControlPulse) -> Result<()> {
        let t = &self.template;
        if pulse.mode != t.mode || pulse.edges() != t.edges() || pulse.bound != t.bound {
            return Err(Error::Usage("pulse does not match the objective's template".into()));
        }
        Ok(())
    }

    /// Final reduced covariance; fails when it exceeds [`MAX_CONDITION`].
    pub fn final_state(&self, pulse: &ControlPulse) -> Result<CovarianceMatrix> {
        let s = self.final_state_unchecked(pulse)?;
        check_conditioning(&s.as_matrix4()?, pulse.t_f())?;
        Ok(s)
    }

    fn final_state_unchecked(&self, pulse: &ControlPulse) -> Result<CovarianceMatrix> {
        self.check(pulse)?;
        let opts = PropagateOptions {
            dt: self.dt,
            ..PropagateOptions::final_only()
        };
        let r = propagation::propagate(&self.initial, pulse, &self.bath, &opts)?;
        Ok(r.final_reduced().clone())
    }

    /// Propagation of `pulse` with a custom sample schedule.
    pub fn trajectory(&self, pulse: &ControlPulse, samples: SampleSchedule, retain_full: bool) -> Result<PropagationResult> {
        self.check(pulse)?;
        let opts = PropagateOptions {
            dt: self.dt,
            samples,
            retain_full,
            ..PropagateOptions::default()
        };
        propagation::propagate(&self.initial, pulse, &self.bath, &opts)
    }
}

/// E_N(σ(t_f)) − λ·roughness.
pub fn evaluate(objective: &Objective, pulse: &ControlPulse) -> Result<f64> {
    let s = objective.final_state(pulse)?;
    Ok(crate::gaussian::log_negativity(&s)? - objective.lambda * pulse.roughness())
}

/// −ln ν̃_-(σ(t_f)) − λ·roughness.
pub fn evaluate_surrogate(objective: &Objective, pulse: &ControlPulse) -> Result<f64> {
    let s = objective.final_state(pulse)?;
    Ok(surrogate(&s.as_matrix4()?)?.value - objective.lambda * pulse.roughness())
}

/// −ln ν̃_- from the two-mode invariants with its derivative G = ∂f/∂σ.
#[derive(Debug, Clone, Copy)]
pub struct Surrogate {
    pub value: f64,
    pub dsigma: Matrix4<f64>,
    /// The two partially transposed symplectic eigenvalues (nearly) coincide;
    /// the derivative then follows the lower branch without the square-root term.
    pub degenerate: bool,
}

fn cofactor2(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)], -m[(1, 0)], -m[(0, 1)], m[(0, 0)])
}

/// ν̃_-² = 8 det σ / (Δ̃ + √(Δ̃² − 4 det σ)) in vacuum-normalized units, Δ̃ = det α + det β − 2 det γ.
pub fn surrogate(sigma: &Matrix4<f64>) -> Result<Surrogate> {
    let inv = TwoModeInvariants::of(sigma);
    let d = inv.delta_pt();
    let det = inv.det_sigma;
    if !(det > 0.0) || !(d > 0.0) {
        return Err(Error::InvalidState(format!(
            "two-mode invariants out of range (det σ = {det:e}, Δ̃ = {d:e})"
        )));
    }
    let disc = (d * d - 4.0 * det).max(0.0);
    let root = disc.sqrt();
    let nu2 = 8.0 * det / (d + root);
    let value = -0.5 * nu2.ln();

    let a = sigma.fixed_view::<2, 2>(0, 0).into_owned();
    let b = sigma.fixed_view::<2, 2>(2, 2).into_owned();
    let g = sigma.fixed_view::<2, 2>(0, 2).into_owned();
    let inv_sigma = sigma
        .try_inverse()
        .ok_or_else(|| Error::Singular("two-mode covariance".into()))?;
    let d_det = inv_sigma.transpose() * det;
    let mut d_delta = Matrix4::zeros();
    d_delta.fixed_view_mut::<2, 2>(0, 0).copy_from(&cofactor2(&a));
    d_delta.fixed_view_mut::<2, 2>(2, 2).copy_from(&cofactor2(&b));
    // γ appears twice in the symmetric σ; split its cofactor over both blocks
    let cof = cofactor2(&g);
    d_delta.fixed_view_mut::<2, 2>(0, 2).copy_from(&(-cof));
    d_delta.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-cof.transpose()));

    let degenerate = disc <= DEGENERACY * d * d;
    let d_root = if degenerate {
        Matrix4::zeros()
    } else {
        (d_delta * d - d_det * 2.0) / root
    };
    let dsigma = -0.5 * (inv_sigma - (d_delta + d_root) / (d + root));
    Ok(Surrogate {
        value,
        dsigma: 0.5 * (dsigma + dsigma.transpose()),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientResult {
    /// Surrogate objective −ln ν̃_- − λ·roughness.
    pub value: f64,
    pub e_n: f64,
    pub gradient: Vec<f64>,
    pub degenerate: bool,
}

/// Surrogate objective and its exact gradient with respect to `pulse.params()`.
pub fn value_and_gradient(objective: &Objective, pulse: &ControlPulse) -> Result<GradientResult> {
    adjoint_gradient(objective, pulse, true)
}

fn adjoint_gradient(objective: &Objective, pulse: &ControlPulse, guarded: bool) -> Result<GradientResult> {
    objective.check(pulse)?;
    let adj = adjoint::value_and_gradient(&objective.initial, pulse, &objective.bath, objective.dt, |s| {
        if guarded {
            check_conditioning(s, pulse.t_f())?;
        }
        let sur = surrogate(s)?;
        Ok((sur, sur.dsigma))
    })?;
    let rough = pulse.roughness_gradient();
    let gradient = adj
        .gradient
        .iter()
        .zip(&rough)
        .map(|(g, r)| g - objective.lambda * r)
        .collect();
    Ok(GradientResult {
        value: adj.value.value - objective.lambda * pulse.roughness(),
        e_n: adj.value.value.max(0.0),
        gradient,
        degenerate: adj.value.degenerate,
    })
}

/// ∂F/∂u for every free segment amplitude (surrogate form of F).
pub fn gradient(objective: &Objective, pulse: &ControlPulse) -> Result<Vec<f64>> {
    Ok(value_and_gradient(objective, pulse)?.gradient)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    /// max_i |g_i − fd_i| / max_i |fd_i|.
    pub max_relative_error: f64,
    pub step: f64,
    pub n_params: usize,
    /// Which bath the check ran on.
    pub model: String,
}

/// Compares the adjoint gradient with central finite differences of the surrogate.
pub fn finite_difference_check(objective: &Objective, pulse: &ControlPulse, step: f64) -> Result<GradientCheck> {
    let g = adjoint_gradient(objective, pulse, false)?.gradient;
    let p = pulse.params();
    let fd: Vec<f64> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let at = |d: f64| {
                let mut q = p.clone();
                q[i] += d;
                let q = pulse.with_params(&q)?;
                let s = objective.final_state_unchecked(&q)?;
                Ok(surrogate(&s.as_matrix4()?)?.value - objective.lambda * q.roughness())
            };
            Ok((at(step)? - at(-step)?) / (2.0 * step))
        })
        .collect::<Result<_>>()?;
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(GradientCheck {
        max_relative_error: err / scale,
        step,
        n_params: p.len(),
        model: format!("{} bath modes", objective.bath.n_modes()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub seed: u64,
    /// Total gradient evaluations for the ascent, split evenly over the starts
    /// (each start gets at least its initial evaluation).
    pub budget: usize,
    pub multi_start: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Amplitude of the parametric-resonance seed.
    pub seed_amplitude: f64,
    /// Coarse bath (modes, omega_max) for the inner loop; `None` optimizes on the full bath.
    pub fast_inner: Option<(usize, f64)>,
    /// Extra ascent iterations on the full bath after the inner loop.
    pub polish_budget: usize,
    pub gradient_check: bool,
    /// Samples of the reported E_N(t) trajectory.
    pub samples: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: 400,
            multi_start: 8,
            initial_step: 0.5,
            min_step: 1e-6,
            seed_amplitude: 0.5,
            fast_inner: Some((200, 20.0)),
            polish_budget: 10,
            gradient_check: true,
            samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub start: usize,
    pub stage: String,
    pub evaluation: usize,
    /// Surrogate objective of this evaluation (`null` when the propagation failed).
    pub objective: Option<f64>,
    /// Best objective of this start so far; `null` before its first feasible evaluation.
    pub best: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_pulse: ControlPulse,
    /// Regularized surrogate objective of the best pulse on the full bath.
    pub best_objective: f64,
    pub final_e_n: f64,
    pub final_neg_log_nu: f64,
    pub trace: Vec<TraceEntry>,
    pub gradient_check: Option<GradientCheck>,
    pub final_result: PropagationResult,
    pub evaluations: usize,
    pub degenerate_points: usize,
    pub no_entanglement_found: bool,
    pub seed: u64,
    pub wall_time_s: f64,
}

struct Ascent {
    params: Vec<f64>,
    value: f64,
    trace: Vec<TraceEntry>,
    evaluations: usize,
    degenerate: usize,
}

fn ascend(objective: &Objective, start: usize, stage: &str, params: Vec<f64>, budget: usize, s: &OptimizerSettings) -> Ascent {
    let eval = |p: &[f64]| -> Option<GradientResult> {
        let pulse = objective.template.with_params(p).ok()?;
        value_and_gradient(objective, &pulse).ok().filter(|g| g.value.is_finite())
    };
    let mut out = Ascent {
        params,
        value: f64::NEG_INFINITY,
        trace: Vec::new(),
        evaluations: 0,
        degenerate: 0,
    };
    let record = |out: &mut Ascent, r: &Option<GradientResult>| {
        out.evaluations += 1;
        if let Some(r) = r {
            out.degenerate += r.degenerate as usize;
        }
        out.trace.push(TraceEntry {
            start,
            stage: stage.to_string(),
            evaluation: out.evaluations,
            objective: r.as_ref().map(|r| r.value),
            best: Some(out.value.max(r.as_ref().map_or(f64::NEG_INFINITY, |r| r.value))).filter(|b| b.is_finite()),
        });
    };
    // infeasible starts are pulled towards u = 0
    let mut first = eval(&out.params);
    record(&mut out, &first);
    while first.is_none() && out.evaluations < budget {
        out.params.iter_mut().for_each(|x| *x *= 0.5);
        first = eval(&out.params);
        record(&mut out, &first);
    }
    let Some(mut current) = first else {
        return out;
    };
    out.value = current.value;
    let bound = objective.template.bound;
    let mut step = s.initial_step;
    while out.evaluations < budget && step >= s.min_step {
        let norm = current.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if !(norm > 0.0) {
            break;
        }
        let trial: Vec<f64> = out
            .params
            .iter()
            .zip(&current.gradient)
            .map(|(x, g)| (x + step * g / norm).clamp(-bound, bound))
            .collect();
        if trial == out.params {
            break;
        }
        let r = eval(&trial);
        record(&mut out, &r);
        match r {
            Some(r) if r.value > out.value => {
                out.params = trial;
                out.value = r.value;
                current = r;
                step *= 1.5;
            }
            _ => step *= 0.5,
        }
    }
    out
}

/// Multi-start projected gradient ascent; deterministic for a given seed.
pub fn optimize(objective: &Objective, settings: &OptimizerSettings) -> Result<OptimizationReport> {
    if settings.budget < 1 || settings.multi_start < 1 {
        return Err(Error::Config("optimizer budget and multi_start must be >= 1".into()));
    }
    let clock = Instant::now();
    let template = &objective.template;
    let inner = match settings.fast_inner {
        Some((n, w)) if objective.scenario.is_some() => objective.reduced(n, w)?,
        _ => objective.clone(),
    };

    let mut starts = Vec::with_capacity(settings.multi_start);
    let resonance = ControlPulse::parametric_resonance(
        template.mode,
        template.t_f(),
        template.n_segments(),
        template.bound,
        settings.seed_amplitude,
    )?;
    starts.push(template.with_params(&resonance.params())?.params());
    for i in 1..settings.multi_start {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(i as u64);
        let b = template.bound;
        starts.push((0..template.n_params()).map(|_| if b > 0.0 { rng.random_range(-b..=b) } else { 0.0 }).collect());
    }
    let per_start = (settings.budget / settings.multi_start).max(1);
    let runs: Vec<Ascent> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| ascend(&inner, i, "inner", p, per_start, settings))
        .collect();

    let mut trace: Vec<TraceEntry> = runs.iter().flat_map(|r| r.trace.iter().cloned()).collect();
    let mut evaluations: usize = runs.iter().map(|r| r.evaluations).sum();
    let mut degenerate: usize = runs.iter().map(|r| r.degenerate).sum();

    // every start's best, re-evaluated on the full model
    let rescored: Vec<(usize, f64)> = runs
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let v = template
                .with_params(&r.params)
                .and_then(|p| evaluate_surrogate(objective, &p))
                .unwrap_or(f64::NEG_INFINITY);
            (i, v)
        })
        .collect();
    evaluations += rescored.len();
    let (best_start, _) = rescored
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

    let mut best_params = runs[best_start].params.clone();
    if settings.budget > 1 && settings.polish_budget > 0 {
        let polish = ascend(objective, best_start, "polish", best_params, settings.polish_budget, settings);
        trace.extend(polish.trace);
        evaluations += polish.evaluations;
        degenerate += polish.degenerate;
        best_params = polish.params;
    }
    let best_pulse = template.with_params(&best_params)?;

    let gradient_check = if settings.gradient_check {
        let probe = inner.template.with_params(&best_params)?;
        Some(finite_difference_check(&inner, &probe, 1e-5)?)
    } else {
        None
    };

    let final_result = objective.trajectory(&best_pulse, SampleSchedule::Uniform(settings.samples.max(1)), false)?;
    let last = final_result.final_reduced().as_matrix4()?;
    let sur = surrogate(&last)?;
    let final_neg_log_nu = crate::gaussian::neg_log_nu(final_result.final_reduced())?;
    let final_e_n = final_neg_log_nu.max(0.0);
    Ok(OptimizationReport {
        best_objective: sur.value - objective.lambda * best_pulse.roughness(),
        best_pulse,
        final_e_n,
        final_neg_log_nu,
        trace,
        gradient_check,
        final_result,
        evaluations,
        degenerate_points: degenerate,
        no_entanglement_found: !(final_e_n > 0.0),
        seed: settings.seed,
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

/// A pulse with the template's shape built from explicit u_A (and u_B) values.
pub fn pulse_like(template: &ControlPulse, values_a: Vec<f64>, values_b: Vec<f64>) -> Result<ControlPulse> {
    ControlPulse::with_edges(template.mode, template.bound, template.edges().to_vec(), values_a, values_b)
}

/// Default optimization template: `n_segments` equal segments over `[0, t_f]`.
pub fn template(mode: DriveMode, t_f: f64, n_segments: usize, bound: f64) -> Result<ControlPulse> {
    ControlPulse::zero(mode, t_f, n_segments, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::GridKind;
    use crate::gaussian::{self, sample};

    fn small(eta: f64, mode: DriveMode) -> Objective {
        let spec = BathSpec {
            eta,
            omega_c: 5.0,
            n_modes: 24,
            omega_max: 6.0,
            grid_kind: GridKind::Linear,
            ..BathSpec::default()
        };
        Objective::thermal(template(mode, 5.0, 6, 2.0).unwrap(), &spec, 1.0, 1e-3).unwrap()
    }

    #[test]
    fn surrogate_matches_eigen_path_and_its_gradient_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s = sample::random_physical_state(&mut rng, 2.0, 0.8);
            let m = s.as_matrix4().unwrap();
            let sur = surrogate(&m).unwrap();
            assert!((sur.value - gaussian::neg_log_nu(&s).unwrap()).abs() < 1e-9);
            let h = 1e-6;
            for i in 0..4 {
                for j in i..4 {
                    let mut e = Matrix4::zeros();
                    e[(i, j)] = h;
                    e[(j, i)] = h;
                    let fd = (surrogate(&(m + e)).unwrap().value - surrogate(&(m - e)).unwrap().value) / (2.0 * h);
                    let an = if i == j { sur.dsigma[(i, i)] } else { 2.0 * sur.dsigma[(i, j)] };
                    assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "({i},{j}) {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn zero_pulse_is_separable() {
        let obj = small(0.3, DriveMode::Symmetric);
        assert_eq!(evaluate(&obj, &obj.template).unwrap(), 0.0);
    }

    #[test]
    fn closed_symmetric_slice_is_flat() {
        let obj = small(0.0, DriveMode::Symmetric);
        let g = value_and_gradient(&obj, &obj.template).unwrap();
        assert!(g.degenerate);
        assert!(g.gradient.iter().all(|v| v.abs() < 1e-9), "{:?}", g.gradient);
        let p = pulse_like(&obj.template, vec![0.5, -1.0, 1.5, 0.2, -0.3, 1.0], vec![]).unwrap();
        assert!(evaluate(&obj, &p).unwrap() <= 0.0);
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mode in [DriveMode::Symmetric, DriveMode::SingleSite, DriveMode::Free] {
            let obj = small(0.3, mode);
            let p: Vec<f64> = (0..obj.template.n_params()).map(|_| rng.random_range(-1.5..1.5)).collect();
            let pulse = obj.template.with_params(&p).unwrap();
            let check = finite_difference_check(&obj, &pulse, 1e-5).unwrap();
            assert!(check.max_relative_error < 1e-6, "{mode:?}: {}", check.max_relative_error);
        }
    }

    #[test]
    fn roughness_gradient_enters_with_weight() {
        let mut obj = small(0.3, DriveMode::Symmetric);
        let p = pulse_like(&obj.template, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0], vec![]).unwrap();
        let g0 = gradient(&obj, &p).unwrap();
        obj.lambda = 1.0;
        let g1 = gradient(&obj, &p).unwrap();
        let diff: Vec<f64> = g0.iter().zip(&g1).map(|(a, b)| a - b).collect();
        let want = [-2.0, 4.0, -2.0, 0.0, 0.0, 0.0];
        for (d, w) in diff.iter().zip(want) {
            assert!((d - (1.0 - 1e-3) * w).abs() < 1e-9);
        }
    }

    #[test]
    fn ill_conditioned_pulses_are_infeasible_and_starts_shrink() {
        let spec = BathSpec {
            eta: 0.3,
            omega_c: 5.0,
            n_modes: 64,
            omega_max: 6.0,
            grid_kind: GridKind::Linear,
            ..BathSpec::default()
        };
        let obj = Objective::thermal(template(DriveMode::Symmetric, 20.0, 16, 4.0).unwrap(), &spec, 1.0, 0.0).unwrap();
        let strong = ControlPulse::parametric_resonance(DriveMode::Symmetric, 20.0, 16, 4.0, 4.0).unwrap();
        assert!(matches!(value_and_gradient(&obj, &strong), Err(Error::PropagationFailure { .. })));
        assert!(evaluate(&obj, &strong).is_err());

        let settings = OptimizerSettings {
            budget: 30,
            multi_start: 1,
            seed_amplitude: 4.0,
            fast_inner: None,
            polish_budget: 0,
            samples: 4,
            gradient_check: false,
            ..OptimizerSettings::default()
        };
        let r = optimize(&obj, &settings).unwrap();
        assert!(r.trace[0].objective.is_none() && r.trace[0].best.is_none());
        assert!(r.trace.iter().any(|t| t.objective.is_some()));
        let json = crate::io::to_json(&r).unwrap();
        let back: OptimizationReport = crate::io::from_json(&json).unwrap();
        assert_eq!(crate::io::to_json(&back).unwrap(), json);
        let m = r.final_result.final_reduced().as_matrix4().unwrap();
        let e = m.symmetric_eigenvalues();
        assert!(e.max() / e.min() <= MAX_CONDITION);
        assert!(r.final_e_n > 0.0);
    }

    #[test]
    fn unit_budget_keeps_seed_and_runs_are_deterministic() {
        let obj = small(0.3, DriveMode::Symmetric);
        let settings = OptimizerSettings {
            budget: 1,
            multi_start: 3,
            fast_inner: None,
            samples: 4,
            gradient_check: false,
            ..OptimizerSettings::default()
        };
        let r = optimize(&obj, &settings).unwrap();
        let seeds: Vec<f64> = r.trace.iter().map(|t| t.objective.unwrap()).collect();
        assert_eq!(seeds.len(), 3);
        let best = seeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((r.best_objective - best).abs() < 1e-9);

        let settings = OptimizerSettings {
            budget: 12,
            ..settings
        };
        let a = optimize(&obj, &settings).unwrap();
        let b = optimize(&obj, &settings).unwrap();
        assert_eq!(a.best_pulse, b.best_pulse);
        assert_eq!(a.trace, b.trace);
        assert!(a.best_objective >= r.best_objective - 1e-12);
        for start in 0..3 {
            let bests: Vec<f64> = a.trace.iter().filter(|t| t.start == start && t.stage == "inner").filter_map(|t| t.best).collect();
            assert!(bests.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
