//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion.
//! With `ACCEPTANCE_STRICT=1` the process exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use entangle_core::analysis::{aligned_four_det_gamma, temperature_bound_check};
use entangle_core::bath::{discretize, thermal_initial_covariance, BathSpec};
use entangle_core::control::{self, optimize, template, Objective, OptimizationReport, OptimizerSettings};
use entangle_core::gaussian::{self, coth, sample, CovarianceMatrix};
use entangle_core::propagation::{self, continue_free, PropagateOptions, SampleSchedule};
use entangle_core::pulse::{ControlPulse, DriveMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T_F: f64 = 6.0 * PI;
const SEGMENTS: usize = 48;
const BOUND: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Largest E_N and the time it occurs, plus the largest E_N at t >= `after`.
fn peak(times: &[f64], e_n: &[f64], after: f64) -> (f64, f64, f64) {
    let (mut t_peak, mut max, mut late) = (0.0, 0.0f64, 0.0f64);
    for (&t, &e) in times.iter().zip(e_n) {
        if e > max {
            (t_peak, max) = (t, e);
        }
        if t >= after {
            late = late.max(e);
        }
    }
    (max, t_peak, late)
}

fn max_rel_diff(a: &CovarianceMatrix, b: &CovarianceMatrix) -> f64 {
    (a.entries() - b.entries()).amax() / a.entries().amax()
}

fn criterion_1() -> Outcome {
    let clock = Instant::now();
    let mut tmsv_err = 0.0f64;
    for r in [0.1, 0.5, 1.0, 2.0] {
        let e = gaussian::log_negativity(&CovarianceMatrix::two_mode_squeezed_vacuum(r)).unwrap();
        tmsv_err = tmsv_err.max((e - 2.0 * r).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut oracle_err = 0.0f64;
    for _ in 0..1000 {
        let s = sample::random_physical_state(&mut rng, 5.0, 1.0);
        let a = gaussian::min_pt_symplectic_eigenvalue(&s).unwrap();
        let b = gaussian::two_mode_nu_oracle(&s).unwrap();
        oracle_err = oracle_err.max((a - b).abs() / a.max(1.0));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        tmsv_err < 1e-9 && oracle_err < 1e-9 && secs < 10.0,
        format!("TMSV max |E_N - 2r| = {tmsv_err:.1e}, eigen vs oracle max rel = {oracle_err:.1e} over 1000 states, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    // recurrence guard for t = 200 needs spacing <= pi/200 on the linear part
    let spec = BathSpec {
        n_modes: 1560,
        ..BathSpec::default()
    };
    let horizon = 200.0;
    let bath = discretize(&spec, Some(horizon)).unwrap();
    let initial = thermal_initial_covariance(&bath, spec.beta);
    let pulse = ControlPulse::zero(DriveMode::Symmetric, horizon, 1, BOUND).unwrap();
    let opts = PropagateOptions {
        samples: SampleSchedule::Uniform(400),
        ..PropagateOptions::default()
    };
    let r = propagation::propagate(&initial, &pulse, &bath, &opts).unwrap();
    let e_n = r.log_negativity().unwrap();
    let (max_e, t_peak, late) = peak(&r.times, &e_n, 2.0);
    let tail: Vec<&CovarianceMatrix> = r.times.iter().zip(&r.reduced).filter(|(t, _)| **t >= 0.9 * horizon).map(|(_, s)| s).collect();
    let last = tail[tail.len() - 1];
    let drift = tail.iter().map(|s| max_rel_diff(last, s)).fold(0.0f64, f64::max);
    outcome(
        max_e == 0.0 && drift <= 0.01,
        format!(
            "{} modes, t = 200, {} samples: max E_N = {max_e:.4} at t = {t_peak} (max for t >= 2: {late:e}), drift over final 10% = {:.3}%",
            bath.n_modes(),
            r.times.len(),
            100.0 * drift
        ),
    )
}

fn criterion_3() -> Outcome {
    let spec = BathSpec::default();
    let pulse = ControlPulse::parametric_resonance(DriveMode::Symmetric, T_F, SEGMENTS, BOUND, 0.5).unwrap();
    let run = |spec: &BathSpec, dt: Option<f64>| {
        let bath = discretize(spec, Some(T_F)).unwrap();
        let initial = thermal_initial_covariance(&bath, spec.beta);
        let opts = PropagateOptions {
            dt,
            ..PropagateOptions::final_only()
        };
        propagation::propagate(&initial, &pulse, &bath, &opts).unwrap()
    };
    let base = run(&spec, None);
    let residual = base.diagnostics.symplectic_residual;
    let halved = run(&spec, Some(base.diagnostics.dt / 2.0));
    let e0 = gaussian::log_negativity(base.final_reduced()).unwrap();
    let step_change = (e0 - gaussian::log_negativity(halved.final_reduced()).unwrap()).abs();
    let refined_spec = BathSpec {
        n_modes: 2 * spec.n_modes,
        omega_max: 1.5 * spec.omega_max,
        ..spec.clone()
    };
    let refined = run(&refined_spec, None);
    let bath_change = max_rel_diff(base.final_reduced(), refined.final_reduced());
    outcome(
        residual <= 1e-7 && step_change < 1e-4 && bath_change < 0.01,
        format!(
            "resonance pulse (E_N = {e0:.4}): residual {residual:.1e}, step halving dE_N = {step_change:.1e}, \
             bath refinement change {:.3}%",
            100.0 * bath_change
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let modes = [DriveMode::Symmetric, DriveMode::SingleSite, DriveMode::Free];
    let objectives: Vec<Objective> = modes
        .iter()
        .map(|&m| {
            Objective::thermal(template(m, T_F, SEGMENTS, BOUND).unwrap(), &BathSpec::default(), 1.0, 1e-3)
                .and_then(|o| o.reduced(200, 20.0))
                .unwrap()
        })
        .collect();
    let mut worst = 0.0f64;
    let mut rejected = 0;
    let mut checked = 0;
    while checked < 20 {
        let obj = &objectives[checked % 3];
        let n = obj.template.n_params();
        let params: Vec<f64> = (0..n).map(|_| rng.random_range(-BOUND..=BOUND)).collect();
        let pulse = obj.template.with_params(&params).unwrap();
        if control::value_and_gradient(obj, &pulse).is_err() {
            rejected += 1;
            continue;
        }
        let check = control::finite_difference_check(obj, &pulse, 1e-5).unwrap();
        worst = worst.max(check.max_relative_error);
        checked += 1;
    }
    outcome(
        worst < 1e-4,
        format!("20 random feasible pulses (all three drive modes, 200-mode bath): max relative error {worst:.1e}; {rejected} draws rejected as infeasible"),
    )
}

fn optimize_at(mode: DriveMode, beta: f64) -> OptimizationReport {
    let obj = Objective::thermal(template(mode, T_F, SEGMENTS, BOUND).unwrap(), &BathSpec::default(), beta, 1e-3).unwrap();
    optimize(&obj, &OptimizerSettings::default()).unwrap()
}

fn criterion_5(symmetric: &OptimizationReport, single: &OptimizationReport) -> Outcome {
    let (s, o) = (symmetric.final_e_n, single.final_e_n);
    outcome(
        s >= 1.0 && o >= 0.5 && o <= s,
        format!(
            "symmetric E_N(t_f) = {s:.4} (>= 1.0: {}), single-site E_N(t_f) = {o:.4} (>= 0.5: {}, -ln nu = {:.4}), single <= symmetric: {}; {:.0} s + {:.0} s",
            s >= 1.0,
            o >= 0.5,
            single.final_neg_log_nu,
            o <= s,
            symmetric.wall_time_s,
            single.wall_time_s
        ),
    )
}

fn criterion_6() -> Outcome {
    let closed = BathSpec {
        eta: 0.0,
        ..BathSpec::default()
    };
    let bath = discretize(&closed, Some(T_F)).unwrap();
    let initial = thermal_initial_covariance(&bath, closed.beta);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pulses = vec![ControlPulse::parametric_resonance(DriveMode::Symmetric, T_F, SEGMENTS, BOUND, 0.5).unwrap()];
    for _ in 0..4 {
        let v: Vec<f64> = (0..SEGMENTS).map(|_| rng.random_range(-1.0..=1.0)).collect();
        pulses.push(ControlPulse::uniform(DriveMode::Symmetric, T_F, BOUND, v, Vec::new()).unwrap());
    }
    let opts = PropagateOptions::default();
    let mut closed_max = 0.0f64;
    for p in &pulses {
        let r = propagation::propagate(&initial, p, &bath, &opts).unwrap();
        closed_max = r.log_negativity().unwrap().into_iter().fold(closed_max, f64::max);
    }
    let spec = BathSpec::default();
    let bath = discretize(&spec, Some(T_F)).unwrap();
    let initial = thermal_initial_covariance(&bath, spec.beta);
    let zero = ControlPulse::zero(DriveMode::Symmetric, T_F, SEGMENTS, BOUND).unwrap();
    let undriven = propagation::propagate(&initial, &zero, &bath, &opts).unwrap();
    let (undriven_max, t_peak, late) = peak(&undriven.times, &undriven.log_negativity().unwrap(), 2.0);
    outcome(
        closed_max < 1e-9 && undriven_max == 0.0,
        format!(
            "eta = 0, 5 symmetric pulses: max E_N = {closed_max:.1e}; undriven at defaults: max E_N = {undriven_max:.4} at t = {t_peak:.2} \
             (max for t >= 2: {late:e})"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut mismatches = 0;
    let mut worst_crossing = 0.0f64;
    for beta in [0.1, 0.5, 1.0, 2.0, 10.0] {
        let threshold = 0.5 * coth(beta).acosh();
        for i in 0..=10 {
            let r = 0.2 * i as f64;
            let bound = temperature_bound_check(r, beta).unwrap();
            if (r - threshold).abs() > 1e-9 && bound.satisfied != (aligned_four_det_gamma(r, beta) < 0.0) {
                mismatches += 1;
            }
        }
        // zero crossing of the direct formula, by bisection
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if aligned_four_det_gamma(mid, beta) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst_crossing = worst_crossing.max((0.5 * (lo + hi) - threshold).abs());
    }
    outcome(
        mismatches == 0 && worst_crossing < 1e-9,
        format!("55 grid points: {mismatches} sign mismatches; max |crossing - threshold| = {worst_crossing:.1e}"),
    )
}

fn criterion_8(hot: &OptimizationReport) -> Outcome {
    let spec = BathSpec::default();
    let obj = Objective::thermal(template(DriveMode::Symmetric, T_F, SEGMENTS, BOUND).unwrap(), &spec, 0.1, 1e-3).unwrap();
    let traj = obj.trajectory(&hot.best_pulse, SampleSchedule::FinalOnly, true).unwrap();
    let opts = PropagateOptions {
        samples: SampleSchedule::Uniform(200),
        ..PropagateOptions::default()
    };
    let cont = continue_free(&traj, &obj.bath, 2.0 * PI, &opts).unwrap();
    let after: Vec<f64> = cont
        .times
        .iter()
        .zip(cont.log_negativity().unwrap())
        .filter(|(t, _)| **t >= T_F - 1e-12)
        .map(|(_, e)| e)
        .collect();
    let min = after.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        min > 0.0 && !after.is_empty(),
        format!("beta = 0.1, E_N(t_f) = {:.4}: min E_N over [t_f, t_f + 2pi] = {min:.4} ({} samples)", hot.final_e_n, after.len()),
    )
}

fn criterion_9(best: &[(f64, f64)]) -> Outcome {
    let ok = best.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1);
    let list: Vec<String> = best.iter().map(|(b, e)| format!("beta {b}: {e:.4}")).collect();
    outcome(ok, format!("best E_N {}", list.join(", ")))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!("[{}] criterion {n} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "gaussian-core oracles", criterion_1());
    report(2, "separability of equilibrium", criterion_2());
    report(3, "numerical hygiene", criterion_3());
    report(4, "gradient correctness", criterion_4());

    let symmetric = optimize_at(DriveMode::Symmetric, 1.0);
    let single = optimize_at(DriveMode::SingleSite, 1.0);
    report(5, "entanglement generation", criterion_5(&symmetric, &single));
    report(6, "mechanism checks", criterion_6());
    report(7, "temperature bound", criterion_7());

    let warm = optimize_at(DriveMode::Symmetric, 0.5);
    let hot = optimize_at(DriveMode::Symmetric, 0.1);
    report(8, "persistence after switch-off", criterion_8(&hot));
    report(
        9,
        "temperature trend",
        criterion_9(&[(1.0, symmetric.final_e_n), (0.5, warm.final_e_n), (0.1, hot.final_e_n)]),
    );

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
