//! Ohmic reservoir with algebraic cutoff, realized as explicit harmonic modes.
//!
//! A continuum spectral density J(ω) is replaced by N oscillators with
//! frequencies ω_k and couplings c_k such that π c_k²/(2 m_k ω_k) = J(ω_k) Δω_k.
//! The counterterm stiffness is summed from the same discrete modes, so the
//! discrete model has no static frequency shift.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{coth, CovarianceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Linear,
    /// Linear up to `linear_cutoff`, logarithmic above.
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub eta: f64,
    pub omega_c: f64,
    pub beta: f64,
    pub n_modes: usize,
    pub omega_max: f64,
    pub grid_kind: GridKind,
    /// Upper edge of the linear part of a composite grid.
    pub linear_cutoff: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self {
            eta: 0.1,
            omega_c: 50.0,
            beta: 1.0,
            n_modes: 1200,
            omega_max: 200.0,
            grid_kind: GridKind::Composite,
            linear_cutoff: 20.0,
        }
    }
}

impl BathSpec {
    /// The reduced bath used by the optimizer's fast inner loop.
    pub fn reduced(&self, n_modes: usize, omega_max: f64) -> Self {
        Self {
            n_modes,
            omega_max,
            grid_kind: GridKind::Linear,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("bath: {what}")));
        if !(self.eta >= 0.0) {
            return bad("eta must be >= 0");
        }
        if !(self.omega_c > 0.0) {
            return bad("omega_c must be > 0");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be > 0");
        }
        if self.n_modes < 1 {
            return bad("n_modes must be >= 1");
        }
        if !(self.omega_max > 0.0) {
            return bad("omega_max must be > 0");
        }
        if self.grid_kind == GridKind::Composite && !(self.linear_cutoff > 0.0) {
            return bad("linear_cutoff must be > 0");
        }
        Ok(())
    }
}

/// J(ω) = η ω / (1 + ω²/ω_c²)².
pub fn spectral_density(spec: &BathSpec, omega: f64) -> f64 {
    let x = omega / spec.omega_c;
    spec.eta * omega / (1.0 + x * x).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub masses: Vec<f64>,
    /// Cell widths Δω_k used for the couplings.
    pub spacings: Vec<f64>,
    /// μ = Σ c_k² / (2 m_k ω_k²).
    pub counterterm_sum: f64,
}

impl DiscretizedBath {
    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    /// Phase-space dimension of system plus bath.
    pub fn total_dim(&self) -> usize {
        4 + 2 * self.n_modes()
    }

    pub fn omega_max(&self) -> f64 {
        self.omegas.last().copied().unwrap_or(0.0)
    }

    /// 2π / min Δω: the discrete bath revives after this time.
    pub fn recurrence_time(&self) -> f64 {
        let min = self.spacings.iter().copied().fold(f64::INFINITY, f64::min);
        2.0 * std::f64::consts::PI / min
    }

    pub fn is_coupled(&self) -> bool {
        self.couplings.iter().any(|&c| c != 0.0)
    }

    /// Errors when `horizon` exceeds half the recurrence time.
    pub fn check_horizon(&self, horizon: f64) -> Result<()> {
        let rec = self.recurrence_time();
        if rec < 2.0 * horizon {
            return Err(Error::Config(format!(
                "bath recurrence time {rec:.3} is shorter than twice the simulated time {horizon:.3}; \
                 increase n_modes or lower omega_max so that the smallest spacing is at most {:.5}",
                std::f64::consts::PI / horizon
            )));
        }
        Ok(())
    }

    /// Same modes with the counterterm removed (diagnostic only).
    pub fn without_counterterm(&self) -> Self {
        Self {
            counterterm_sum: 0.0,
            ..self.clone()
        }
    }

    /// Uncoupled bath with the same frequencies.
    pub fn decoupled(&self) -> Self {
        Self {
            couplings: vec![0.0; self.n_modes()],
            counterterm_sum: 0.0,
            ..self.clone()
        }
    }
}

fn grid(spec: &BathSpec) -> (Vec<f64>, Vec<f64>) {
    let n = spec.n_modes;
    let linear = |n: usize, lo: f64, hi: f64, omegas: &mut Vec<f64>, widths: &mut Vec<f64>| {
        let d = (hi - lo) / n as f64;
        for k in 1..=n {
            omegas.push(lo + d * k as f64);
            widths.push(d);
        }
    };
    let mut omegas = Vec::with_capacity(n);
    let mut widths = Vec::with_capacity(n);
    let composite = spec.grid_kind == GridKind::Composite && spec.omega_max > spec.linear_cutoff && n >= 2;
    if !composite {
        linear(n, 0.0, spec.omega_max, &mut omegas, &mut widths);
        return (omegas, widths);
    }
    let n_log = ((n as f64 / 6.0).round() as usize).clamp(1, n - 1);
    let n_lin = n - n_log;
    linear(n_lin, 0.0, spec.linear_cutoff, &mut omegas, &mut widths);
    let ratio = spec.omega_max / spec.linear_cutoff;
    let mut prev = spec.linear_cutoff;
    for j in 1..=n_log {
        let w = if j == n_log {
            spec.omega_max
        } else {
            spec.linear_cutoff * ratio.powf(j as f64 / n_log as f64)
        };
        omegas.push(w);
        widths.push(w - prev);
        prev = w;
    }
    (omegas, widths)
}

/// Discretizes the spectral density; with `horizon` set, also enforces the
/// recurrence guard for runs of that total duration.
pub fn discretize(spec: &BathSpec, horizon: Option<f64>) -> Result<DiscretizedBath> {
    spec.validate()?;
    let (omegas, spacings) = grid(spec);
    let masses = vec![1.0; omegas.len()];
    let couplings: Vec<f64> = omegas
        .iter()
        .zip(&spacings)
        .zip(&masses)
        .map(|((&w, &dw), &m)| (2.0 / std::f64::consts::PI * m * w * spectral_density(spec, w) * dw).sqrt())
        .collect();
    let counterterm_sum = couplings
        .iter()
        .zip(&omegas)
        .zip(&masses)
        .map(|((&c, &w), &m)| c * c / (2.0 * m * w * w))
        .sum();
    let bath = DiscretizedBath {
        omegas,
        couplings,
        masses,
        spacings,
        counterterm_sum,
    };
    if let Some(h) = horizon {
        bath.check_horizon(h)?;
    }
    Ok(bath)
}

/// Factorized initial state: both system oscillators in their ground state,
/// every bath mode thermal at inverse temperature `beta`.
pub fn thermal_initial_covariance(bath: &DiscretizedBath, beta: f64) -> CovarianceMatrix {
    let dim = bath.total_dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..4 {
        m[(i, i)] = 0.5;
    }
    for (k, (&w, &mass)) in bath.omegas.iter().zip(&bath.masses).enumerate() {
        let c = coth(0.5 * beta * w);
        let i = 4 + 2 * k;
        m[(i, i)] = c / (2.0 * mass * w);
        m[(i + 1, i + 1)] = mass * w * c / 2.0;
    }
    CovarianceMatrix::new(m).expect("diagonal covariance is symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> BathSpec {
        BathSpec::default()
    }

    /// Composite Simpson rule, independent of the bath grid.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn spectral_density_examples() {
        let s = spec();
        assert_eq!(spectral_density(&s, 0.0), 0.0);
        let expected = 0.1 / (1.0f64 + 1.0 / 2500.0).powi(2);
        assert!((spectral_density(&s, 1.0) - expected).abs() < 1e-15);
        assert!((spectral_density(&s, 1.0) - 0.0999200).abs() < 1e-7);
        assert!((spectral_density(&s, 50.0) - 1.25).abs() < 1e-14);
    }

    #[test]
    fn single_mode_coupling() {
        let s = BathSpec {
            n_modes: 1,
            omega_max: 1.0,
            grid_kind: GridKind::Linear,
            ..spec()
        };
        let b = discretize(&s, None).unwrap();
        assert_eq!(b.omegas, vec![1.0]);
        let c2 = b.couplings[0].powi(2);
        assert!((c2 - 2.0 / std::f64::consts::PI * spectral_density(&s, 1.0)).abs() < 1e-15);
        assert!((c2 - 0.063611).abs() < 1e-6);
    }

    #[test]
    fn counterterm_matches_quadrature() {
        let s = BathSpec {
            n_modes: 2000,
            omega_max: 200.0,
            grid_kind: GridKind::Linear,
            ..spec()
        };
        let b = discretize(&s, None).unwrap();
        // J(ω)/ω with the ω = 0 limit taken analytically
        let j_over_w = |w: f64| s.eta / (1.0 + (w / s.omega_c).powi(2)).powi(2);
        let quad = simpson(j_over_w, 0.0, 200.0, 20000) / std::f64::consts::PI;
        assert!((b.counterterm_sum - quad).abs() / quad < 0.01, "{} vs {quad}", b.counterterm_sum);
        // and the whole-line value η ω_c / 4 is approached from below
        assert!(b.counterterm_sum < 1.25 && b.counterterm_sum > 1.1);
    }

    #[test]
    fn composite_counterterm_is_refinement_stable() {
        let a = discretize(&spec(), None).unwrap();
        let b = discretize(&BathSpec { n_modes: 2400, ..spec() }, None).unwrap();
        assert!((a.counterterm_sum - b.counterterm_sum).abs() / a.counterterm_sum < 0.005);
    }

    #[test]
    fn composite_grid_shape() {
        let b = discretize(&spec(), None).unwrap();
        assert_eq!(b.n_modes(), 1200);
        assert!(b.omegas.windows(2).all(|w| w[1] > w[0]));
        assert!((b.omegas[999] - 20.0).abs() < 1e-12);
        assert!((b.omega_max() - 200.0).abs() < 1e-12);
        assert!((b.spacings[0] - 0.02).abs() < 1e-15);
        assert!(b.couplings.iter().all(|&c| c >= 0.0));
        assert!(b.masses.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn recurrence_guard() {
        // Δω = 0.02 → recurrence 100π ≈ 314
        assert!(discretize(&spec(), Some(150.0)).is_ok());
        let err = discretize(&spec(), Some(200.0)).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("recurrence")));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(discretize(&BathSpec { eta: -1.0, ..spec() }, None).is_err());
        assert!(discretize(&BathSpec { beta: 0.0, ..spec() }, None).is_err());
        assert!(discretize(&BathSpec { n_modes: 0, ..spec() }, None).is_err());
        assert!(discretize(&BathSpec { omega_c: f64::NAN, ..spec() }, None).is_err());
    }

    #[test]
    fn thermal_initial_state() {
        let s = BathSpec {
            n_modes: 1,
            omega_max: 1.0,
            grid_kind: GridKind::Linear,
            ..spec()
        };
        let b = discretize(&s, None).unwrap();
        let sigma = thermal_initial_covariance(&b, 1.0);
        let m = sigma.entries();
        assert_eq!(sigma.dim(), 6);
        assert!((m[(4, 4)] - 1.0819767068693265).abs() < 1e-12);
        assert!((m[(5, 5)] - 1.0819767068693265).abs() < 1e-12);
        for i in 0..4 {
            assert_eq!(m[(i, i)], 0.5);
            for j in 4..6 {
                assert_eq!(m[(i, j)], 0.0);
            }
        }
        let cold = thermal_initial_covariance(&discretize(&spec(), None).unwrap(), 1e6);
        let b = discretize(&spec(), None).unwrap();
        for (k, &w) in b.omegas.iter().enumerate().step_by(97) {
            let i = 4 + 2 * k;
            assert!((cold.entries()[(i, i)] - 0.5 / w).abs() < 1e-14 / w);
            assert!((cold.entries()[(i + 1, i + 1)] - 0.5 * w).abs() < 1e-12 * w);
        }
    }
}
