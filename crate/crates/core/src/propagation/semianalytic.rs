//! Fundamental solutions of φ̈ + [1 + u(t)] φ = 0 and the antisymmetric mode.
//!
//! Under symmetric driving Q_- = (q_A − q_B)/√2 never touches the bath, so its
//! 2×2 covariance is carried exactly by S(t) = [[φ₁, φ₂], [φ̇₁, φ̇₂]].

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::kernel::Flow2;
use super::SampleSchedule;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::pulse::{ControlPulse, DriveMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSolutions {
    pub times: Vec<f64>,
    pub phi1: Vec<f64>,
    pub dphi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub dphi2: Vec<f64>,
}

impl FundamentalSolutions {
    /// Tabulates both solutions at `times` for the stiffness 1 + u_A(t).
    pub fn integrate(pulse: &ControlPulse, times: &[f64]) -> Self {
        let mut out = Self {
            times: times.to_vec(),
            phi1: Vec::with_capacity(times.len()),
            dphi1: Vec::with_capacity(times.len()),
            phi2: Vec::with_capacity(times.len()),
            dphi2: Vec::with_capacity(times.len()),
        };
        let edges = pulse.edges();
        let values = pulse.values_a();
        // state at the start of segment `seg`
        let mut seg = 0;
        let mut s = Matrix2::identity();
        for &t in times {
            while seg + 1 < values.len() && t >= edges[seg + 1] {
                s = flow(1.0 + values[seg], edges[seg + 1] - edges[seg]) * s;
                seg += 1;
            }
            let m = flow(1.0 + values[seg], t - edges[seg]) * s;
            out.phi1.push(m[(0, 0)]);
            out.dphi1.push(m[(1, 0)]);
            out.phi2.push(m[(0, 1)]);
            out.dphi2.push(m[(1, 1)]);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn propagator(&self, i: usize) -> Matrix2<f64> {
        Matrix2::new(self.phi1[i], self.phi2[i], self.dphi1[i], self.dphi2[i])
    }

    pub fn wronskian(&self, i: usize) -> f64 {
        self.phi1[i] * self.dphi2[i] - self.dphi1[i] * self.phi2[i]
    }
}

fn flow(k: f64, tau: f64) -> Matrix2<f64> {
    let f = Flow2::new(k, tau);
    Matrix2::new(f.c, f.s, -f.ks, f.c)
}

/// Q_- covariance trajectory σ_-(t) = S(t) σ_-(0) S(t)ᵀ for a symmetric pulse.
pub fn propagate_normal_mode_semianalytic(
    pulse: &ControlPulse,
    initial_minus: &CovarianceMatrix,
    samples: &SampleSchedule,
) -> Result<(Vec<CovarianceMatrix>, FundamentalSolutions)> {
    if pulse.mode != DriveMode::Symmetric {
        return Err(Error::Usage(
            "the semi-analytic backend needs a symmetric pulse".into(),
        ));
    }
    let s0 = initial_minus.as_matrix2()?;
    let times = samples.times(0.0, pulse.t_f())?;
    let fs = FundamentalSolutions::integrate(pulse, &times);
    let covs = (0..fs.len())
        .map(|i| {
            let s = fs.propagator(i);
            let m = s * s0 * s.transpose();
            CovarianceMatrix::from_matrix2(&(0.5 * (m + m.transpose())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((covs, fs))
}
