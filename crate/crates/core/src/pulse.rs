//! Piecewise-constant local drive pulses u_A(t), u_B(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMode {
    /// u_B ≡ u_A.
    Symmetric,
    /// u_B ≡ 0.
    SingleSite,
    Free,
}

impl std::str::FromStr for DriveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(DriveMode::Symmetric),
            "single_site" | "single-site" => Ok(DriveMode::SingleSite),
            "free" => Ok(DriveMode::Free),
            other => Err(Error::Config(format!(
                "unknown drive mode {other:?} (expected symmetric, single_site or free)"
            ))),
        }
    }
}

/// Drive amplitudes on consecutive segments `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    pub mode: DriveMode,
    pub bound: f64,
    edges: Vec<f64>,
    values_a: Vec<f64>,
    values_b: Vec<f64>,
}

impl ControlPulse {
    pub fn zero(mode: DriveMode, t_f: f64, n_segments: usize, bound: f64) -> Result<Self> {
        Self::uniform(mode, t_f, bound, vec![0.0; n_segments], vec![0.0; n_segments])
    }

    /// Equal-length segments over `[0, t_f]`. `values_b` is ignored unless the mode is free.
    pub fn uniform(mode: DriveMode, t_f: f64, bound: f64, values_a: Vec<f64>, values_b: Vec<f64>) -> Result<Self> {
        let n = values_a.len();
        if n == 0 {
            return Err(Error::Config("pulse needs at least one segment".into()));
        }
        let edges = (0..=n).map(|i| t_f * i as f64 / n as f64).collect();
        Self::with_edges(mode, bound, edges, values_a, values_b)
    }

    pub fn with_edges(
        mode: DriveMode,
        bound: f64,
        edges: Vec<f64>,
        values_a: Vec<f64>,
        values_b: Vec<f64>,
    ) -> Result<Self> {
        let n = values_a.len();
        if n == 0 || edges.len() != n + 1 {
            return Err(Error::Config(format!(
                "pulse with {n} segments needs {} edges, got {}",
                n + 1,
                edges.len()
            )));
        }
        if edges[0] != 0.0 || !edges.windows(2).all(|w| w[1] > w[0]) || !edges[n].is_finite() {
            return Err(Error::Config("pulse edges must start at 0 and increase strictly".into()));
        }
        if !(bound >= 0.0) {
            return Err(Error::Config("pulse bound must be >= 0".into()));
        }
        let values_b = match mode {
            DriveMode::Symmetric => values_a.clone(),
            DriveMode::SingleSite => vec![0.0; n],
            DriveMode::Free => {
                if values_b.len() != n {
                    return Err(Error::Config(format!(
                        "free pulse needs {n} u_B values, got {}",
                        values_b.len()
                    )));
                }
                values_b
            }
        };
        for (i, v) in values_a.iter().chain(&values_b).enumerate() {
            if !v.is_finite() || v.abs() > bound * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "pulse value #{i} = {v} exceeds bound {bound}"
                )));
            }
        }
        Ok(Self {
            mode,
            bound,
            edges,
            values_a,
            values_b,
        })
    }

    /// Square wave at the parametric resonance of the unit oscillator: the
    /// stiffness alternates between 1 + a and 1 − a with period π.
    pub fn parametric_resonance(mode: DriveMode, t_f: f64, n_segments: usize, bound: f64, amplitude: f64) -> Result<Self> {
        let a = amplitude.min(bound);
        let values: Vec<f64> = (0..n_segments)
            .map(|i| {
                let mid = t_f * (i as f64 + 0.5) / n_segments as f64;
                if (2.0 * mid).cos() >= 0.0 {
                    a
                } else {
                    -a
                }
            })
            .collect();
        let values_b = if mode == DriveMode::Free { values.clone() } else { Vec::new() };
        Self::uniform(mode, t_f, bound, values, values_b)
    }

    pub fn t_f(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn n_segments(&self) -> usize {
        self.values_a.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values_a(&self) -> &[f64] {
        &self.values_a
    }

    pub fn values_b(&self) -> &[f64] {
        &self.values_b
    }

    pub fn segment(&self, i: usize) -> (f64, f64, f64, f64) {
        (self.edges[i], self.edges[i + 1], self.values_a[i], self.values_b[i])
    }

    /// Amplitudes in force at time `t` (segments are closed on the left).
    pub fn amplitudes_at(&self, t: f64) -> (f64, f64) {
        let i = match self.edges[1..].iter().position(|&e| t < e) {
            Some(i) => i,
            None => self.n_segments() - 1,
        };
        (self.values_a[i], self.values_b[i])
    }

    /// Number of free optimization parameters.
    pub fn n_params(&self) -> usize {
        match self.mode {
            DriveMode::Free => 2 * self.n_segments(),
            _ => self.n_segments(),
        }
    }

    /// Free parameters: u_A values, followed by u_B values in free mode.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.values_a.clone();
        if self.mode == DriveMode::Free {
            p.extend_from_slice(&self.values_b);
        }
        p
    }

    /// Same template with new parameters, clipped into the bounds.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.n_params() {
            return Err(Error::shape(
                format!("{} parameters", self.n_params()),
                format!("{}", params.len()),
            ));
        }
        let clip = |v: f64| v.clamp(-self.bound, self.bound);
        let n = self.n_segments();
        let a: Vec<f64> = params[..n].iter().map(|&v| clip(v)).collect();
        let b: Vec<f64> = if self.mode == DriveMode::Free {
            params[n..].iter().map(|&v| clip(v)).collect()
        } else {
            Vec::new()
        };
        Self::with_edges(self.mode, self.bound, self.edges.clone(), a, b)
    }

    /// Appends an undriven segment of length `extra`.
    pub fn extended_with_zeros(&self, extra: f64) -> Result<Self> {
        if !(extra > 0.0) {
            return Ok(self.clone());
        }
        let mut edges = self.edges.clone();
        edges.push(self.t_f() + extra);
        let mut a = self.values_a.clone();
        a.push(0.0);
        let mut b = self.values_b.clone();
        b.push(0.0);
        Self::with_edges(self.mode, self.bound, edges, a, b)
    }

    /// Σ_i (u_{i+1} − u_i)² over every free parameter channel.
    pub fn roughness(&self) -> f64 {
        let rough = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
        match self.mode {
            DriveMode::Free => rough(&self.values_a) + rough(&self.values_b),
            _ => rough(&self.values_a),
        }
    }

    /// Gradient of [`Self::roughness`] with respect to [`Self::params`].
    pub fn roughness_gradient(&self) -> Vec<f64> {
        fn channel(v: &[f64], out: &mut Vec<f64>) {
            let n = v.len();
            for i in 0..n {
                let mut g = 0.0;
                if i > 0 {
                    g += 2.0 * (v[i] - v[i - 1]);
                }
                if i + 1 < n {
                    g -= 2.0 * (v[i + 1] - v[i]);
                }
                out.push(g);
            }
        }
        let mut g = Vec::with_capacity(self.n_params());
        channel(&self.values_a, &mut g);
        if self.mode == DriveMode::Free {
            channel(&self.values_b, &mut g);
        }
        g
    }

    /// Pulse with the roles of A and B exchanged (free mode only changes).
    pub fn swapped(&self) -> Self {
        Self {
            mode: if self.mode == DriveMode::SingleSite { DriveMode::Free } else { self.mode },
            values_a: self.values_b.clone(),
            values_b: self.values_a.clone(),
            ..self.clone()
        }
    }
}
