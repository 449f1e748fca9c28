//! Normal modes, squeezing parameters, the det γ decomposition, the
//! temperature bound and the EPR / semi-EPR labels.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, coth, CovarianceMatrix};

/// Orthogonal symplectic map (q_A, p_A, q_B, p_B) → (Q_+, P_+, Q_-, P_-).
pub fn normal_mode_transform() -> Matrix4<f64> {
    let r = FRAC_1_SQRT_2;
    Matrix4::new(
        r, 0.0, r, 0.0, //
        0.0, r, 0.0, r, //
        r, 0.0, -r, 0.0, //
        0.0, r, 0.0, -r,
    )
}

/// Covariance in the (Q_+, P_+, Q_-, P_-) basis together with the map used.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeState {
    pub sigma: CovarianceMatrix,
    pub transform: Matrix4<f64>,
}

impl NormalModeState {
    pub fn plus(&self) -> Matrix2<f64> {
        self.sigma.block(0, 0)
    }

    pub fn minus(&self) -> Matrix2<f64> {
        self.sigma.block(1, 1)
    }

    /// Max-norm of the ± cross block.
    pub fn cross_block_norm(&self) -> f64 {
        self.sigma.block(0, 1).amax()
    }

    /// Back to the local (q_A, p_A, q_B, p_B) basis.
    pub fn to_local(&self) -> CovarianceMatrix {
        let t = self.transform;
        let m = t.transpose() * self.sigma.as_matrix4().expect("4x4") * t;
        CovarianceMatrix::from_matrix4(&m)
    }
}

pub fn to_normal_modes(sigma: &CovarianceMatrix) -> Result<NormalModeState> {
    let m = sigma.as_matrix4()?;
    let t = normal_mode_transform();
    Ok(NormalModeState {
        sigma: CovarianceMatrix::from_matrix4(&(t * m * t.transpose())),
        transform: t,
    })
}

/// σ = (a/2) R(φ) diag(e^{2r}, e^{−2r}) R(φ)ᵀ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingParams {
    pub r: f64,
    /// Direction of the stretched axis, in [0, π).
    pub phi: f64,
    pub a: f64,
}

impl SqueezingParams {
    pub fn reconstruct(&self) -> Matrix2<f64> {
        let (s, c) = self.phi.sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        let d = Matrix2::new((2.0 * self.r).exp(), 0.0, 0.0, (-2.0 * self.r).exp());
        rot * d * rot.transpose() * (self.a / 2.0)
    }

    /// Signed form with the angle folded into [0, π/2): a mode stretched along
    /// φ + π/2 is written as squeezed (negative r) along φ.
    pub fn signed(&self) -> (f64, f64) {
        if self.phi >= FRAC_PI_2 {
            (-self.r, self.phi - FRAC_PI_2)
        } else {
            (self.r, self.phi)
        }
    }
}

pub fn squeezing_decomposition(sigma_mode: &CovarianceMatrix) -> Result<SqueezingParams> {
    squeezing_of(&sigma_mode.as_matrix2()?)
}

pub fn squeezing_of(m: &Matrix2<f64>) -> Result<SqueezingParams> {
    let det = m.determinant();
    if !(det > 0.0) || !(m[(0, 0)] > 0.0) {
        return Err(Error::InvalidState(format!("single-mode covariance not positive definite (det {det:e})")));
    }
    let root = det.sqrt();
    let (x, y, z) = (m[(0, 0)], m[(1, 1)], 0.5 * (m[(0, 1)] + m[(1, 0)]));
    let ratio = ((x + y) / (2.0 * root)).max(1.0);
    let r = 0.5 * ratio.acosh();
    let phi = if r < 1e-12 {
        0.0
    } else {
        (0.5 * (2.0 * z).atan2(x - y)).rem_euclid(PI)
    };
    Ok(SqueezingParams {
        r,
        phi: if phi >= PI { 0.0 } else { phi },
        a: 2.0 * root,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetGammaDecomposition {
    /// ⟨Q_+²⟩ − ⟨Q_-²⟩.
    pub delta_q: f64,
    /// ⟨P_+²⟩ − ⟨P_-²⟩.
    pub delta_p: f64,
    /// ⟨Q_+P_+⟩ − ⟨Q_-P_-⟩.
    pub cross: f64,
    pub four_det_gamma: f64,
    pub cross_block_norm: f64,
    /// Whether the ± cross block vanishes, so `four_det_gamma` equals 4 det γ.
    pub identity_holds: bool,
}

/// Cross-block norm below which the ± modes count as uncorrelated.
pub const CROSS_BLOCK_TOLERANCE: f64 = 1e-9;

pub fn det_gamma_decomposition(nm: &NormalModeState) -> DetGammaDecomposition {
    let (p, m) = (nm.plus(), nm.minus());
    let delta_q = p[(0, 0)] - m[(0, 0)];
    let delta_p = p[(1, 1)] - m[(1, 1)];
    let cross = p[(0, 1)] - m[(0, 1)];
    let norm = nm.cross_block_norm();
    DetGammaDecomposition {
        delta_q,
        delta_p,
        cross,
        four_det_gamma: delta_p * delta_q - cross * cross,
        cross_block_norm: norm,
        identity_holds: norm < CROSS_BLOCK_TOLERANCE,
    }
}

/// 4 det γ for a thermal Q_+ (variance coth(β/2)/2) and a Q_- squeezed vacuum
/// stretched along Q_- by r: (c² + 1 − 2c cosh 2r)/4 with c = coth(β/2).
pub fn aligned_four_det_gamma(r_minus: f64, beta: f64) -> f64 {
    let c = coth(0.5 * beta);
    (c * c + 1.0 - 2.0 * c * (2.0 * r_minus).cosh()) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureBound {
    pub satisfied: bool,
    /// cosh 2r_- − coth β.
    pub margin: f64,
    /// ½ arccosh(coth β): the smallest |r_-| that satisfies the bound.
    pub threshold: f64,
}

/// cosh 2r_- > coth β. With c = coth(β/2), (c² + 1)/2c = coth β, so this is
/// exactly the sign condition of [`aligned_four_det_gamma`].
pub fn temperature_bound_check(r_minus: f64, beta: f64) -> Result<TemperatureBound> {
    if !(beta > 0.0) {
        return Err(Error::Config(format!("beta must be > 0, got {beta}")));
    }
    let cb = coth(beta);
    let margin = (2.0 * r_minus).cosh() - cb;
    Ok(TemperatureBound {
        satisfied: margin > 0.0,
        margin,
        threshold: 0.5 * cb.acosh(),
    })
}

/// m ≈ e^{E_N}/2 effectively entangled states.
pub fn mode_count_estimate(e_n: f64) -> f64 {
    e_n.exp() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    /// EPR: |r_- + r_+| below this (signed squeezing).
    pub epr_balance: f64,
    /// EPR: both |r_±| at least this.
    pub epr_min_squeezing: f64,
    /// EPR: |a_± − 1| and the angle mismatch below this.
    pub epr_purity: f64,
    /// Semi-EPR: |r_-| at least this.
    pub semi_min_minus: f64,
    /// Semi-EPR: |r_+| below this.
    pub semi_max_plus: f64,
    /// Semi-EPR: relative max-norm distance of the + marginal from a thermal state.
    pub semi_thermal: f64,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        Self {
            epr_balance: 0.05,
            epr_min_squeezing: 0.05,
            epr_purity: 0.05,
            semi_min_minus: 0.2,
            semi_max_plus: 0.1,
            semi_thermal: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EprLabel {
    Epr,
    SemiEpr,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiEprReport {
    /// Signed squeezing parameters and folded angles, see [`SqueezingParams::signed`].
    pub r_plus: f64,
    pub r_minus: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    /// Relative max-norm distance of the + marginal from the nearest thermal state.
    pub plus_thermal_distance: f64,
    pub label: EprLabel,
    pub cross_block_norm: f64,
    /// Full normal-mode covariance, attached when the ± modes are correlated.
    pub normal_mode_sigma: Option<CovarianceMatrix>,
}

fn thermal_distance(m: &Matrix2<f64>) -> f64 {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let dist = (0.5 * (m[(0, 0)] - m[(1, 1)])).abs().max(m[(0, 1)].abs());
    dist / mean
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d)
}

pub fn semi_epr_report(nm: &NormalModeState, th: &LabelThresholds) -> Result<SemiEprReport> {
    let plus = squeezing_of(&nm.plus())?;
    let minus = squeezing_of(&nm.minus())?;
    let (rp, pp) = plus.signed();
    let (rm, pm) = minus.signed();
    let dist = thermal_distance(&nm.plus());
    let epr = (rm + rp).abs() < th.epr_balance
        && rp.abs() >= th.epr_min_squeezing
        && rm.abs() >= th.epr_min_squeezing
        && angle_gap(pp, pm) < th.epr_purity
        && (plus.a - 1.0).abs() < th.epr_purity
        && (minus.a - 1.0).abs() < th.epr_purity;
    let semi = rm.abs() >= th.semi_min_minus && rp.abs() < th.semi_max_plus && dist <= th.semi_thermal;
    let label = if epr {
        EprLabel::Epr
    } else if semi {
        EprLabel::SemiEpr
    } else {
        EprLabel::Neither
    };
    let norm = nm.cross_block_norm();
    Ok(SemiEprReport {
        r_plus: rp,
        r_minus: rm,
        phi_plus: pp,
        phi_minus: pm,
        a_plus: plus.a,
        a_minus: minus.a,
        plus_thermal_distance: dist,
        label,
        cross_block_norm: norm,
        normal_mode_sigma: (norm >= CROSS_BLOCK_TOLERANCE).then(|| nm.sigma.clone()),
    })
}

/// Everything the `analyze` command reports for one two-mode state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub e_n: f64,
    pub neg_log_nu: f64,
    pub det_gamma: f64,
    pub mode_count: f64,
    pub semi_epr: SemiEprReport,
    pub decomposition: DetGammaDecomposition,
    pub temperature_bound: TemperatureBound,
}

pub fn analyze_state(sigma: &CovarianceMatrix, beta: f64, th: &LabelThresholds) -> Result<StateReport> {
    let nm = to_normal_modes(sigma)?;
    let semi = semi_epr_report(&nm, th)?;
    let neg_log_nu = gaussian::neg_log_nu(sigma)?;
    let e_n = neg_log_nu.max(0.0);
    Ok(StateReport {
        e_n,
        neg_log_nu,
        det_gamma: gaussian::det_gamma(sigma)?,
        mode_count: mode_count_estimate(e_n),
        temperature_bound: temperature_bound_check(semi.r_minus.abs(), beta)?,
        semi_epr: semi,
        decomposition: det_gamma_decomposition(&nm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transform_is_orthogonal_and_symplectic() {
        let t = normal_mode_transform();
        assert!((t * t.transpose() - Matrix4::identity()).amax() < 1e-15);
        let om = Matrix4::new(0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0);
        assert!((t * om * t.transpose() - om).amax() < 1e-15);
    }

    #[test]
    fn normal_modes_round_trip_and_vacuum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample::random_physical_state(&mut rng, 2.0, 1.0);
        let back = to_normal_modes(&s).unwrap().to_local();
        assert!((back.entries() - s.entries()).amax() < 1e-12);
        let v = to_normal_modes(&CovarianceMatrix::vacuum(2)).unwrap();
        assert!((v.sigma.entries() - CovarianceMatrix::vacuum(2).entries()).amax() < 1e-15);
    }

    #[test]
    fn tmsv_is_product_of_opposite_squeezers() {
        let r = 0.7;
        let nm = to_normal_modes(&CovarianceMatrix::two_mode_squeezed_vacuum(r)).unwrap();
        assert!(nm.cross_block_norm() < 1e-15);
        let (rp, _) = squeezing_of(&nm.plus()).unwrap().signed();
        let (rm, _) = squeezing_of(&nm.minus()).unwrap().signed();
        assert!(close(rp, r, 1e-12) && close(rm, -r, 1e-12));
        let d = det_gamma_decomposition(&nm);
        assert!(close(d.four_det_gamma, -(2.0 * r).sinh().powi(2), 1e-12));
        assert!(d.identity_holds);
    }

    #[test]
    fn squeezing_examples() {
        let v = squeezing_of(&Matrix2::new(0.5, 0.0, 0.0, 0.5)).unwrap();
        assert_eq!((v.r, v.phi), (0.0, 0.0));
        assert!(close(v.a, 1.0, 1e-15));
        let c = coth(0.5);
        let t = squeezing_of(&Matrix2::new(c / 2.0, 0.0, 0.0, c / 2.0)).unwrap();
        assert!(close(t.a, 2.163953413738653, 1e-12) && t.r == 0.0);
        let e = 1f64.exp().powi(2);
        let s = squeezing_of(&Matrix2::new(e / 2.0, 0.0, 0.0, 1.0 / (2.0 * e))).unwrap();
        assert!(close(s.r, 1.0, 1e-12) && close(s.a, 1.0, 1e-12) && s.phi == 0.0);
    }

    #[test]
    fn degenerate_marginals_give_zero() {
        let m = Matrix2::new(0.8, 0.1, 0.1, 0.6);
        let mut s = Matrix4::zeros();
        s.fixed_view_mut::<2, 2>(0, 0).copy_from(&m);
        s.fixed_view_mut::<2, 2>(2, 2).copy_from(&m);
        let nm = NormalModeState {
            sigma: CovarianceMatrix::from_matrix4(&s),
            transform: normal_mode_transform(),
        };
        assert_eq!(det_gamma_decomposition(&nm).four_det_gamma, 0.0);
    }

    #[test]
    fn aligned_formula_matches_direct_det_gamma() {
        for &beta in &[0.1, 1.0, 3.0] {
            for &r in &[0.0f64, 0.3, 1.1] {
                let c = coth(0.5 * beta);
                let e = (2.0 * r).exp();
                let mut s = Matrix4::zeros();
                s[(0, 0)] = c / 2.0;
                s[(1, 1)] = c / 2.0;
                s[(2, 2)] = e / 2.0;
                s[(3, 3)] = 0.5 / e;
                let nm = NormalModeState {
                    sigma: CovarianceMatrix::from_matrix4(&s),
                    transform: normal_mode_transform(),
                };
                let direct = 4.0 * gaussian::det_gamma(&nm.to_local()).unwrap();
                assert!(close(direct, aligned_four_det_gamma(r, beta), 1e-12));
                assert!(close(det_gamma_decomposition(&nm).four_det_gamma, direct, 1e-12));
            }
        }
    }

    #[test]
    fn temperature_threshold_values() {
        let b = temperature_bound_check(0.0, 1.0).unwrap();
        assert!(close(b.threshold, 0.5 * 1.313035285499331f64.acosh(), 1e-12));
        assert!(close(b.threshold, 0.385968416452652, 1e-12));
        assert!(!b.satisfied);
        assert!(temperature_bound_check(0.4, 1.0).unwrap().satisfied);
        let cold = temperature_bound_check(1e-3, 1e6).unwrap();
        assert!(cold.satisfied && cold.threshold == 0.0);
    }

    #[test]
    fn mode_counts() {
        assert!(close(mode_count_estimate(4.37), 39.52, 0.01));
        assert!(close(mode_count_estimate(2.33), 5.14, 0.01));
        assert_eq!(mode_count_estimate(0.0), 0.5);
    }

    #[test]
    fn labels() {
        let th = LabelThresholds::default();
        let tmsv = to_normal_modes(&CovarianceMatrix::two_mode_squeezed_vacuum(0.8)).unwrap();
        assert_eq!(semi_epr_report(&tmsv, &th).unwrap().label, EprLabel::Epr);
        let vac = to_normal_modes(&CovarianceMatrix::vacuum(2)).unwrap();
        assert_eq!(semi_epr_report(&vac, &th).unwrap().label, EprLabel::Neither);
        let c = coth(0.5);
        let mut s = Matrix4::zeros();
        s[(0, 0)] = c / 2.0;
        s[(1, 1)] = c / 2.0;
        s[(2, 2)] = 0.5 * (-1.2f64).exp();
        s[(3, 3)] = 0.5 * 1.2f64.exp();
        let nm = NormalModeState {
            sigma: CovarianceMatrix::from_matrix4(&s),
            transform: normal_mode_transform(),
        };
        let rep = semi_epr_report(&nm, &th).unwrap();
        assert_eq!(rep.label, EprLabel::SemiEpr);
        assert!(close(rep.r_minus, -0.6, 1e-12));
        assert!(rep.normal_mode_sigma.is_none());
    }

    #[test]
    fn analyze_tmsv() {
        let rep = analyze_state(&CovarianceMatrix::two_mode_squeezed_vacuum(1.0), 1.0, &LabelThresholds::default()).unwrap();
        assert!(close(rep.e_n, 2.0, 1e-9));
        assert!(close(rep.mode_count, 2f64.exp() / 2.0, 1e-8));
        assert_eq!(rep.semi_epr.label, EprLabel::Epr);
        assert!(rep.temperature_bound.satisfied);
    }
}
