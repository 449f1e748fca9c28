//! Phase-space algebra for Gaussian states.
//!
//! Quadratures are ordered `(q_1, p_1, q_2, p_2, ...)` everywhere and all
//! covariances are in units where the vacuum has variance 1/2 per quadrature.
//! Symplectic eigenvalues are reported vacuum-normalized, so the vacuum has
//! symplectic eigenvalue 1 and a two-mode state is entangled exactly when the
//! smallest symplectic eigenvalue of its partial transpose drops below 1.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const DEFINITENESS_TOL: f64 = 1e-12;
const PHYSICAL_TOL: f64 = 1e-9;

/// Real symmetric covariance matrix over an even number of quadratures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceRepr", into = "CovarianceRepr")]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

/// Wire format: `{"dim": n, "entries": [row-major n*n values]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceRepr {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl TryFrom<CovarianceRepr> for CovarianceMatrix {
    type Error = Error;

    fn try_from(repr: CovarianceRepr) -> Result<Self> {
        CovarianceMatrix::from_row_major(repr.dim, &repr.entries)
    }
}

impl From<CovarianceMatrix> for CovarianceRepr {
    fn from(sigma: CovarianceMatrix) -> Self {
        let dim = sigma.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(sigma.entries[(i, j)]);
            }
        }
        CovarianceRepr { dim, entries }
    }
}

impl CovarianceMatrix {
    /// Wraps a matrix after checking shape and symmetry. The stored matrix is
    /// the exact symmetric part of the input.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::shape("non-empty square matrix of even dimension", format!("{r}x{c}")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite covariance entry".into()));
        }
        let scale = entries.amax().max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidState(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        Ok(Self { entries: sym })
    }

    pub fn from_row_major(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::shape(
                format!("{} entries for dim {dim}", dim * dim),
                format!("{} entries", values.len()),
            ));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    /// Product of identical unit-frequency thermal states at inverse temperature `beta`.
    pub fn thermal(modes: usize, beta: f64) -> Self {
        Self {
            entries: DMatrix::identity(2 * modes, 2 * modes) * (0.5 * coth(0.5 * beta)),
        }
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn two_mode_squeezed_vacuum(r: f64) -> Self {
        let c = 0.5 * (2.0 * r).cosh();
        let s = 0.5 * (2.0 * r).sinh();
        #[rustfmt::skip]
        let m = Matrix4::new(
            c, 0.0, s, 0.0,
            0.0, c, 0.0, -s,
            s, 0.0, c, 0.0,
            0.0, -s, 0.0, c,
        );
        Self::from_matrix4(&m)
    }

    pub fn from_matrix2(m: &Matrix2<f64>) -> Result<Self> {
        Self::new(DMatrix::from_iterator(2, 2, m.iter().copied()))
    }

    pub(crate) fn from_matrix4(m: &Matrix4<f64>) -> Self {
        let d = DMatrix::from_iterator(4, 4, m.iter().copied());
        Self {
            entries: (&d + d.transpose()) * 0.5,
        }
    }

    /// Block-diagonal direct sum of two covariances.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// 2x2 block coupling mode `i` (rows) to mode `j` (columns).
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let v = self.entries.view((2 * i, 2 * j), (2, 2));
        Matrix2::new(v[(0, 0)], v[(0, 1)], v[(1, 0)], v[(1, 1)])
    }

    /// Reduced covariance of a single mode.
    pub fn mode_block(&self, mode: usize) -> Result<CovarianceMatrix> {
        if mode >= self.modes() {
            return Err(Error::IndexOutOfRange {
                index: mode,
                modes: self.modes(),
            });
        }
        Self::from_matrix2(&self.block(mode, mode))
    }

    pub fn as_matrix4(&self) -> Result<Matrix4<f64>> {
        if self.dim() != 4 {
            return Err(Error::shape("4x4 two-mode covariance", format!("{0}x{0}", self.dim())));
        }
        Ok(Matrix4::from_iterator(self.entries.iter().copied()))
    }

    pub fn as_matrix2(&self) -> Result<Matrix2<f64>> {
        if self.dim() != 2 {
            return Err(Error::shape("2x2 single-mode covariance", format!("{0}x{0}", self.dim())));
        }
        Ok(Matrix2::from_iterator(self.entries.iter().copied()))
    }

    /// `S σ Sᵀ`.
    pub fn congruence(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.shape() != (self.dim(), self.dim()) {
            return Err(Error::shape(
                format!("{0}x{0} transform", self.dim()),
                format!("{}x{}", s.nrows(), s.ncols()),
            ));
        }
        let m = s * &self.entries * s.transpose();
        Ok(Self {
            entries: (&m + m.transpose()) * 0.5,
        })
    }

    /// Checks the uncertainty relation σ + (i/2)Ω ≥ 0 through the symplectic spectrum.
    pub fn validate_physical(&self) -> Result<()> {
        let nu = symplectic_eigenvalues(self)?;
        if nu[0] < 1.0 - PHYSICAL_TOL {
            return Err(Error::InvalidState(format!(
                "symplectic eigenvalue {} violates the uncertainty relation",
                nu[0]
            )));
        }
        Ok(())
    }
}

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    entries: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        let mut entries = DMatrix::zeros(2 * modes, 2 * modes);
        for k in 0..modes {
            entries[(2 * k, 2 * k + 1)] = 1.0;
            entries[(2 * k + 1, 2 * k)] = -1.0;
        }
        Self { entries }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

pub fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

fn check_positive_definite(sigma: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= DEFINITENESS_TOL * max.max(1.0) {
        return Err(Error::InvalidState(format!(
            "covariance not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(eig)
}

/// Vacuum-normalized symplectic eigenvalues, ascending.
///
/// Uses the symmetric reduction K = σ^{1/2} Ω σ^{1/2}: the eigenvalues of
/// the positive matrix KᵀK are the squared symplectic eigenvalues, each twice.
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let eig = check_positive_definite(&sigma.entries)?;
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let omega = SymplecticForm::new(sigma.modes());
    let k = &root * omega.matrix() * &root;
    let ktk = k.transpose() * &k;
    let ktk = (&ktk + ktk.transpose()) * 0.5;
    let mut sq: Vec<f64> = SymmetricEigen::new(ktk).eigenvalues.iter().copied().collect();
    sq.sort_by(f64::total_cmp);
    Ok(sq
        .chunks(2)
        .map(|pair| 2.0 * (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}

/// Flips the momentum of `mode` (row and column sign change).
pub fn partial_transpose(sigma: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
    if mode >= sigma.modes() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            modes: sigma.modes(),
        });
    }
    let mut m = sigma.entries.clone();
    let p = 2 * mode + 1;
    for j in 0..m.ncols() {
        if j != p {
            m[(p, j)] = -m[(p, j)];
            m[(j, p)] = -m[(j, p)];
        }
    }
    Ok(CovarianceMatrix { entries: m })
}

/// Smallest symplectic eigenvalue of the partial transpose with respect to mode B.
pub fn min_pt_symplectic_eigenvalue(sigma: &CovarianceMatrix) -> Result<f64> {
    require_two_mode(sigma)?;
    let pt = partial_transpose(sigma, 1)?;
    Ok(symplectic_eigenvalues(&pt)?[0])
}

/// The smooth surrogate `-ln ν̃_-`, negative for separable states.
pub fn neg_log_nu(sigma: &CovarianceMatrix) -> Result<f64> {
    Ok(-min_pt_symplectic_eigenvalue(sigma)?.ln())
}

/// Logarithmic negativity `max{0, -ln ν̃_-}` of a two-mode state.
pub fn log_negativity(sigma: &CovarianceMatrix) -> Result<f64> {
    Ok(neg_log_nu(sigma)?.max(0.0))
}

fn require_two_mode(sigma: &CovarianceMatrix) -> Result<()> {
    if sigma.dim() != 4 {
        return Err(Error::shape("4x4 two-mode covariance", format!("{0}x{0}", sigma.dim())));
    }
    Ok(())
}

/// Invariants of a two-mode covariance under local symplectic maps.
#[derive(Debug, Clone, Copy)]
pub struct TwoModeInvariants {
    pub det_alpha: f64,
    pub det_b: f64,
    pub det_gamma: f64,
    pub det_sigma: f64,
}

impl TwoModeInvariants {
    pub fn of(m: &Matrix4<f64>) -> Self {
        let det2 = |r: usize, c: usize| m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)];
        Self {
            det_alpha: det2(0, 0),
            det_b: det2(2, 2),
            det_gamma: det2(0, 2),
            det_sigma: m.determinant(),
        }
    }

    /// Seralian of the partially transposed state.
    pub fn delta_pt(&self) -> f64 {
        self.det_alpha + self.det_b - 2.0 * self.det_gamma
    }
}

/// ν̃_- from the determinant invariants alone.
///
/// In vacuum-normalized form ν̃_-² = 2(Δ̃ − √(Δ̃² − 4 det σ)), written in the
/// cancellation-free form 8 det σ / (Δ̃ + √(Δ̃² − 4 det σ)).
pub fn two_mode_nu_oracle(sigma: &CovarianceMatrix) -> Result<f64> {
    let m = sigma.as_matrix4()?;
    check_positive_definite(&sigma.entries)?;
    let inv = TwoModeInvariants::of(&m);
    let d = inv.delta_pt();
    let disc = (d * d - 4.0 * inv.det_sigma).max(0.0);
    Ok((8.0 * inv.det_sigma / (d + disc.sqrt())).sqrt())
}

/// Determinant of the off-diagonal block γ of a two-mode covariance.
pub fn det_gamma(sigma: &CovarianceMatrix) -> Result<f64> {
    require_two_mode(sigma)?;
    Ok(sigma.block(0, 1).determinant())
}

/// Rectangular phase-space sampling grid, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl PhaseGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nq: n,
            np: n,
        }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (min + max)];
        }
        (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn q_points(&self) -> Vec<f64> {
        Self::axis(self.q_min, self.q_max, self.nq)
    }

    pub fn p_points(&self) -> Vec<f64> {
        Self::axis(self.p_min, self.p_max, self.np)
    }

    pub fn cell_area(&self) -> f64 {
        let dq = if self.nq > 1 { (self.q_max - self.q_min) / (self.nq - 1) as f64 } else { 0.0 };
        let dp = if self.np > 1 { (self.p_max - self.p_min) / (self.np - 1) as f64 } else { 0.0 };
        dq * dp
    }
}

/// Gaussian Wigner function sampled on a grid; rows index Q, columns P.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseGrid,
    pub values: DMatrix<f64>,
}

pub fn wigner_grid(sigma: &CovarianceMatrix, means: Vector2<f64>, grid: PhaseGrid) -> Result<WignerGrid> {
    let s = sigma.as_matrix2()?;
    let det = s.determinant();
    if det <= DEFINITENESS_TOL * s.amax().max(1.0).powi(2) || s[(0, 0)] <= 0.0 {
        return Err(Error::Singular(format!("single-mode covariance with determinant {det:e}")));
    }
    let inv = s.try_inverse().ok_or_else(|| Error::Singular("inverse failed".into()))?;
    if grid.nq == 0 || grid.np == 0 {
        return Err(Error::shape("non-empty grid", format!("{}x{}", grid.nq, grid.np)));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let qs = grid.q_points();
    let ps = grid.p_points();
    let values = DMatrix::from_fn(grid.nq, grid.np, |i, j| {
        let x = Vector2::new(qs[i] - means[0], ps[j] - means[1]);
        norm * (-0.5 * x.dot(&(inv * x))).exp()
    });
    Ok(WignerGrid { grid, values })
}

/// Random symplectic maps and physical states for property tests.
pub mod sample {
    use super::*;

    /// Local rotation of `mode` by `theta`.
    pub fn rotation(modes: usize, mode: usize, theta: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        let (sn, cs) = theta.sin_cos();
        let i = 2 * mode;
        s[(i, i)] = cs;
        s[(i, i + 1)] = sn;
        s[(i + 1, i)] = -sn;
        s[(i + 1, i + 1)] = cs;
        s
    }

    /// Single-mode squeezer `diag(e^{-r}, e^{r})` on `mode`.
    pub fn squeezer(modes: usize, mode: usize, r: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        s[(2 * mode, 2 * mode)] = (-r).exp();
        s[(2 * mode + 1, 2 * mode + 1)] = r.exp();
        s
    }

    /// Beam splitter mixing modes `a` and `b`.
    pub fn beam_splitter(modes: usize, a: usize, b: usize, theta: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        let (sn, cs) = theta.sin_cos();
        for o in 0..2 {
            let (i, j) = (2 * a + o, 2 * b + o);
            s[(i, i)] = cs;
            s[(i, j)] = sn;
            s[(j, i)] = -sn;
            s[(j, j)] = cs;
        }
        s
    }

    /// Random two-mode symplectic map built from rotations, squeezers and beam splitters.
    pub fn random_symplectic<R: Rng>(rng: &mut R, max_squeeze: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(4, 4);
        for _ in 0..3 {
            for mode in 0..2 {
                s = rotation(2, mode, rng.random_range(0.0..std::f64::consts::TAU)) * s;
                s = squeezer(2, mode, rng.random_range(-max_squeeze..max_squeeze)) * s;
            }
            s = beam_splitter(2, 0, 1, rng.random_range(0.0..std::f64::consts::TAU)) * s;
        }
        s
    }

    /// Random local map `S_A ⊕ S_B`.
    pub fn random_local_symplectic<R: Rng>(rng: &mut R, max_squeeze: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(4, 4);
        for _ in 0..2 {
            for mode in 0..2 {
                s = rotation(2, mode, rng.random_range(0.0..std::f64::consts::TAU)) * s;
                s = squeezer(2, mode, rng.random_range(-max_squeeze..max_squeeze)) * s;
            }
        }
        s
    }

    /// Thermal state with symplectic eigenvalues in `[1, max_nu]`, conjugated by a random symplectic map.
    pub fn random_physical_state<R: Rng>(rng: &mut R, max_nu: f64, max_squeeze: f64) -> CovarianceMatrix {
        let nu1 = rng.random_range(1.0..max_nu);
        let nu2 = rng.random_range(1.0..max_nu);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.5 * nu1,
            0.5 * nu1,
            0.5 * nu2,
            0.5 * nu2,
        ]));
        let s = random_symplectic(rng, max_squeeze);
        CovarianceMatrix::new(d)
            .and_then(|t| t.congruence(&s))
            .expect("congruence of a valid state")
    }
}
