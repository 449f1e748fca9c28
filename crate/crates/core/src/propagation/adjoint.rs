//! Exact gradient of a function of the final reduced covariance with respect
//! to the segment stiffnesses, differentiating the discrete step maps.
//!
//! With R = P M_n ⋯ M_1 the system rows and σ_sys = R σ₀ Rᵀ,
//! df = 2 tr(W dR) for W = σ₀ Rᵀ G and G = ∂f/∂σ_sys. A stiffness enters only
//! through the 2×2 flow blocks of the system oscillators, so one backward
//! sweep (recording the system slice of the rows before every flow stage) and
//! one forward sweep of W give every derivative.

use nalgebra::Matrix4;

use super::kernel::{system_rows, Flow2, Lanes, Plan, Stepper, SYS};
use super::{empty_bath, resolve_dt, SparseSym};
use crate::bath::DiscretizedBath;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::pulse::{ControlPulse, DriveMode};

/// Final reduced covariance, the objective value and its gradient with
/// respect to `pulse.params()`.
pub(crate) struct Adjoint<T> {
    #[allow(dead_code)]
    pub sigma: Matrix4<f64>,
    pub value: T,
    pub gradient: Vec<f64>,
}

type Slice = [Lanes; SYS];

/// `objective` maps σ_sys to a value and the symmetric matrix ∂f/∂σ_sys.
pub(crate) fn value_and_gradient<T>(
    initial: &CovarianceMatrix,
    pulse: &ControlPulse,
    bath: &DiscretizedBath,
    dt: Option<f64>,
    objective: impl FnOnce(&Matrix4<f64>) -> Result<(T, Matrix4<f64>)>,
) -> Result<Adjoint<T>> {
    if initial.dim() != bath.total_dim() {
        return Err(Error::shape(
            format!("{} dimensional covariance", bath.total_dim()),
            format!("{}", initial.dim()),
        ));
    }
    let dt = resolve_dt(pulse, bath, dt)?;
    if bath.is_coupled() {
        bath.check_horizon(pulse.t_f())?;
    }
    let empty = empty_bath();
    let bath = if bath.is_coupled() { bath } else { &empty };
    let dim = bath.total_dim();
    let sigma0 = SparseSym::new(initial.entries(), dim);
    let plan = Plan::new(pulse, dt);
    let blocks = plan.blocks_between(0, plan.n_steps());
    let mut stepper = Stepper::new(bath);
    stepper.prepare_all(&blocks);

    // backward sweep, recording the row slices seen by each flow stage
    let mut tape: Vec<[Slice; 3]> = vec![[[[0.0; 4]; SYS]; 3]; plan.n_steps()];
    let mut x = system_rows(dim);
    let mut step = plan.n_steps();
    for b in blocks.iter().rev() {
        let maps = stepper.maps(b);
        for _ in 0..b.count {
            step -= 1;
            stepper.kick_t(&mut x, maps.kicks[3]);
            for s in (0..3).rev() {
                tape[step][s].copy_from_slice(&x[..SYS]);
                maps.stages[s].apply_t(&mut x);
                stepper.kick_t(&mut x, maps.kicks[s]);
            }
        }
    }
    let sigma = sigma0.contract(&x);
    let (value, g) = objective(&sigma)?;

    // forward sweep of W = σ₀ Rᵀ G
    let mut z = sigma0.apply(&x, &g, dim);
    let mut grad_a = vec![0.0; pulse.n_segments()];
    let mut grad_b = vec![0.0; pulse.n_segments()];
    let mut step = 0;
    for b in &blocks {
        let maps = stepper.maps(b);
        let d: [(Flow2, Flow2); 3] =
            std::array::from_fn(|s| (Flow2::d_stiffness(b.ka, maps.taus[s]), Flow2::d_stiffness(b.kb, maps.taus[s])));
        let (mut ga, mut gb) = (0.0, 0.0);
        for _ in 0..b.count {
            stepper.kick(&mut z, maps.kicks[0]);
            for s in 0..3 {
                let lam = &tape[step][s];
                ga += contract_block(&d[s].0, lam, &z, 0);
                gb += contract_block(&d[s].1, lam, &z, 2);
                maps.stages[s].apply(&mut z);
                stepper.kick(&mut z, maps.kicks[s + 1]);
            }
            step += 1;
        }
        grad_a[b.segment] += 2.0 * ga;
        grad_b[b.segment] += 2.0 * gb;
    }
    let gradient = match pulse.mode {
        DriveMode::Symmetric => grad_a.iter().zip(&grad_b).map(|(a, b)| a + b).collect(),
        DriveMode::SingleSite => grad_a,
        DriveMode::Free => {
            grad_a.extend(grad_b);
            grad_a
        }
    };
    Ok(Adjoint {
        sigma,
        value,
        gradient,
    })
}

/// Σ_a Σ_{r,c} Λ[r][a] dF[r][c] Z[c][a] over the oscillator at `offset`.
fn contract_block(d: &Flow2, lam: &Slice, z: &[Lanes], offset: usize) -> f64 {
    let (lq, lp) = (&lam[offset], &lam[offset + 1]);
    let (zq, zp) = (&z[offset], &z[offset + 1]);
    let mut acc = 0.0;
    for a in 0..4 {
        let fq = d.c * zq[a] + d.s * zp[a];
        let fp = -d.ks * zq[a] + d.c * zp[a];
        acc += lq[a] * fq + lp[a] * fp;
    }
    acc
}
