//! Fixed-step symplectic maps for the system + bath phase space.
//!
//! Layout of a phase-space vector: `(q_A, p_A, q_B, p_B, x_1, p_1, x_2, p_2, ...)`.
//! Every routine works on four independent vectors at once ("lanes"), stored
//! interleaved as `[f64; 4]` per coordinate.
//!
//! One step of size h is the fourth-order composition
//! S(w1 h) S(w0 h) S(w1 h) of the symmetric splitting
//! S(τ) = K(τ/2) F(τ) K(τ/2), where F is the exact flow of every oscillator
//! with its own stiffness and K is the kick from the position-only coupling
//! (q_A + q_B) Σ c_k x_k + μ (q_A + q_B)². Both pieces are exactly symplectic.

use std::collections::HashMap;

use crate::bath::DiscretizedBath;
use crate::pulse::ControlPulse;

pub(crate) type Lanes = [f64; 4];

pub(crate) const SYS: usize = 4;

const CBRT2: f64 = 1.259_921_049_894_873_2;
pub(crate) const W1: f64 = 1.0 / (2.0 - CBRT2);
pub(crate) const W0: f64 = 1.0 - 2.0 * W1;

/// Exact flow of q̈ = −k q over τ as `[[c, s], [-ks, c]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Flow2 {
    pub c: f64,
    pub s: f64,
    pub ks: f64,
}

impl Flow2 {
    pub fn new(k: f64, tau: f64) -> Self {
        let (c, s) = cos_sinc(k, tau);
        Self { c, s, ks: k * s }
    }

    /// Derivative of the flow matrix with respect to the stiffness k.
    pub fn d_stiffness(k: f64, tau: f64) -> Flow2 {
        let (c, s) = cos_sinc(k, tau);
        let dc = -0.5 * tau * s;
        let ds = if (k * tau * tau).abs() < 1e-2 {
            // Σ_{n≥1} n (−k)^{n−1} (−1) τ^{2n+1} / (2n+1)!
            let mut term = -tau.powi(3) / 6.0;
            let mut sum = term;
            for n in 1..12 {
                let nf = n as f64;
                term *= -k * tau * tau / ((2.0 * nf + 2.0) * (2.0 * nf + 3.0)) * (nf + 1.0) / nf;
                sum += term;
            }
            sum
        } else {
            (tau * c - s) / (2.0 * k)
        };
        Flow2 { c: dc, s: ds, ks: s + k * ds }
    }

}

/// `(cos(√k τ), sin(√k τ)/√k)` continued analytically to k ≤ 0.
fn cos_sinc(k: f64, tau: f64) -> (f64, f64) {
    if k > 0.0 {
        let w = k.sqrt();
        let (s, c) = (w * tau).sin_cos();
        (c, s / w)
    } else if k < 0.0 {
        let w = (-k).sqrt();
        ((w * tau).cosh(), (w * tau).sinh() / w)
    } else {
        (1.0, tau)
    }
}

/// Exact flows of every bath oscillator over one τ.
#[derive(Debug, Clone)]
pub(crate) struct BathFlow {
    c: Vec<f64>,
    s: Vec<f64>,
    ks: Vec<f64>,
}

impl BathFlow {
    fn new(bath: &DiscretizedBath, tau: f64) -> Self {
        let n = bath.n_modes();
        let mut c = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        let mut ks = Vec::with_capacity(n);
        for (&w, &m) in bath.omegas.iter().zip(&bath.masses) {
            let (sn, cs) = (w * tau).sin_cos();
            c.push(cs);
            s.push(sn / (m * w));
            ks.push(m * w * sn);
        }
        Self { c, s, ks }
    }
}

/// Coupling data shared by all steps.
#[derive(Debug, Clone)]
pub(crate) struct Coupling {
    c: Vec<f64>,
    /// 2μ, the counterterm stiffness on q_A and q_B (and their cross term).
    mu2: f64,
}

impl Coupling {
    pub fn new(bath: &DiscretizedBath) -> Self {
        Self {
            c: bath.couplings.clone(),
            mu2: 2.0 * bath.counterterm_sum,
        }
    }

    fn kick(&self, x: &mut [Lanes], tau: f64) {
        let mut force = [0.0; 4];
        for (k, &ck) in self.c.iter().enumerate() {
            let xk = &x[SYS + 2 * k];
            for l in 0..4 {
                force[l] += ck * xk[l];
            }
        }
        let mut s = [0.0; 4];
        for l in 0..4 {
            s[l] = x[0][l] + x[2][l];
            let f = tau * (force[l] + self.mu2 * s[l]);
            x[1][l] -= f;
            x[3][l] -= f;
        }
        for (k, &ck) in self.c.iter().enumerate() {
            let pk = &mut x[SYS + 2 * k + 1];
            let t = tau * ck;
            for l in 0..4 {
                pk[l] -= t * s[l];
            }
        }
    }

    fn kick_t(&self, x: &mut [Lanes], tau: f64) {
        let mut g = [0.0; 4];
        for l in 0..4 {
            g[l] = x[1][l] + x[3][l];
        }
        let mut psum = [0.0; 4];
        for (k, &ck) in self.c.iter().enumerate() {
            let i = SYS + 2 * k;
            let pk = x[i + 1];
            for l in 0..4 {
                psum[l] += ck * pk[l];
            }
            let t = tau * ck;
            let xk = &mut x[i];
            for l in 0..4 {
                xk[l] -= t * g[l];
            }
        }
        for l in 0..4 {
            let f = tau * (self.mu2 * g[l] + psum[l]);
            x[0][l] -= f;
            x[2][l] -= f;
        }
    }
}

fn flow_pair(f: &Flow2, q: &mut Lanes, p: &mut Lanes) {
    for l in 0..4 {
        let (a, b) = (q[l], p[l]);
        q[l] = f.c * a + f.s * b;
        p[l] = -f.ks * a + f.c * b;
    }
}

fn flow_pair_t(f: &Flow2, q: &mut Lanes, p: &mut Lanes) {
    for l in 0..4 {
        let (a, b) = (q[l], p[l]);
        q[l] = f.c * a - f.ks * b;
        p[l] = f.s * a + f.c * b;
    }
}

fn split2(x: &mut [Lanes], i: usize) -> (&mut Lanes, &mut Lanes) {
    let (lo, hi) = x.split_at_mut(i + 1);
    (&mut lo[i], &mut hi[0])
}

/// Flow of the whole phase space over one sub-step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FlowStage<'a> {
    pub a: Flow2,
    pub b: Flow2,
    pub bath: &'a BathFlow,
}

impl FlowStage<'_> {
    pub fn apply(&self, x: &mut [Lanes]) {
        let (q, p) = split2(x, 0);
        flow_pair(&self.a, q, p);
        let (q, p) = split2(x, 2);
        flow_pair(&self.b, q, p);
        let bath = &mut x[SYS..];
        for (k, pair) in bath.chunks_exact_mut(2).enumerate() {
            let (c, s, ks) = (self.bath.c[k], self.bath.s[k], self.bath.ks[k]);
            let (q, p) = pair.split_at_mut(1);
            let (q, p) = (&mut q[0], &mut p[0]);
            for l in 0..4 {
                let (a, b) = (q[l], p[l]);
                q[l] = c * a + s * b;
                p[l] = -ks * a + c * b;
            }
        }
    }

    pub fn apply_t(&self, x: &mut [Lanes]) {
        let (q, p) = split2(x, 0);
        flow_pair_t(&self.a, q, p);
        let (q, p) = split2(x, 2);
        flow_pair_t(&self.b, q, p);
        let bath = &mut x[SYS..];
        for (k, pair) in bath.chunks_exact_mut(2).enumerate() {
            let (c, s, ks) = (self.bath.c[k], self.bath.s[k], self.bath.ks[k]);
            let (q, p) = pair.split_at_mut(1);
            let (q, p) = (&mut q[0], &mut p[0]);
            for l in 0..4 {
                let (a, b) = (q[l], p[l]);
                q[l] = c * a - ks * b;
                p[l] = s * a + c * b;
            }
        }
    }
}

/// A run of identical steps of size `h` under constant stiffnesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Block {
    pub segment: usize,
    pub start: f64,
    pub h: f64,
    pub count: usize,
    pub ka: f64,
    pub kb: f64,
}

/// Step grid for a pulse: every segment is cut into equal steps no longer
/// than `dt`. Grid steps are numbered globally; a time inside a step is
/// reached by the whole steps before it plus one shorter final step.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    segments: Vec<Block>,
    offsets: Vec<usize>,
}

impl Plan {
    pub fn new(pulse: &ControlPulse, dt: f64) -> Self {
        let segments: Vec<Block> = (0..pulse.n_segments())
            .map(|i| {
                let (t0, t1, ua, ub) = pulse.segment(i);
                let count = ((t1 - t0) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                Block {
                    segment: i,
                    start: t0,
                    h: (t1 - t0) / count as f64,
                    count,
                    ka: 1.0 + ua,
                    kb: 1.0 + ub,
                }
            })
            .collect();
        let mut offsets = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &segments {
            acc += s.count;
            offsets.push(acc);
        }
        Self { segments, offsets }
    }

    pub fn segments(&self) -> &[Block] {
        &self.segments
    }

    pub fn n_steps(&self) -> usize {
        self.offsets[self.segments.len()]
    }

    /// Number of whole grid steps before `t`, and the partial step completing it.
    pub fn locate(&self, t: f64) -> (usize, Option<Block>) {
        for (i, seg) in self.segments.iter().enumerate() {
            let elapsed = t - seg.start;
            if elapsed <= 1e-9 * seg.h {
                return (self.offsets[i], None);
            }
            let end = seg.start + seg.h * seg.count as f64;
            if t >= end - 1e-9 * seg.h {
                continue;
            }
            let whole = ((elapsed / seg.h) * (1.0 + 1e-12)).floor() as usize;
            let whole = whole.min(seg.count);
            let rest = elapsed - whole as f64 * seg.h;
            let partial = (rest > 1e-9 * seg.h).then(|| Block {
                start: seg.start + whole as f64 * seg.h,
                h: rest,
                count: 1,
                ..*seg
            });
            return (self.offsets[i] + whole, partial);
        }
        (self.n_steps(), None)
    }

    /// Grid steps `[from, to)` grouped into blocks, in time order.
    pub fn blocks_between(&self, from: usize, to: usize) -> Vec<Block> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let (lo, hi) = (self.offsets[i].max(from), self.offsets[i + 1].min(to));
            if lo < hi {
                out.push(Block {
                    start: seg.start + (lo - self.offsets[i]) as f64 * seg.h,
                    count: hi - lo,
                    ..*seg
                });
            }
        }
        out
    }

    /// Whether every grid step applies the same map.
    pub fn is_constant(&self) -> bool {
        self.segments.windows(2).all(|w| {
            w[0].ka == w[1].ka && w[0].kb == w[1].kb && (w[0].h - w[1].h).abs() <= 1e-14 * w[0].h
        })
    }
}

/// Step maps with bath flows cached per distinct step size.
pub(crate) struct Stepper<'a> {
    coupling: Coupling,
    bath: &'a DiscretizedBath,
    flows: HashMap<u64, (BathFlow, BathFlow)>,
}

/// The three flow stages and four kick sizes of one step.
pub(crate) struct StepMaps<'a> {
    pub stages: [FlowStage<'a>; 3],
    pub kicks: [f64; 4],
    pub taus: [f64; 3],
}

impl<'a> Stepper<'a> {
    pub fn new(bath: &'a DiscretizedBath) -> Self {
        Self {
            coupling: Coupling::new(bath),
            bath,
            flows: HashMap::new(),
        }
    }

    /// Makes sure the bath flows for step size `h` are cached.
    pub fn prepare(&mut self, h: f64) {
        let bath = self.bath;
        self.flows
            .entry(h.to_bits())
            .or_insert_with(|| (BathFlow::new(bath, W1 * h), BathFlow::new(bath, W0 * h)));
    }

    pub fn prepare_all(&mut self, blocks: &[Block]) {
        for b in blocks {
            self.prepare(b.h);
        }
    }

    pub fn maps(&self, block: &Block) -> StepMaps<'_> {
        let h = block.h;
        let (outer, inner) = self
            .flows
            .get(&h.to_bits())
            .expect("bath flow prepared for this step size");
        let stage = |w: f64, bath| FlowStage {
            a: Flow2::new(block.ka, w * h),
            b: Flow2::new(block.kb, w * h),
            bath,
        };
        StepMaps {
            stages: [stage(W1, outer), stage(W0, inner), stage(W1, outer)],
            kicks: [0.5 * W1 * h, 0.5 * (W1 + W0) * h, 0.5 * (W1 + W0) * h, 0.5 * W1 * h],
            taus: [W1 * h, W0 * h, W1 * h],
        }
    }

    /// x ← M x.
    pub fn step(&self, maps: &StepMaps<'_>, x: &mut [Lanes]) {
        self.coupling.kick(x, maps.kicks[0]);
        for j in 0..3 {
            maps.stages[j].apply(x);
            self.coupling.kick(x, maps.kicks[j + 1]);
        }
    }

    /// x ← Mᵀ x (equivalently, row vectors r ← r M).
    pub fn step_t(&self, maps: &StepMaps<'_>, x: &mut [Lanes]) {
        self.coupling.kick_t(x, maps.kicks[3]);
        for j in (0..3).rev() {
            maps.stages[j].apply_t(x);
            self.coupling.kick_t(x, maps.kicks[j]);
        }
    }

    /// Applies `M_n ... M_1` for the blocks in time order (flows must be prepared).
    pub fn forward(&self, blocks: &[Block], x: &mut [Lanes]) {
        for b in blocks {
            let maps = self.maps(b);
            for _ in 0..b.count {
                self.step(&maps, x);
            }
        }
    }

    /// Applies `(M_n ... M_1)ᵀ`: row vectors pulled back from the last block to t = 0.
    pub fn backward(&self, blocks: &[Block], x: &mut [Lanes]) {
        for b in blocks.iter().rev() {
            let maps = self.maps(b);
            for _ in 0..b.count {
                self.step_t(&maps, x);
            }
        }
    }

    pub fn kick(&self, x: &mut [Lanes], tau: f64) {
        self.coupling.kick(x, tau);
    }

    pub fn kick_t(&self, x: &mut [Lanes], tau: f64) {
        self.coupling.kick_t(x, tau);
    }
}

/// Unit rows for the four system quadratures.
pub(crate) fn system_rows(dim: usize) -> Vec<Lanes> {
    let mut x = vec![[0.0; 4]; dim];
    for l in 0..4 {
        x[l][l] = 1.0;
    }
    x
}
