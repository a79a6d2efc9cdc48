//! Parametrized QAC circuits and numerical search for clean parity
//! simulators.

mod optimize;
mod topology;

pub use optimize::{
    bfgs, optimize_depth2, optimize_topology, sweep_topologies, BfgsOptions, BfgsOutcome, RestartOutcome, SearchOptions,
    SearchReport, StopReason, SweepReport, SWEEP_LIMIT,
};
pub use topology::{enumerate_topologies, Topology};

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuits::QacCircuit;
use crate::error::{QacError, Result};
use crate::gates::{zyz, Mat2};
use crate::state::{apply_1q_inplace, phase_all_ones_inplace, C64, MAX_QUBITS};

/// Number of real parameters per single-qubit slot: `(β, θ, φ, λ)`.
pub const SLOT_PARAMS: usize = 4;

/// A fixed C-SIGN topology with one `zyz` slot per qubit per single-qubit
/// layer. Slot `(k, q)` (layer `k ≥ 0`, qubit `q ≥ 1`) occupies
/// `params[(k·m + q − 1)·4 ..][..4]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamCircuit {
    pub n: usize,
    pub m: usize,
    pub topology: Topology,
    pub params: Vec<f64>,
}

impl ParamCircuit {
    /// All slots at the identity.
    pub fn new(n: usize, m: usize, topology: Topology) -> Result<Self> {
        if n < 1 || m < n || m > MAX_QUBITS {
            return Err(QacError::InvalidArgument(format!("need 1 <= n <= m <= {MAX_QUBITS}, got n = {n}, m = {m}")));
        }
        if let Some(q) = topology.max_label().filter(|&q| q > m) {
            return Err(QacError::InvalidArgument(format!("topology uses qubit {q} but m = {m}")));
        }
        let len = (topology.depth() + 1) * m * SLOT_PARAMS;
        Ok(ParamCircuit { n, m, topology, params: vec![0.0; len] })
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(QacError::DimensionMismatch { expected: self.params.len(), found: params.len() });
        }
        self.params = params;
        Ok(self)
    }

    /// Parameters drawn uniformly from `[0, 2π)`.
    pub fn randomized(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.params.iter_mut().for_each(|p| *p = rng.random_range(0.0..TAU));
        self
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn offset(&self, k: usize, q: usize) -> usize {
        (k * self.m + q - 1) * SLOT_PARAMS
    }

    pub fn slot(&self, k: usize, q: usize) -> [f64; 4] {
        let o = self.offset(k, q);
        self.params[o..o + SLOT_PARAMS].try_into().expect("slot width")
    }

    pub fn set_slot(&mut self, k: usize, q: usize, p: [f64; 4]) {
        let o = self.offset(k, q);
        self.params[o..o + SLOT_PARAMS].copy_from_slice(&p);
    }

    pub fn gate(&self, k: usize, q: usize) -> Mat2 {
        let [b, t, f, l] = self.slot(k, q);
        zyz(b, t, f, l)
    }

    pub fn to_circuit(&self) -> QacCircuit {
        let mut c = QacCircuit::new(self.m, self.n);
        for layer in self.topology.layers() {
            c.push_multi(layer.clone());
        }
        for k in 0..=self.topology.depth() {
            for q in 1..=self.m {
                c.set_single(k, q, self.gate(k, q));
            }
        }
        c
    }
}

/// `zyz(p)` together with its four partial derivatives.
pub(crate) fn zyz_with_derivatives(p: [f64; 4]) -> (Mat2, [Mat2; 4]) {
    let [beta, theta, phi, lambda] = p;
    let i = C64::new(0.0, 1.0);
    let half_z = Mat2::new(-i / 2.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0), i / 2.0);
    let (s, c) = (theta / 2.0).sin_cos();
    let ry = Mat2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0));
    let dry = Mat2::new(C64::new(-s / 2.0, 0.0), C64::new(-c / 2.0, 0.0), C64::new(c / 2.0, 0.0), C64::new(-s / 2.0, 0.0));
    let phase = C64::from_polar(1.0, beta);
    let rz = |a: f64| Mat2::new(C64::from_polar(1.0, -a / 2.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, a / 2.0));
    let (zf, zl) = (rz(phi), rz(lambda));
    let u = zf * ry * zl * phase;
    let d_theta = zf * dry * zl * phase;
    (u, [u * i, d_theta, half_z * u, u * half_z])
}

enum Op {
    Single { slot: usize, q: usize },
    Phase { mask: usize },
}

/// Precomputed clean-parity loss for a fixed `(n, m, topology)`.
pub(crate) struct LossKernel {
    n: usize,
    m: usize,
    slots: usize,
    ops: Vec<Op>,
    phase_free: bool,
}

impl LossKernel {
    pub(crate) fn new(pc: &ParamCircuit, phase_free: bool) -> Result<Self> {
        if pc.n < 2 {
            return Err(QacError::InvalidArgument(format!("parity loss needs n >= 2, got {}", pc.n)));
        }
        let m = pc.m;
        let mut ops = Vec::new();
        let depth = pc.topology.depth();
        for k in 0..=depth {
            ops.extend((1..=m).map(|q| Op::Single { slot: k * m + q - 1, q }));
            if k < depth {
                ops.extend(pc.topology.layers()[k].iter().map(|g| Op::Phase { mask: g.index_mask(m) }));
            }
        }
        Ok(LossKernel { n: pc.n, m, slots: (depth + 1) * m, ops, phase_free })
    }

    /// Basis index of `|⊕x, x₂…x_n⟩|0^{m−n}⟩` for input `x` (qubit 1 is the MSB).
    fn target_index(&self, x: usize) -> usize {
        let top = 1 << (self.n - 1);
        let parity = (x.count_ones() & 1) as usize;
        ((x & (top - 1)) | parity * top) << (self.m - self.n)
    }

    /// Loss at `params`; when `grad` is given it receives `∂L/∂params`.
    pub(crate) fn eval(&self, params: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut gates = Vec::with_capacity(self.slots);
        let mut derivs = Vec::with_capacity(self.slots);
        for s in 0..self.slots {
            let p: [f64; 4] = params[s * SLOT_PARAMS..(s + 1) * SLOT_PARAMS].try_into().expect("slot width");
            let (u, d) = zyz_with_derivatives(p);
            gates.push(u);
            derivs.push(d);
        }
        let adjoints: Vec<Mat2> = gates.iter().map(|u| u.adjoint()).collect();
        let dim = 1usize << self.m;
        let mut overlaps = vec![Mat2::zeros(); if grad.is_some() { self.slots } else { 0 }];
        let mut loss = 0.0;
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        let mut lam = vec![C64::new(0.0, 0.0); dim];
        for x in 0..1usize << self.n {
            psi.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            psi[x << (self.m - self.n)] = C64::new(1.0, 0.0);
            for op in &self.ops {
                match *op {
                    Op::Single { slot, q } => apply_1q_inplace(&mut psi, self.m, q, &gates[slot]),
                    Op::Phase { mask } => phase_all_ones_inplace(&mut psi, mask, C64::new(-1.0, 0.0)),
                }
            }
            let t = self.target_index(x);
            // `lam` is the residual E with dL = 2·Re⟨E|dψ⟩.
            if self.phase_free {
                let c = psi[t];
                loss += 1.0 - c.norm_sqr();
                if grad.is_some() {
                    lam.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
                    lam[t] = -c;
                }
            } else {
                let mut l = 0.0;
                for (i, a) in psi.iter().enumerate() {
                    let d = if i == t { *a - 1.0 } else { *a };
                    l += d.norm_sqr();
                    lam[i] = d;
                }
                loss += l;
            }
            if grad.is_none() {
                continue;
            }
            for op in self.ops.iter().rev() {
                match *op {
                    Op::Single { slot, q } => {
                        apply_1q_inplace(&mut psi, self.m, q, &adjoints[slot]);
                        accumulate_overlap(&mut overlaps[slot], &lam, &psi, self.m, q);
                        apply_1q_inplace(&mut lam, self.m, q, &adjoints[slot]);
                    }
                    Op::Phase { mask } => {
                        phase_all_ones_inplace(&mut psi, mask, C64::new(-1.0, 0.0));
                        phase_all_ones_inplace(&mut lam, mask, C64::new(-1.0, 0.0));
                    }
                }
            }
        }
        if let Some(grad) = grad {
            for (s, o) in overlaps.iter().enumerate() {
                for (j, d) in derivs[s].iter().enumerate() {
                    grad[s * SLOT_PARAMS + j] = 2.0 * d.component_mul(o).sum().re;
                }
            }
        }
        loss
    }
}

/// `M[a][b] += Σ conj(λ_a)·ψ_b` over index pairs differing only in qubit `q`.
fn accumulate_overlap(m2: &mut Mat2, lam: &[C64], psi: &[C64], n: usize, q: usize) {
    let stride = 1usize << (n - q);
    let mut acc = [[C64::new(0.0, 0.0); 2]; 2];
    let mut block = 0;
    while block < psi.len() {
        for i in block..block + stride {
            let (l0, l1) = (lam[i].conj(), lam[i + stride].conj());
            let (p0, p1) = (psi[i], psi[i + stride]);
            acc[0][0] += l0 * p0;
            acc[0][1] += l0 * p1;
            acc[1][0] += l1 * p0;
            acc[1][1] += l1 * p1;
        }
        block += 2 * stride;
    }
    for (a, row) in acc.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            m2[(a, b)] += v;
        }
    }
}

/// Clean-parity loss of `pc` with target qubit 1.
///
/// Default mode sums `‖C|x,0⟩ − |⊕x, x₂…x_n⟩|0⟩‖²` over the `2^n` classical
/// inputs; `phase_free` sums `1 − |⟨target|output⟩|²` instead. Zero in
/// default mode exactly when `pc` cleanly simulates parity.
pub fn clean_sim_loss(pc: &ParamCircuit, phase_free: bool) -> Result<f64> {
    Ok(LossKernel::new(pc, phase_free)?.eval(&pc.params, None))
}

/// Loss together with its gradient, computed by one forward and one adjoint
/// pass per input.
pub fn clean_sim_loss_and_gradient(pc: &ParamCircuit, phase_free: bool) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; pc.params.len()];
    let loss = LossKernel::new(pc, phase_free)?.eval(&pc.params, Some(&mut grad));
    Ok((loss, grad))
}
