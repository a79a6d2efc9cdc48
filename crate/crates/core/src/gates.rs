//! Single-qubit gates and the structured multi-qubit gate family:
//! C-SIGN, its phase generalization `G_η`, parity, fanout and Toffoli.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DVector, Matrix2};
use serde::Serialize;

use crate::bits::QubitSet;
use crate::error::{QacError, Result};
use crate::linalg::Subspace;
use crate::state::{apply_1q_inplace, phase_all_ones_inplace, QuantumState, C64};

/// A 2×2 complex matrix.
pub type Mat2 = Matrix2<C64>;

/// Tolerance for accepting a 2×2 matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn hadamard() -> Mat2 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    Mat2::new(h, h, h, -h)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// `Rz(a) = diag(e^{−ia/2}, e^{ia/2})`.
pub fn rz(a: f64) -> Mat2 {
    Mat2::new(C64::from_polar(1.0, -a / 2.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, a / 2.0))
}

/// `Ry(t) = [[cos t/2, −sin t/2], [sin t/2, cos t/2]]`.
pub fn ry(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// `e^{iβ}·Rz(φ)·Ry(θ)·Rz(λ)`; every 2×2 unitary has this form.
pub fn zyz(beta: f64, theta: f64, phi: f64, lambda: f64) -> Mat2 {
    rz(phi) * ry(theta) * rz(lambda) * C64::from_polar(1.0, beta)
}

/// Largest entry of `|U·U† − I|`.
pub fn unitarity_residual2(u: &Mat2) -> f64 {
    (u * u.adjoint() - Mat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn check_unitary2(u: &Mat2) -> Result<()> {
    let residual = unitarity_residual2(u);
    if !(residual < UNITARY_TOL) {
        return Err(QacError::NotUnitary { residual });
    }
    Ok(())
}

/// `(U_qubit ⊗ I_rest)|state⟩`.
pub fn apply_single_qubit(state: &QuantumState, gate: &Mat2, qubit: usize) -> Result<QuantumState> {
    check_unitary2(gate)?;
    state.check_qubit(qubit)?;
    let mut out = state.clone();
    apply_1q_inplace(out.amplitudes_mut(), state.num_qubits(), qubit, gate);
    Ok(out)
}

/// Multi-qubit gates acting on a subset of the register.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StructuredGate {
    /// `ctrlZ_S`: phase −1 on basis states with all of `S` equal to 1.
    /// `CSign(∅)` is `−I`.
    CSign { support: QubitSet },
    /// `G_η` on `S`: phase `η` on the all-ones pattern of `S` (`|η| = 1`, `η ≠ 1`).
    /// `Geta(∅, η)` is `η·I`.
    Geta { support: QubitSet, eta: C64 },
    /// `⊕_k`: target first, then the controls.
    Parity { qubits: Vec<usize> },
    /// `F_k`: control first, then the targets.
    Fanout { qubits: Vec<usize> },
    /// `ctrlX_k`: target first, then the controls.
    Toffoli { qubits: Vec<usize> },
}

impl StructuredGate {
    pub fn csign(support: QubitSet) -> Self {
        StructuredGate::CSign { support }
    }

    pub fn geta(support: QubitSet, eta: C64) -> Self {
        StructuredGate::Geta { support, eta }
    }

    pub fn parity(qubits: Vec<usize>) -> Self {
        StructuredGate::Parity { qubits }
    }

    pub fn fanout(qubits: Vec<usize>) -> Self {
        StructuredGate::Fanout { qubits }
    }

    pub fn toffoli(qubits: Vec<usize>) -> Self {
        StructuredGate::Toffoli { qubits }
    }

    /// Checks the gate against an `n`-qubit register.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            StructuredGate::CSign { support } => check_support(*support, n),
            StructuredGate::Geta { support, eta } => {
                check_support(*support, n)?;
                check_eta(*eta)
            }
            StructuredGate::Parity { qubits }
            | StructuredGate::Fanout { qubits }
            | StructuredGate::Toffoli { qubits } => {
                if qubits.len() < 2 {
                    return Err(QacError::InvalidArgument(format!(
                        "gate needs at least 2 qubits, got {}",
                        qubits.len()
                    )));
                }
                let set = QubitSet::from_labels(qubits.iter().copied())?;
                if set.len() != qubits.len() {
                    return Err(QacError::InvalidArgument(format!("repeated qubit in {qubits:?}")));
                }
                check_support(set, n)
            }
        }
    }

    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        let n = state.num_qubits();
        self.validate(n)?;
        let amps = state.amplitudes();
        let out = match self {
            StructuredGate::CSign { support } => {
                let mut v = amps.to_vec();
                phase_all_ones_inplace(&mut v, support.index_mask(n), c(-1.0, 0.0));
                v
            }
            StructuredGate::Geta { support, eta } => {
                let mut v = amps.to_vec();
                phase_all_ones_inplace(&mut v, support.index_mask(n), *eta);
                v
            }
            StructuredGate::Parity { qubits } => {
                let target = 1usize << (n - qubits[0]);
                let all = QubitSet::from_labels(qubits.iter().copied())?.index_mask(n);
                permute(amps, |x| {
                    let parity = (x & all).count_ones() & 1 == 1;
                    if parity {
                        x | target
                    } else {
                        x & !target
                    }
                })
            }
            StructuredGate::Fanout { qubits } => {
                let control = 1usize << (n - qubits[0]);
                let targets = QubitSet::from_labels(qubits[1..].iter().copied())?.index_mask(n);
                permute(amps, |x| if x & control != 0 { x ^ targets } else { x })
            }
            StructuredGate::Toffoli { qubits } => {
                let target = 1usize << (n - qubits[0]);
                let controls = QubitSet::from_labels(qubits[1..].iter().copied())?.index_mask(n);
                permute(amps, |x| if x & controls == controls { x ^ target } else { x })
            }
        };
        Ok(QuantumState::from_raw(n, out))
    }

    /// The qubits the gate touches.
    pub fn support(&self) -> QubitSet {
        match self {
            StructuredGate::CSign { support } | StructuredGate::Geta { support, .. } => *support,
            StructuredGate::Parity { qubits }
            | StructuredGate::Fanout { qubits }
            | StructuredGate::Toffoli { qubits } => qubits.iter().copied().collect(),
        }
    }
}

/// `out[f(x)] = in[x]` for a basis permutation `f`.
fn permute<F: Fn(usize) -> usize>(amps: &[C64], f: F) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); amps.len()];
    for (x, a) in amps.iter().enumerate() {
        out[f(x)] = *a;
    }
    out
}

fn check_support(set: QubitSet, n: usize) -> Result<()> {
    match set.max_label() {
        Some(q) if q > n => Err(QacError::QubitOutOfRange { qubit: q, n }),
        _ => Ok(()),
    }
}

/// Rejects `η` unless `|η| = 1` and `η ≠ 1`.
pub fn check_eta(eta: C64) -> Result<()> {
    if (eta.norm() - 1.0).abs() > UNITARY_TOL {
        return Err(QacError::InvalidParameter(format!("|η| = {} but must be 1", eta.norm())));
    }
    if (eta - 1.0).norm() < UNITARY_TOL {
        return Err(QacError::InvalidParameter("η must differ from 1".into()));
    }
    Ok(())
}

/// Orthonormal basis of `P_b`: the basis states `|x⟩` with `⊕x = b`, in
/// index order.
pub fn parity_subspace_basis(n: usize, b: u8) -> Result<Subspace> {
    if n == 0 || n > crate::state::MAX_QUBITS {
        return Err(QacError::InvalidArgument(format!("register size {n} not supported")));
    }
    if b > 1 {
        return Err(QacError::InvalidArgument(format!("parity bit must be 0 or 1, got {b}")));
    }
    let dim = 1usize << n;
    let basis = (0..dim)
        .filter(|x| (x.count_ones() & 1) as u8 == b)
        .map(|x| {
            let mut v = DVector::from_element(dim, c(0.0, 0.0));
            v[x] = c(1.0, 0.0);
            v
        })
        .collect();
    Ok(Subspace::from_orthonormal(dim, basis))
}

/// Parity class of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityClass {
    Pure(u8),
    Mixed,
}

/// `Pure(b)` iff the mass outside `P_b` is below `tol²`.
pub fn classify_state_parity(state: &QuantumState, tol: f64) -> ParityClass {
    let odd = state.mass_where(|x| x.count_ones() & 1 == 1);
    let even = state.mass_where(|x| x.count_ones() & 1 == 0);
    if odd < tol * tol {
        ParityClass::Pure(0)
    } else if even < tol * tol {
        ParityClass::Pure(1)
    } else {
        ParityClass::Mixed
    }
}

/// Mass of `state` outside `P_b`, as a norm (square root of the mass).
pub fn parity_leakage(state: &QuantumState, b: u8) -> f64 {
    state
        .mass_where(|x| (x.count_ones() & 1) as u8 != b)
        .sqrt()
}
