use serde::Serialize;

use super::{invert_circuit, QacCircuit};
use crate::bits::QubitSet;
use crate::gates::Mat2;
use crate::state::C64;

/// Whether a 2×2 unitary maps basis states to (phased) basis states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixingClass {
    pub mixing: bool,
    /// Non-mixing gates only: `e^{iβ}·X·e^{iαZ}` rather than `e^{iβ}·e^{iαZ}`.
    pub with_x: bool,
    pub alpha: f64,
    pub beta: f64,
}

impl MixingClass {
    /// `e^{iβ}·[X]·e^{iαZ}`; meaningless for mixing gates.
    pub fn reconstruct(&self) -> Mat2 {
        let z = C64::new(0.0, 0.0);
        let p = C64::from_polar(1.0, self.beta + self.alpha);
        let q = C64::from_polar(1.0, self.beta - self.alpha);
        if self.with_x {
            Mat2::new(z, q, p, z)
        } else {
            Mat2::new(p, z, z, q)
        }
    }
}

/// A gate is mixing when every entry has modulus at least `tol`. Otherwise it
/// is written as `e^{iβ}e^{iαZ}` (diagonal) or `e^{iβ}Xe^{iαZ}`
/// (antidiagonal), with `α = (θ−φ)/2`, `β = (θ+φ)/2` and `θ, φ` the phases of
/// the nonzero entries in columns 0 and 1.
pub fn classify_mixing(gate: &Mat2, tol: f64) -> MixingClass {
    if gate.iter().all(|e| e.norm() >= tol) {
        return MixingClass { mixing: true, with_x: false, alpha: 0.0, beta: 0.0 };
    }
    let diag = gate[(0, 0)].norm() + gate[(1, 1)].norm();
    let anti = gate[(0, 1)].norm() + gate[(1, 0)].norm();
    let with_x = anti > diag;
    let (theta, phi) = if with_x {
        (gate[(1, 0)].arg(), gate[(0, 1)].arg())
    } else {
        (gate[(0, 0)].arg(), gate[(1, 1)].arg())
    };
    MixingClass { mixing: false, with_x, alpha: (theta - phi) / 2.0, beta: (theta + phi) / 2.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitRole {
    pub qubit: usize,
    /// The layer-0.5 gate is non-mixing.
    pub pass_in: bool,
    /// The last single-qubit gate is non-mixing.
    pub pass_through: bool,
    /// For each multi layer, the support of the gate containing this qubit.
    pub gates: Vec<Option<QubitSet>>,
}

impl QubitRole {
    pub fn layer1_gate(&self) -> Option<QubitSet> {
        self.gates.first().copied().flatten()
    }

    pub fn layer2_gate(&self) -> Option<QubitSet> {
        self.gates.get(1).copied().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitRoleReport {
    pub depth: usize,
    pub qubits: Vec<QubitRole>,
}

impl QubitRoleReport {
    pub fn role(&self, qubit: usize) -> Option<&QubitRole> {
        self.qubits.get(qubit.checked_sub(1)?)
    }
}

pub fn classify_qubit_roles(c: &QacCircuit, tol: f64) -> QubitRoleReport {
    let depth = c.depth();
    let first = c.single_layer(0);
    let last = c.single_layer(depth);
    let qubits = (1..=c.qubits)
        .map(|q| {
            let non_mixing = |layer: Option<&super::SingleLayer>| {
                layer.map_or(true, |l| !classify_mixing(&l.gate(q), tol).mixing)
            };
            QubitRole {
                qubit: q,
                pass_in: non_mixing(first),
                pass_through: non_mixing(last),
                gates: (1..=depth).map(|j| c.multi_layer(j).and_then(|ml| ml.gate_on(q))).collect(),
            }
        })
        .collect();
    QubitRoleReport { depth, qubits }
}

/// Pass-in flags of `c` next to pass-through flags of its inverse.
#[allow(dead_code)]
pub(crate) fn mirror_roles(c: &QacCircuit, tol: f64) -> (Vec<bool>, Vec<bool>) {
    let direct = classify_qubit_roles(c, tol);
    let mirrored = classify_qubit_roles(&invert_circuit(c), tol);
    (
        direct.qubits.iter().map(|r| r.pass_in).collect(),
        mirrored.qubits.iter().map(|r| r.pass_through).collect(),
    )
}
