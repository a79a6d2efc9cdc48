use rayon::prelude::*;
use serde::Serialize;

use super::{apply_circuit, QacCircuit};
use crate::bits::BitString;
use crate::error::{QacError, Result};
use crate::gates::StructuredGate;
use crate::linalg::{unitarity_residual, CMatrix};
use crate::state::{QuantumState, C64};

/// The `n`-qubit gate a circuit is meant to implement on its inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum CleanTarget {
    /// `⊕_n` with qubit 1 as the target.
    Parity,
    /// `F_n` with qubit 1 as the control.
    Fanout,
    /// `ctrlX_n` with qubit 1 as the target.
    Toffoli,
    /// An explicit `2^n × 2^n` unitary.
    Unitary(CMatrix),
}

impl CleanTarget {
    pub fn label(&self) -> String {
        match self {
            CleanTarget::Parity => "parity".into(),
            CleanTarget::Fanout => "fanout".into(),
            CleanTarget::Toffoli => "toffoli".into(),
            CleanTarget::Unitary(u) => format!("unitary({}x{})", u.nrows(), u.ncols()),
        }
    }

    /// `G|x⟩` on `n` qubits.
    pub fn image(&self, n: usize, x: usize) -> Result<QuantumState> {
        let qubits: Vec<usize> = (1..=n).collect();
        let basis = QuantumState::basis(n, x)?;
        match self {
            CleanTarget::Parity => StructuredGate::parity(qubits).apply(&basis),
            CleanTarget::Fanout => StructuredGate::fanout(qubits).apply(&basis),
            CleanTarget::Toffoli => StructuredGate::toffoli(qubits).apply(&basis),
            CleanTarget::Unitary(u) => Ok(QuantumState::from_raw(n, u.column(x).iter().copied().collect())),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            CleanTarget::Unitary(u) => {
                let dim = 1usize << n;
                if u.nrows() != dim || u.ncols() != dim {
                    return Err(QacError::DimensionMismatch { expected: dim, found: u.nrows().max(u.ncols()) });
                }
                let residual = unitarity_residual(u);
                if residual > crate::gates::UNITARY_TOL {
                    return Err(QacError::NotUnitary { residual });
                }
                Ok(())
            }
            _ if n < 2 => Err(QacError::InvalidArgument(format!("{} needs at least 2 inputs", self.label()))),
            _ => Ok(()),
        }
    }
}

/// How circuit outputs are compared with the target images.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// Vector equality, `‖C|x,0⟩ − G|x⟩|0⟩‖`.
    #[default]
    Exact,
    /// Distance minimized over a global phase per input,
    /// `√(2 − 2|⟨expected|output⟩|)`. Not the clean-simulation definition;
    /// meant for exploration only.
    PhaseFree,
}

#[derive(Clone, Debug, Serialize)]
pub struct CleanReport {
    pub target: String,
    pub mode: CompareMode,
    pub tolerance: f64,
    pub passed: bool,
    pub max_distance: f64,
    /// First input attaining the maximum distance.
    pub worst_input: BitString,
    /// Distance for each input `x`, indexed by `x` (qubit 1 is the MSB).
    pub distances: Vec<f64>,
}

/// Compares `C(|x⟩⊗|0^{m−n}⟩)` with `(G|x⟩)⊗|0^{m−n}⟩` for every classical `x`.
pub fn check_clean_simulation(c: &QacCircuit, target: &CleanTarget, tol: f64) -> Result<CleanReport> {
    check_clean_simulation_with(c, target, tol, CompareMode::Exact)
}

pub fn check_clean_simulation_with(
    c: &QacCircuit,
    target: &CleanTarget,
    tol: f64,
    mode: CompareMode,
) -> Result<CleanReport> {
    c.validate().map_err(QacError::Validation)?;
    let (n, m) = (c.inputs, c.qubits);
    target.validate(n)?;
    let ancilla_bits = m - n;
    let distances = (0..1usize << n)
        .into_par_iter()
        .map(|x| -> Result<f64> {
            let input = QuantumState::basis(m, x << ancilla_bits)?;
            let output = apply_circuit(c, &input)?;
            let expected = pad_zeros(&target.image(n, x)?, ancilla_bits);
            Ok(match mode {
                CompareMode::Exact => output.distance(&expected)?,
                CompareMode::PhaseFree => {
                    let overlap = expected.inner(&output)?.norm();
                    (2.0 - 2.0 * overlap).max(0.0).sqrt()
                }
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst, max_distance) = first_max(&distances);
    Ok(CleanReport {
        target: target.label(),
        mode,
        tolerance: tol,
        passed: max_distance <= tol,
        max_distance,
        worst_input: BitString::from_index(worst, n),
        distances,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakReport {
    pub tolerance: f64,
    pub passed: bool,
    /// Largest `√(mass with target ≠ ⊕x)` over inputs.
    pub max_leakage: f64,
    pub worst_input: BitString,
    pub leakages: Vec<f64>,
}

/// Checks that `C(|x⟩⊗ancilla)` has its target qubit equal to `⊕x` up to
/// leaked squared mass below `tol²`, for every classical `x`.
///
/// `ancilla` is a state on the `m − n` non-input qubits; `None` means
/// `|0…0⟩` (and is the only option when `m = n`). Only the given ancilla
/// state is checked.
pub fn check_weak_parity(c: &QacCircuit, ancilla: Option<&QuantumState>, tol: f64) -> Result<WeakReport> {
    c.validate().map_err(QacError::Validation)?;
    let (n, m) = (c.inputs, c.qubits);
    let ancilla_bits = m - n;
    let ancilla_amps: Vec<C64> = match ancilla {
        Some(a) if a.num_qubits() != ancilla_bits => {
            return Err(QacError::DimensionMismatch { expected: ancilla_bits, found: a.num_qubits() })
        }
        Some(a) => a.amplitudes().to_vec(),
        None => {
            let mut v = vec![C64::new(0.0, 0.0); 1 << ancilla_bits];
            v[0] = C64::new(1.0, 0.0);
            v
        }
    };
    let target_bit = 1usize << (m - 1);
    let leakages = (0..1usize << n)
        .into_par_iter()
        .map(|x| -> Result<f64> {
            let mut amps = vec![C64::new(0.0, 0.0); 1 << m];
            amps[x << ancilla_bits..(x + 1) << ancilla_bits].copy_from_slice(&ancilla_amps);
            let output = apply_circuit(c, &QuantumState::from_raw(m, amps))?;
            let parity = x.count_ones() & 1 == 1;
            let wrong = output.mass_where(|i| (i & target_bit != 0) != parity);
            Ok(wrong.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst, max_leakage) = first_max(&leakages);
    Ok(WeakReport {
        tolerance: tol,
        passed: max_leakage * max_leakage < tol * tol,
        max_leakage,
        worst_input: BitString::from_index(worst, n),
        leakages,
    })
}

fn pad_zeros(state: &QuantumState, extra: usize) -> QuantumState {
    let mut amps = vec![C64::new(0.0, 0.0); state.amplitudes().len() << extra];
    for (i, a) in state.amplitudes().iter().enumerate() {
        amps[i << extra] = *a;
    }
    QuantumState::from_raw(state.num_qubits() + extra, amps)
}

fn first_max(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

#[cfg(test)]
mod tests {
    use super::super::tests::cnot_circuit;
    use super::*;
    use crate::bits::QubitSet;
    use crate::gates::{hadamard, pauli_x};

    #[test]
    fn cnot_circuit_cleanly_simulates_toffoli_2() {
        let r = check_clean_simulation(&cnot_circuit(), &CleanTarget::Toffoli, 1e-9).unwrap();
        assert!(r.passed);
        assert!(r.max_distance < 1e-12);
        // ⊕₂ and ctrlX₂ coincide.
        assert!(check_clean_simulation(&cnot_circuit(), &CleanTarget::Parity, 1e-9).unwrap().passed);
    }

    #[test]
    fn empty_circuit_fails_parity_at_01() {
        let r = check_clean_simulation(&QacCircuit::new(2, 2), &CleanTarget::Parity, 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_input.to_string(), "01");
        assert!((r.max_distance - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dirty_ancilla_fails_cleanliness_but_not_weakness() {
        // CNOT onto qubit 1, then copy qubit 1 onto the ancilla (qubit 3).
        let mut c = QacCircuit::new(3, 2);
        c.push_multi(vec![QubitSet::from_labels([1, 2]).unwrap()]);
        c.push_multi(vec![QubitSet::from_labels([1, 3]).unwrap()]);
        c.set_single(0, 1, hadamard()).set_single(1, 1, hadamard()).set_single(1, 3, hadamard());
        c.set_single(2, 3, hadamard());
        let clean = check_clean_simulation(&c, &CleanTarget::Parity, 1e-9).unwrap();
        assert!(!clean.passed);
        assert_eq!(clean.worst_input.to_string(), "01");
        let weak = check_weak_parity(&c, None, 1e-9).unwrap();
        assert!(weak.passed, "{weak:?}");
    }

    #[test]
    fn weak_check_on_empty_circuit_fails_at_01() {
        let c = QacCircuit::new(3, 2);
        let anc = QuantumState::from_bits("1").unwrap();
        let r = check_weak_parity(&c, Some(&anc), 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_input.to_string(), "01");
        assert!((r.max_leakage - 1.0).abs() < 1e-12);
    }

    #[test]
    fn global_phase_is_not_forgiven() {
        let mut c = cnot_circuit();
        c.push_multi(vec![QubitSet::empty()]);
        let exact = check_clean_simulation(&c, &CleanTarget::Parity, 1e-9).unwrap();
        assert!((exact.max_distance - 2.0).abs() < 1e-12);
        let loose = check_clean_simulation_with(&c, &CleanTarget::Parity, 1e-9, CompareMode::PhaseFree).unwrap();
        assert!(loose.passed);
    }

    #[test]
    fn phase_free_mode_forgives_global_phase() {
        let mut c = cnot_circuit();
        c.set_single(1, 2, pauli_x() * crate::gates::pauli_z() * pauli_x() * crate::gates::pauli_z());
        let exact = check_clean_simulation(&c, &CleanTarget::Parity, 1e-9).unwrap();
        assert!(!exact.passed);
        let loose = check_clean_simulation_with(&c, &CleanTarget::Parity, 1e-9, CompareMode::PhaseFree).unwrap();
        assert!(loose.passed);
    }

    #[test]
    fn explicit_unitary_target() {
        let u = crate::linalg::kron_all(&[
            CMatrix::from_fn(2, 2, |i, j| hadamard()[(i, j)]),
            CMatrix::identity(2, 2),
        ]);
        let mut c = QacCircuit::new(2, 2);
        c.set_single(0, 1, hadamard());
        assert!(check_clean_simulation(&c, &CleanTarget::Unitary(u), 1e-9).unwrap().passed);
        let wrong = CMatrix::identity(3, 3);
        assert!(check_clean_simulation(&c, &CleanTarget::Unitary(wrong), 1e-9).is_err());
    }
}
