//! The QAC circuit model: alternating single-qubit layers and layers of
//! pairwise-disjoint C-SIGN gates.
//!
//! A valid circuit of depth `d` has `2d + 1` layers laid out as
//! `single, multi, single, …, multi, single`. Single layer `k` sits at
//! position `k + ½` (the first one, applied first, is layer `0.5`); multi
//! layer `j` (1-based) is layer `j`. Depth counts only multi layers.

mod checks;
mod roles;

use std::collections::BTreeMap;

use crate::bits::QubitSet;
use crate::error::{QacError, Result, ValidationIssue};
use crate::gates::{unitarity_residual2, Mat2, UNITARY_TOL};
use crate::state::{apply_1q_inplace, phase_all_ones_inplace, QuantumState, C64};

pub use checks::{
    check_clean_simulation, check_clean_simulation_with, check_weak_parity, CleanReport, CleanTarget,
    CompareMode, WeakReport,
};
pub use roles::{classify_mixing, classify_qubit_roles, MixingClass, QubitRole, QubitRoleReport};

/// Single-qubit gates applied simultaneously; absent qubits get the identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SingleLayer {
    pub gates: BTreeMap<usize, Mat2>,
}

impl SingleLayer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, qubit: usize, gate: Mat2) -> Self {
        self.gates.insert(qubit, gate);
        self
    }

    /// The gate on `qubit`, or the identity.
    pub fn gate(&self, qubit: usize) -> Mat2 {
        self.gates.get(&qubit).copied().unwrap_or_else(Mat2::identity)
    }

    fn adjoint(&self) -> Self {
        SingleLayer { gates: self.gates.iter().map(|(q, g)| (*q, g.adjoint())).collect() }
    }

    /// `later ∘ self`.
    fn then(&self, later: &SingleLayer) -> Self {
        let mut gates = self.gates.clone();
        for (q, g) in &later.gates {
            let combined = g * self.gate(*q);
            gates.insert(*q, combined);
        }
        SingleLayer { gates }
    }
}

/// C-SIGN gates on pairwise-disjoint supports.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiLayer {
    pub gates: Vec<QubitSet>,
}

impl MultiLayer {
    pub fn new(gates: Vec<QubitSet>) -> Self {
        MultiLayer { gates }
    }

    /// The gate whose support contains `qubit`.
    pub fn gate_on(&self, qubit: usize) -> Option<QubitSet> {
        self.gates.iter().copied().find(|g| g.contains(qubit))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Single(SingleLayer),
    Multi(MultiLayer),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QacCircuit {
    /// Total number of qubits `m`.
    pub qubits: usize,
    /// Number of input qubits `n`; qubit 1 is the target.
    pub inputs: usize,
    pub layers: Vec<Layer>,
}

impl QacCircuit {
    /// Depth-0 circuit (a single empty single-qubit layer).
    pub fn new(qubits: usize, inputs: usize) -> Self {
        QacCircuit { qubits, inputs, layers: vec![Layer::Single(SingleLayer::new())] }
    }

    /// Builds a circuit from an arbitrary layer sequence, inserting identity
    /// single layers where two multi layers touch (or at either end) and
    /// merging consecutive single layers.
    pub fn from_layers(qubits: usize, inputs: usize, layers: Vec<Layer>) -> Self {
        let mut out: Vec<Layer> = Vec::with_capacity(layers.len() + 2);
        for layer in layers {
            match (out.last_mut(), layer) {
                (Some(Layer::Single(prev)), Layer::Single(next)) => *prev = prev.then(&next),
                (Some(Layer::Single(_)), multi @ Layer::Multi(_)) => out.push(multi),
                (_, Layer::Multi(m)) => {
                    out.push(Layer::Single(SingleLayer::new()));
                    out.push(Layer::Multi(m));
                }
                (_, single) => out.push(single),
            }
        }
        if !matches!(out.last(), Some(Layer::Single(_))) {
            out.push(Layer::Single(SingleLayer::new()));
        }
        QacCircuit { qubits, inputs, layers: out }
    }

    /// Appends a multi layer followed by an empty single layer.
    pub fn push_multi(&mut self, gates: Vec<QubitSet>) -> &mut Self {
        self.layers.push(Layer::Multi(MultiLayer::new(gates)));
        self.layers.push(Layer::Single(SingleLayer::new()));
        self
    }

    /// Sets the gate on `qubit` in single layer `k` (layer `k + ½`).
    pub fn set_single(&mut self, k: usize, qubit: usize, gate: Mat2) -> &mut Self {
        let idx = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Single(_)))
            .map(|(i, _)| i)
            .nth(k)
            .unwrap_or_else(|| panic!("circuit has no single layer {k}"));
        if let Layer::Single(s) = &mut self.layers[idx] {
            s.gates.insert(qubit, gate);
        }
        self
    }

    /// Number of multi-qubit layers.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Multi(_))).count()
    }

    /// Single layer `k` (position `k + ½`).
    pub fn single_layer(&self, k: usize) -> Option<&SingleLayer> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Single(s) => Some(s),
                _ => None,
            })
            .nth(k)
    }

    /// Multi layer `j`, 1-based.
    pub fn multi_layer(&self, j: usize) -> Option<&MultiLayer> {
        if j == 0 {
            return None;
        }
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Multi(m) => Some(m),
                _ => None,
            })
            .nth(j - 1)
    }

    /// Checks layer alternation, qubit ranges, gate disjointness and
    /// unitarity, reporting every violation found.
    pub fn validate(&self) -> std::result::Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        let issue = |layer: Option<usize>, message: String| ValidationIssue { layer, message };
        if self.qubits == 0 || self.qubits > crate::state::MAX_QUBITS {
            issues.push(issue(None, format!("qubit count {} outside 1..={}", self.qubits, crate::state::MAX_QUBITS)));
        }
        if self.inputs == 0 || self.inputs > self.qubits {
            issues.push(issue(None, format!("input count {} must lie in 1..={}", self.inputs, self.qubits)));
        }
        if self.layers.len() % 2 == 0 {
            issues.push(issue(None, format!("{} layers; expected an odd count alternating single/multi", self.layers.len())));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let expect_single = i % 2 == 0;
            match layer {
                Layer::Single(s) => {
                    if !expect_single {
                        issues.push(issue(Some(i), "single-qubit layer where a multi-qubit layer was expected".into()));
                    }
                    for (q, g) in &s.gates {
                        if *q == 0 || *q > self.qubits {
                            issues.push(issue(Some(i), format!("gate on qubit {q} outside 1..={}", self.qubits)));
                        }
                        let r = unitarity_residual2(g);
                        if !(r < UNITARY_TOL) {
                            issues.push(issue(Some(i), format!("gate on qubit {q} is not unitary (residual {r:.3e})")));
                        }
                    }
                }
                Layer::Multi(m) => {
                    if expect_single {
                        issues.push(issue(Some(i), "multi-qubit layer where a single-qubit layer was expected".into()));
                    }
                    let mut seen = QubitSet::empty();
                    for g in &m.gates {
                        if let Some(q) = g.max_label().filter(|&q| q > self.qubits) {
                            issues.push(issue(Some(i), format!("C-SIGN {g} uses qubit {q} outside 1..={}", self.qubits)));
                        }
                        let shared = seen.intersection(*g);
                        if !shared.is_empty() {
                            issues.push(issue(Some(i), format!("C-SIGN {g} shares qubits {shared} with another gate in the layer")));
                        }
                        seen = seen.union(*g);
                    }
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.validate().map_err(QacError::Validation)?;
        Ok(self)
    }
}

fn apply_layer(amps: &mut [C64], m: usize, layer: &Layer) {
    match layer {
        Layer::Single(s) => {
            for (q, g) in &s.gates {
                apply_1q_inplace(amps, m, *q, g);
            }
        }
        Layer::Multi(ml) => {
            for g in &ml.gates {
                phase_all_ones_inplace(amps, g.index_mask(m), C64::new(-1.0, 0.0));
            }
        }
    }
}

fn check_input(c: &QacCircuit, input: &QuantumState) -> Result<()> {
    if input.num_qubits() != c.qubits {
        return Err(QacError::DimensionMismatch { expected: c.qubits, found: input.num_qubits() });
    }
    let out_of_range = c.layers.iter().find_map(|l| match l {
        Layer::Single(s) => s.gates.keys().copied().find(|&q| q == 0 || q > c.qubits),
        Layer::Multi(ml) => ml.gates.iter().filter_map(|g| g.max_label()).find(|&q| q > c.qubits),
    });
    if let Some(qubit) = out_of_range {
        return Err(QacError::QubitOutOfRange { qubit, n: c.qubits });
    }
    Ok(())
}

/// Runs the circuit left to right on `input` (an `m`-qubit state).
pub fn apply_circuit(c: &QacCircuit, input: &QuantumState) -> Result<QuantumState> {
    check_input(c, input)?;
    let mut amps = input.amplitudes().to_vec();
    for layer in &c.layers {
        apply_layer(&mut amps, c.qubits, layer);
    }
    Ok(QuantumState::from_raw(c.qubits, amps))
}

/// Every intermediate state of a circuit run.
#[derive(Clone, Debug)]
pub struct CircuitTrace {
    /// `states[i]` is the state after the first `i` entries of the layer list.
    pub states: Vec<QuantumState>,
    multi_positions: Vec<usize>,
}

impl CircuitTrace {
    pub fn input(&self) -> &QuantumState {
        &self.states[0]
    }

    pub fn output(&self) -> &QuantumState {
        self.states.last().expect("trace holds the input state")
    }

    /// State just before multi layer `j` (1-based).
    pub fn before_multi(&self, j: usize) -> Option<&QuantumState> {
        let pos = *self.multi_positions.get(j.checked_sub(1)?)?;
        self.states.get(pos)
    }

    /// State just after multi layer `j` (1-based).
    pub fn after_multi(&self, j: usize) -> Option<&QuantumState> {
        let pos = *self.multi_positions.get(j.checked_sub(1)?)?;
        self.states.get(pos + 1)
    }
}

pub fn trace_circuit(c: &QacCircuit, input: &QuantumState) -> Result<CircuitTrace> {
    check_input(c, input)?;
    let mut states = Vec::with_capacity(c.layers.len() + 1);
    let mut multi_positions = Vec::new();
    let mut amps = input.amplitudes().to_vec();
    states.push(input.clone());
    for (i, layer) in c.layers.iter().enumerate() {
        if matches!(layer, Layer::Multi(_)) {
            multi_positions.push(i);
        }
        apply_layer(&mut amps, c.qubits, layer);
        states.push(QuantumState::from_raw(c.qubits, amps.clone()));
    }
    Ok(CircuitTrace { states, multi_positions })
}

/// The inverse circuit: layers reversed, single-qubit gates replaced by
/// their adjoints (C-SIGN gates are self-inverse).
pub fn invert_circuit(c: &QacCircuit) -> QacCircuit {
    let layers = c
        .layers
        .iter()
        .rev()
        .map(|l| match l {
            Layer::Single(s) => Layer::Single(s.adjoint()),
            Layer::Multi(m) => Layer::Multi(m.clone()),
        })
        .collect();
    QacCircuit { qubits: c.qubits, inputs: c.inputs, layers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{hadamard, pauli_x};
    use crate::linalg::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> QubitSet {
        QubitSet::from_labels(v.iter().copied()).unwrap()
    }

    /// `H₁ · CSIGN({1,2}) · H₁`: a CNOT with target 1 and control 2.
    pub(crate) fn cnot_circuit() -> QacCircuit {
        let mut c = QacCircuit::new(2, 2);
        c.push_multi(vec![set(&[1, 2])]);
        c.set_single(0, 1, hadamard()).set_single(1, 1, hadamard());
        c
    }

    pub(crate) fn random_circuit(m: usize, n: usize, layers: &[Vec<QubitSet>], rng: &mut ChaCha8Rng) -> QacCircuit {
        let mut c = QacCircuit::new(m, n);
        for l in layers {
            c.push_multi(l.clone());
        }
        for k in 0..=layers.len() {
            for q in 1..=m {
                let u = haar_unitary(2, rng);
                c.set_single(k, q, Mat2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]));
            }
        }
        c
    }

    #[test]
    fn cnot_examples() {
        let c = cnot_circuit();
        assert_eq!(c.depth(), 1);
        let out = apply_circuit(&c, &QuantumState::from_bits("10").unwrap()).unwrap();
        assert!(out.distance(&QuantumState::from_bits("10").unwrap()).unwrap() < 1e-12);
        let out = apply_circuit(&c, &QuantumState::from_bits("11").unwrap()).unwrap();
        assert!(out.distance(&QuantumState::from_bits("01").unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = QacCircuit::new(3, 3);
        assert_eq!(c.depth(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = QuantumState::random(3, &mut rng);
        assert_eq!(apply_circuit(&c, &psi).unwrap(), psi);
    }

    #[test]
    fn validation_reports_each_problem() {
        let mut c = QacCircuit::new(4, 4);
        c.push_multi(vec![set(&[1, 3]), set(&[2, 3])]);
        let issues = c.validate().unwrap_err();
        assert_eq!(issues.len(), 1);
        assert!(issues[0].message.contains("shares"));
        assert_eq!(issues[0].layer, Some(1));

        let mut c = QacCircuit::new(2, 2);
        c.set_single(0, 1, Mat2::new(1.0.into(), 1.0.into(), 0.0.into(), 1.0.into()));
        let issues = c.validate().unwrap_err();
        assert!(issues[0].message.contains("not unitary"));

        let bad = QacCircuit {
            qubits: 2,
            inputs: 2,
            layers: vec![Layer::Multi(MultiLayer::new(vec![set(&[1, 2])]))],
        };
        assert!(bad.validate().is_err());

        let mut ok = QacCircuit::new(3, 3);
        ok.push_multi(vec![set(&[1, 2, 3])]).push_multi(vec![set(&[1, 2, 3])]);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn from_layers_normalizes_alternation() {
        let c = QacCircuit::from_layers(
            2,
            2,
            vec![
                Layer::Multi(MultiLayer::new(vec![set(&[1, 2])])),
                Layer::Multi(MultiLayer::new(vec![set(&[1, 2])])),
                Layer::Single(SingleLayer::new().with(1, pauli_x())),
                Layer::Single(SingleLayer::new().with(1, pauli_x())),
            ],
        );
        assert!(c.validate().is_ok());
        assert_eq!(c.depth(), 2);
        assert_eq!(c.layers.len(), 5);
        let last = c.single_layer(2).unwrap().gate(1);
        assert!((last - Mat2::identity()).norm() < 1e-15);
    }

    #[test]
    fn inversion_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_circuit(4, 3, &[vec![set(&[1, 2, 3]), set(&[4])], vec![set(&[1, 4]), set(&[2, 3])]], &mut rng);
        let inv = invert_circuit(&c);
        for _ in 0..20 {
            let psi = QuantumState::random(4, &mut rng);
            let back = apply_circuit(&inv, &apply_circuit(&c, &psi).unwrap()).unwrap();
            assert!(back.distance(&psi).unwrap() < 1e-9);
            let twice = apply_circuit(&invert_circuit(&inv), &psi).unwrap();
            assert!(twice.distance(&apply_circuit(&c, &psi).unwrap()).unwrap() < 1e-10);
        }
    }

    #[test]
    fn inverse_of_bare_csign_layer_is_itself() {
        let mut c = QacCircuit::new(3, 3);
        c.push_multi(vec![set(&[1, 2, 3])]);
        let inv = invert_circuit(&c);
        assert_eq!(inv.multi_layer(1), c.multi_layer(1));
    }

    #[test]
    fn trace_exposes_intermediate_states() {
        let c = cnot_circuit();
        let t = trace_circuit(&c, &QuantumState::from_bits("11").unwrap()).unwrap();
        assert_eq!(t.states.len(), 4);
        assert_eq!(t.before_multi(1).unwrap(), &t.states[1]);
        assert!(t.after_multi(2).is_none());
        assert!(t.output().distance(&QuantumState::from_bits("01").unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let c = cnot_circuit();
        assert!(matches!(
            apply_circuit(&c, &QuantumState::zero(3).unwrap()),
            Err(QacError::DimensionMismatch { .. })
        ));
    }
}
