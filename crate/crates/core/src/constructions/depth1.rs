use serde::Serialize;

use super::killer::{completions, kill_parity_state, mat2_to_cmatrix, KillerStateCertificate};
use crate::bits::{BitString, QubitSet};
use crate::circuits::{apply_circuit, QacCircuit};
use crate::error::{QacError, Result};
use crate::linalg::kron_all;
use crate::state::{trace_distance_2x2, QuantumState};

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Depth1Outcome {
    Refuted(Depth1Witness),
    NotApplicable { reason: String },
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Depth1Witness {
    /// An input qubit sharing no gate with the target.
    Disconnected {
        qubit: usize,
        /// Target reduced-state trace distance between toggled values of
        /// `qubit`, per completion of the other qubits.
        trace_distances: Vec<f64>,
        max_trace_distance: f64,
        verified: bool,
    },
    /// The target and `committed` input start in a parity-0 state that keeps
    /// the target's gate from firing, so toggling `toggled` cannot reach the
    /// target.
    KillerState {
        gate: QubitSet,
        committed: usize,
        toggled: usize,
        killer: KillerStateCertificate,
        trace_distances: Vec<f64>,
        max_trace_distance: f64,
        /// Outputs for `toggled = 0` and `toggled = 1` with every other
        /// qubit in `|0⟩`.
        final_states: [QuantumState; 2],
        verified: bool,
    },
}

impl Depth1Witness {
    pub fn verified(&self) -> bool {
        match self {
            Depth1Witness::Disconnected { verified, .. } | Depth1Witness::KillerState { verified, .. } => *verified,
        }
    }
}

/// Runs `c` on `prefix ⊗ |toggle⟩ ⊗ rest` for both values of the toggled
/// qubit and returns the target reduced-state trace distance plus outputs.
fn toggle_target(
    c: &QacCircuit,
    prefix: &QuantumState,
    placed: &[usize],
    toggle: usize,
    rest: &BitString,
) -> Result<(f64, [QuantumState; 2])> {
    let mut labels = placed.to_vec();
    labels.push(toggle);
    let run = |bit: &str| -> Result<QuantumState> {
        let sub = prefix.tensor(&QuantumState::from_bits(bit)?)?;
        apply_circuit(c, &QuantumState::embed(&sub, &labels, c.qubits, rest)?)
    };
    let out = [run("0")?, run("1")?];
    let d = trace_distance_2x2(&out[0].reduced_qubit(1)?, &out[1].reduced_qubit(1)?);
    Ok((d, out))
}

/// Depth-1 circuits cannot compute parity of three or more inputs. Either an
/// input never meets the target, or a parity-0 state on the target and one
/// more input switches off the target's gate, making the target blind to a
/// third input.
pub fn refute_depth1(c: &QacCircuit, tol: f64) -> Result<Depth1Outcome> {
    c.validate().map_err(QacError::Validation)?;
    if c.depth() != 1 {
        return Err(QacError::Precondition(format!("circuit has depth {}, expected 1", c.depth())));
    }
    if c.inputs < 3 {
        return Ok(Depth1Outcome::NotApplicable { reason: format!("{} inputs; need at least 3", c.inputs) });
    }
    let m = c.qubits;
    let gate = c.multi_layer(1).and_then(|ml| ml.gate_on(1));
    let inputs = QubitSet::range(c.inputs);
    let reach = gate.unwrap_or(QubitSet::singleton(1));

    if let Some(q) = inputs.difference(reach).min_label() {
        let vacuum = QuantumState::zero(1)?;
        let others = QubitSet::range(m).difference(QubitSet::from_labels([1, q])?);
        let mut distances = Vec::new();
        for rest in completions(others, 0, 5, 0) {
            distances.push(toggle_target(c, &vacuum, &[1], q, &rest)?.0);
        }
        let max = distances.iter().copied().fold(0.0, f64::max);
        return Ok(Depth1Outcome::Refuted(Depth1Witness::Disconnected {
            qubit: q,
            trace_distances: distances,
            max_trace_distance: max,
            verified: max < tol,
        }));
    }

    let gate = reach;
    let mut partners = gate.intersection(inputs).difference(QubitSet::singleton(1)).iter();
    let (q2, q3) = match (partners.next(), partners.next()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(QacError::Internal("connected target gate lacks two partner inputs".into())),
    };
    let first = c.single_layer(0).expect("valid circuits start with a single layer");
    let u = kron_all(&[mat2_to_cmatrix(&first.gate(1)), mat2_to_cmatrix(&first.gate(q2))]);
    let killer = kill_parity_state(&[u], 0, tol)?;

    let others = QubitSet::range(m).difference(QubitSet::from_labels([1, q2, q3])?);
    let mut distances = Vec::new();
    let mut final_states = None;
    for rest in completions(others, 0, 5, 0) {
        let (d, out) = toggle_target(c, &killer.state, &[1, q2], q3, &rest)?;
        distances.push(d);
        final_states.get_or_insert(out);
    }
    let max = distances.iter().copied().fold(0.0, f64::max);
    let verified = killer.verified() && max < tol;
    Ok(Depth1Outcome::Refuted(Depth1Witness::KillerState {
        gate,
        committed: q2,
        toggled: q3,
        killer,
        trace_distances: distances,
        max_trace_distance: max,
        final_states: final_states.expect("at least the all-zeros completion"),
        verified,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::Mat2;
    use crate::linalg::haar_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> QubitSet {
        QubitSet::from_labels(v.iter().copied()).unwrap()
    }

    fn randomize(c: &mut QacCircuit, rng: &mut ChaCha8Rng) {
        for k in 0..=c.depth() {
            for q in 1..=c.qubits {
                let u = haar_unitary(2, rng);
                c.set_single(k, q, Mat2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]));
            }
        }
    }

    #[test]
    fn bare_gate_killer_is_zero_state() {
        let mut c = QacCircuit::new(3, 3);
        c.push_multi(vec![set(&[1, 2, 3])]);
        match refute_depth1(&c, 1e-9).unwrap() {
            Depth1Outcome::Refuted(Depth1Witness::KillerState { killer, committed, toggled, max_trace_distance, verified, .. }) => {
                assert_eq!(killer.state, QuantumState::zero(2).unwrap());
                assert_eq!((committed, toggled), (2, 3));
                assert!(max_trace_distance < 1e-12 && verified);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn haar_locals_on_four_qubit_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut c = QacCircuit::new(5, 4);
        c.push_multi(vec![set(&[1, 2, 3, 4]), set(&[5])]);
        randomize(&mut c, &mut rng);
        let out = refute_depth1(&c, 1e-9).unwrap();
        match out {
            Depth1Outcome::Refuted(w @ Depth1Witness::KillerState { .. }) => assert!(w.verified()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disconnected_input_is_reported() {
        let mut c = QacCircuit::new(3, 3);
        c.push_multi(vec![set(&[1, 2]), set(&[3])]);
        match refute_depth1(&c, 1e-9).unwrap() {
            Depth1Outcome::Refuted(Depth1Witness::Disconnected { qubit, verified, .. }) => {
                assert_eq!(qubit, 3);
                assert!(verified);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_or_deep_circuits() {
        let mut c = QacCircuit::new(2, 2);
        c.push_multi(vec![set(&[1, 2])]);
        assert!(matches!(refute_depth1(&c, 1e-9).unwrap(), Depth1Outcome::NotApplicable { .. }));
        c.push_multi(vec![set(&[1, 2])]);
        assert!(refute_depth1(&c, 1e-9).is_err());
    }

    #[test]
    fn random_connected_circuits_are_refuted() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..40 {
            let n = rng.random_range(3..=5);
            let m = rng.random_range(n..=6);
            // Random partition of [m] into gates; force the target's gate to hold ≥ 2 other inputs.
            let mut gates: Vec<QubitSet> = Vec::new();
            let mut target = set(&[1, 2, 3]);
            for q in 4..=m {
                if rng.random_bool(0.5) {
                    target.insert(q);
                } else if let Some(g) = gates.last_mut().filter(|_| rng.random_bool(0.5)) {
                    g.insert(q);
                } else {
                    gates.push(QubitSet::singleton(q));
                }
            }
            gates.push(target);
            let mut c = QacCircuit::new(m, n);
            c.push_multi(gates);
            randomize(&mut c, &mut rng);
            match refute_depth1(&c, 1e-9).unwrap() {
                Depth1Outcome::Refuted(w) => assert!(w.verified(), "{w:?}"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}
