//! Three-layer topologies where the middle gate shares qubits with gates on
//! both sides: if the middle gate does not simplify on the incoming state,
//! the state after it is entangled across the gate's qubits.

use proptest::prelude::*;
use qaclab::bits::QubitSet;
use qaclab::circuits::{trace_circuit, QacCircuit};
use qaclab::entanglement::{entanglement_lemma_check, s_separability, simplify_status, SimplifyStatus};
use qaclab::gates::Mat2;
use qaclab::linalg::haar_unitary;
use qaclab::state::{QuantumState, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn set(labels: &[usize]) -> QubitSet {
    QubitSet::from_labels(labels.iter().copied()).unwrap()
}

fn randomized(qubits: usize, layers: &[Vec<Vec<usize>>], seed: u64) -> QacCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = QacCircuit::new(qubits, qubits);
    for layer in layers {
        c.push_multi(layer.iter().map(|g| set(g)).collect());
    }
    for k in 0..=c.depth() {
        for q in 1..=qubits {
            let u = haar_unitary(2, &mut rng);
            c.set_single(k, q, Mat2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]));
        }
    }
    c
}

/// Counts (no-simplify inputs, violations) over every classical input.
fn scan(c: &QacCircuit, middle: QubitSet) -> (usize, usize) {
    let eta = C64::new(-1.0, 0.0);
    let (mut no_simplify, mut violations) = (0, 0);
    for x in 0..1usize << c.qubits {
        let trace = trace_circuit(c, &QuantumState::basis(c.qubits, x).unwrap()).unwrap();
        let before = trace.before_multi(2).unwrap();
        let after = trace.after_multi(2).unwrap();
        assert!(entanglement_lemma_check(before, middle, eta, 1e-9).unwrap().holds);
        if simplify_status(before, middle, eta, 1e-9).unwrap() == SimplifyStatus::NoSimplify {
            no_simplify += 1;
            violations += s_separability(after, middle, 1e-9).unwrap().separable as usize;
        }
    }
    (no_simplify, violations)
}

#[test]
fn five_qubit_bridge() {
    let layers = vec![vec![vec![1, 2], vec![3, 4, 5]], vec![vec![2, 3]], vec![vec![1, 2, 3], vec![4, 5]]];
    for seed in 0..10 {
        let (no_simplify, violations) = scan(&randomized(5, &layers, seed), set(&[2, 3]));
        assert!(no_simplify > 0);
        assert_eq!(violations, 0, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn six_qubit_bridge(seed: u64) {
        let layers = vec![vec![vec![1, 2, 3], vec![4, 5, 6]], vec![vec![2, 3, 4]], vec![vec![1, 2], vec![3, 4, 5, 6]]];
        let (_, violations) = scan(&randomized(6, &layers, seed), set(&[2, 3, 4]));
        prop_assert_eq!(violations, 0);
    }
}
