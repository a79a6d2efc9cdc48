use std::path::Path;
use std::process::Command;

use qaclab::circuits::{apply_circuit, check_clean_simulation, CleanTarget};
use qaclab::cli::{parse_circuit_file, parse_state_file};
use qaclab::linalg::{random_unitary_haar, CMatrix, CVector};
use qaclab::state::{trace_distance_2x2, QuantumState};
use serde_json::{json, Value};
use tempfile::TempDir;

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn qaclab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qaclab")).args(args).output().expect("spawn qaclab");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).unwrap())
}

fn report(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let (code, stdout) = qaclab(&full);
    (code, serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("bad report ({e}): {stdout}")))
}

fn write(dir: &TempDir, name: &str, v: &Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn hadamard_json() -> Value {
    json!([[H, 0.0], [H, 0.0], [H, 0.0], [-H, 0.0]])
}

/// H(1) · CSIGN(gate) · H(1): a CNOT-style parity gadget on qubit 1.
fn gadget(qubits: usize, inputs: usize, gate: &[usize]) -> Value {
    json!({"qubits": qubits, "inputs": inputs, "layers": [
        {"single": [{"q": 1, "matrix": hadamard_json()}]},
        {"multi": [gate]},
        {"single": [{"q": 1, "matrix": hadamard_json()}]},
    ]})
}

fn state_from(v: &Value) -> QuantumState {
    parse_state_file(&v.to_string()).unwrap()
}

fn matrix_json(u: &CMatrix) -> Value {
    let rows: Vec<Value> =
        (0..u.nrows()).map(|i| (0..u.ncols()).map(|j| json!([u[(i, j)].re, u[(i, j)].im])).collect()).collect();
    Value::Array(rows)
}

#[test]
fn check_clean_accepts_two_qubit_parity() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cnot.json", &gadget(2, 2, &[1, 2]));
    let (code, r) = report(&["check-clean", &c]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "verified");
    assert!(r["result"]["max_distance"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["result"]["distances"].as_array().unwrap().len(), 4);
}

#[test]
fn check_clean_rejects_wrong_target() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cnot.json", &gadget(2, 2, &[1, 2]));
    let (code, r) = report(&["check-clean", &c, "--target", "fanout"]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"], "refuted");
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cnot.json", &gadget(2, 2, &[1, 2]));
    assert_eq!(qaclab(&["--bogus", "check-clean", &c]).0, 2);
    assert_eq!(qaclab(&["check-clean"]).0, 2);
    assert_eq!(qaclab(&["check-clean", "/nonexistent/circuit.json"]).0, 2);
    let bad = write(&dir, "bad.json", &json!({"qubits": 2, "amplitudes": [[1, 0]]}));
    let (code, r) = report(&["separability", &bad, "--set", "1,2"]);
    assert_eq!(code, 2);
    assert_eq!(r["verdict"], "error");
}

#[test]
fn reports_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "d1.json", &gadget(3, 3, &[1, 2, 3]));
    let runs: Vec<_> = (0..2).map(|_| qaclab(&["--json", "refute-depth1", &c])).collect();
    assert_eq!(runs[0], runs[1]);
    let a = qaclab(&["--json", "kill-parity", "--haar", "2", "--qubits", "3", "--seed", "7"]);
    let b = qaclab(&["--json", "kill-parity", "--haar", "2", "--qubits", "3", "--seed", "7"]);
    assert_eq!(a, b);
}

#[test]
fn timing_only_with_flag() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cnot.json", &gadget(2, 2, &[1, 2]));
    assert!(report(&["check-clean", &c]).1.get("wall_time_secs").is_none());
    assert!(report(&["--timing", "check-clean", &c]).1["wall_time_secs"].as_f64().is_some());
}

#[test]
fn refute_depth1_witness_rechecks() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "d1.json", &gadget(3, 3, &[1, 2, 3]));
    let (code, r) = report(&["refute-depth1", &c]);
    assert_eq!(code, 1);
    let res = &r["result"];
    assert_eq!(res["kind"], "killer-state");
    let circuit = parse_circuit_file(&std::fs::read_to_string(&c).unwrap()).unwrap();

    // The killer state lives on qubit 1 and the committed input and has even parity.
    let killer = state_from(&res["killer"]["state"]);
    assert!(killer.mass_where(|x| x.count_ones() % 2 == 1) < 1e-18);

    // Rebuild both inputs that differ only on the toggled qubit and confirm
    // qubit 1 ends in the same reduced state.
    let committed = res["committed"].as_u64().unwrap() as usize;
    let toggled = res["toggled"].as_u64().unwrap() as usize;
    let labels = [1, committed];
    let finals: Vec<_> = [0u8, 1]
        .iter()
        .map(|&t| {
            let mut amps = vec![qaclab::state::C64::new(0.0, 0.0); 8];
            for (i, a) in killer.amplitudes().iter().enumerate() {
                let mut x = 0usize;
                for (pos, &q) in labels.iter().enumerate() {
                    if i >> (labels.len() - 1 - pos) & 1 == 1 {
                        x |= 1 << (3 - q);
                    }
                }
                if t == 1 {
                    x |= 1 << (3 - toggled);
                }
                amps[x] = *a;
            }
            apply_circuit(&circuit, &QuantumState::new(3, amps).unwrap()).unwrap()
        })
        .collect();
    let d = trace_distance_2x2(&finals[0].reduced_qubit(1).unwrap(), &finals[1].reduced_qubit(1).unwrap());
    assert!(d < 1e-9, "trace distance {d}");
}

#[test]
fn separability_factors_rebuild_state() {
    let dir = TempDir::new().unwrap();
    let amps = json!([[0.5, 0], [0, 0.5], [0, 0], [0, 0], [0.5, 0], [0, 0.5], [0, 0], [0, 0]]);
    let s = write(&dir, "prod.json", &json!({"qubits": 3, "amplitudes": amps}));
    let (code, r) = report(&["separability", &s, "--set", "1,3"]);
    assert_eq!(code, 0);
    let w = &r["result"]["witness"];
    assert_eq!(w["part_a"], json!([1]));
    let rebuilt = state_from(&w["factor_a"]).tensor(&state_from(&w["factor_b"])).unwrap();
    let original = parse_state_file(&std::fs::read_to_string(&s).unwrap()).unwrap();
    assert!(rebuilt.distance(&original).unwrap() < 1e-12);

    let bell = write(&dir, "bell.json", &json!({"qubits": 2, "amplitudes": [[H, 0], [0, 0], [0, 0], [H, 0]]}));
    let (code, r) = report(&["separability", &bell, "--set", "1,2"]);
    assert_eq!(code, 1);
    assert_eq!(r["result"]["separable"], false);
}

#[test]
fn kill_parity_certificate_rechecks() {
    let dir = TempDir::new().unwrap();
    let us: Vec<CMatrix> = (0..3).map(|s| random_unitary_haar(16, 100 + s).unwrap()).collect();
    let file = write(&dir, "us.json", &json!({"unitaries": us.iter().map(matrix_json).collect::<Vec<_>>()}));
    for parity in ["0", "1"] {
        let (code, r) = report(&["kill-parity", &file, "--parity", parity]);
        assert_eq!(code, 0);
        let psi = state_from(&r["result"]["state"]);
        let want = parity.parse::<u32>().unwrap();
        let off_parity = psi.mass_where(|x| x.count_ones() % 2 != want);
        assert!(off_parity < 1e-18);
        let mut v = CVector::from_column_slice(psi.amplitudes());
        for u in &us {
            v = u * v;
            assert!(v[15].norm() < 1e-9);
        }
    }
}

#[test]
fn search_best_circuit_passes_check_clean() {
    let dir = TempDir::new().unwrap();
    let (code, r) = report(&["--restarts", "8", "search-depth2", "--topology", "1,2,3|1,2,3", "--inputs", "3"]);
    assert_eq!(code, 0);
    assert!(r["result"]["search"]["best_loss"].as_f64().unwrap() < 1e-8);
    let c = write(&dir, "best.json", &r["result"]["best_circuit"]);
    let (code, check) = report(&["--tol", "1e-4", "check-clean", &c]);
    assert_eq!(code, 0, "{check}");
    let circuit = parse_circuit_file(&std::fs::read_to_string(Path::new(&c)).unwrap()).unwrap();
    assert!(check_clean_simulation(&circuit, &CleanTarget::Parity, 1e-4).unwrap().passed);
}
