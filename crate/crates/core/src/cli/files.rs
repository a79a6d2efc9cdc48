//! JSON formats read and written by the command-line tool.
//!
//! Circuit file:
//!
//! ```json
//! {"qubits": 3, "inputs": 3, "layers": [
//!   {"kind": "single", "gates": [{"q": 1, "matrix": [[0.7, 0], [0.7, 0], [0.7, 0], [-0.7, 0]]},
//!                                {"q": 2, "zyz": [1.57, 1.57, 0, 3.14]}]},
//!   {"kind": "multi", "csign": [[1, 2, 3]]}
//! ]}
//! ```
//!
//! Matrices are row-major `[re, im]` pairs. Layers may also be written as
//! `{"single": [...gates]}` or `{"multi": [[1, 2]]}`; missing single layers
//! are filled with identities and adjacent single layers are merged.

use serde::Serialize;
use serde_json::Value;

use crate::bits::QubitSet;
use crate::circuits::{Layer, MultiLayer, QacCircuit, SingleLayer};
use crate::error::{QacError, Result};
use crate::gates::{check_unitary2, zyz, Mat2};
use crate::linalg::CMatrix;
use crate::state::{QuantumState, C64, MAX_QUBITS};

fn err(context: &str, message: impl Into<String>) -> QacError {
    QacError::Parse { context: context.to_string(), message: message.into() }
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| err(&format!("line {} column {}", e.line(), e.column()), e.to_string()))
}

fn field<'a>(obj: &'a Value, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(ctx, format!("missing field {key:?}")))
}

fn as_usize(v: &Value, ctx: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| err(ctx, format!("expected a non-negative integer, found {v}")))
}

fn as_f64(v: &Value, ctx: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| err(ctx, format!("expected a number, found {v}")))
}

fn as_array<'a>(v: &'a Value, ctx: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(ctx, format!("expected an array, found {v}")))
}

/// `[re, im]` or a bare real number.
fn as_complex(v: &Value, ctx: &str) -> Result<C64> {
    match v {
        Value::Array(p) if p.len() == 2 => Ok(C64::new(as_f64(&p[0], ctx)?, as_f64(&p[1], ctx)?)),
        Value::Number(_) => Ok(C64::new(as_f64(v, ctx)?, 0.0)),
        _ => Err(err(ctx, format!("expected [re, im], found {v}"))),
    }
}

fn as_labels(v: &Value, ctx: &str, qubits: usize) -> Result<QubitSet> {
    let mut set = QubitSet::empty();
    for (i, q) in as_array(v, ctx)?.iter().enumerate() {
        let ctx = format!("{ctx}[{i}]");
        let q = as_usize(q, &ctx)?;
        if q == 0 || q > qubits {
            return Err(err(&ctx, format!("qubit {q} outside 1..={qubits}")));
        }
        if set.contains(q) {
            return Err(err(&ctx, format!("qubit {q} repeated")));
        }
        set.insert(q);
    }
    Ok(set)
}

fn parse_gate(v: &Value, ctx: &str, qubits: usize) -> Result<(usize, Mat2)> {
    let q = as_usize(field(v, "q", ctx)?, &format!("{ctx}.q"))?;
    if q == 0 || q > qubits {
        return Err(err(&format!("{ctx}.q"), format!("qubit {q} outside 1..={qubits}")));
    }
    let gate = match (v.get("matrix"), v.get("zyz")) {
        (Some(m), None) => {
            let ctx = format!("{ctx}.matrix");
            let entries = as_array(m, &ctx)?;
            // Accept four flat entries or two rows of two.
            let flat: Vec<&Value> = if entries.len() == 2 && entries.iter().all(|r| r.as_array().is_some_and(|r| r.len() == 2 && r[0].is_array())) {
                entries.iter().flat_map(|r| r.as_array().expect("checked").iter()).collect()
            } else {
                entries.iter().collect()
            };
            if flat.len() != 4 {
                return Err(err(&ctx, format!("expected 4 entries, found {}", flat.len())));
            }
            let z = flat.iter().enumerate().map(|(i, e)| as_complex(e, &format!("{ctx}[{i}]"))).collect::<Result<Vec<_>>>()?;
            Mat2::new(z[0], z[1], z[2], z[3])
        }
        (None, Some(p)) => {
            let ctx = format!("{ctx}.zyz");
            let p = as_array(p, &ctx)?;
            if p.len() != 4 {
                return Err(err(&ctx, format!("expected [beta, theta, phi, lambda], found {} values", p.len())));
            }
            let p = p.iter().map(|x| as_f64(x, &ctx)).collect::<Result<Vec<_>>>()?;
            zyz(p[0], p[1], p[2], p[3])
        }
        _ => return Err(err(ctx, "gate needs exactly one of \"matrix\" or \"zyz\"")),
    };
    check_unitary2(&gate).map_err(|e| err(ctx, e.to_string()))?;
    Ok((q, gate))
}

fn parse_layer(v: &Value, ctx: &str, qubits: usize) -> Result<Layer> {
    let (kind, body) = match v.get("kind").and_then(Value::as_str) {
        Some("single") => ("single", field(v, "gates", ctx)?),
        Some("multi") => ("multi", field(v, "csign", ctx)?),
        Some(other) => return Err(err(&format!("{ctx}.kind"), format!("unknown layer kind {other:?}"))),
        None => match (v.get("single"), v.get("multi")) {
            (Some(g), None) => ("single", g),
            (None, Some(g)) => ("multi", g),
            _ => return Err(err(ctx, "layer needs \"kind\" or exactly one of \"single\"/\"multi\"")),
        },
    };
    let items = as_array(body, ctx)?;
    if kind == "single" {
        let mut layer = SingleLayer::new();
        for (i, g) in items.iter().enumerate() {
            let gctx = format!("{ctx}.gates[{i}]");
            let (q, gate) = parse_gate(g, &gctx, qubits)?;
            if layer.gates.insert(q, gate).is_some() {
                return Err(err(&gctx, format!("second gate on qubit {q} in one layer")));
            }
        }
        Ok(Layer::Single(layer))
    } else {
        let mut used = QubitSet::empty();
        let mut gates = Vec::new();
        for (i, g) in items.iter().enumerate() {
            let gctx = format!("{ctx}.csign[{i}]");
            let set = as_labels(g, &gctx, qubits)?;
            if !set.is_disjoint(used) {
                return Err(err(&gctx, format!("support {set} shares qubits with an earlier gate in this layer")));
            }
            used = used.union(set);
            gates.push(set);
        }
        Ok(Layer::Multi(MultiLayer::new(gates)))
    }
}

/// Parses and validates a circuit file.
pub fn parse_circuit_file(text: &str) -> Result<QacCircuit> {
    let v = parse_json(text)?;
    let qubits = as_usize(field(&v, "qubits", "circuit")?, "qubits")?;
    let inputs = as_usize(field(&v, "inputs", "circuit")?, "inputs")?;
    if qubits == 0 || qubits > MAX_QUBITS {
        return Err(err("qubits", format!("expected 1..={MAX_QUBITS}, found {qubits}")));
    }
    let layers = as_array(field(&v, "layers", "circuit")?, "layers")?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_layer(l, &format!("layers[{i}]"), qubits))
        .collect::<Result<Vec<_>>>()?;
    QacCircuit::from_layers(qubits, inputs, layers).validated()
}

#[derive(Serialize)]
struct GateFile {
    q: usize,
    matrix: [[f64; 2]; 4],
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LayerFile {
    Single { gates: Vec<GateFile> },
    Multi { csign: Vec<Vec<usize>> },
}

/// Canonical serializable form of a circuit; every stored single-qubit gate
/// is written as an explicit matrix.
#[derive(Serialize)]
pub struct CircuitFile {
    qubits: usize,
    inputs: usize,
    layers: Vec<LayerFile>,
}

impl From<&QacCircuit> for CircuitFile {
    fn from(c: &QacCircuit) -> Self {
        let layers = c
            .layers
            .iter()
            .map(|l| match l {
                Layer::Single(s) => LayerFile::Single {
                    gates: s
                        .gates
                        .iter()
                        .map(|(&q, g)| {
                            let e = [g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]];
                            GateFile { q, matrix: e.map(|z| [z.re, z.im]) }
                        })
                        .collect(),
                },
                Layer::Multi(m) => LayerFile::Multi { csign: m.gates.iter().map(|g| g.to_vec()).collect() },
            })
            .collect();
        CircuitFile { qubits: c.qubits, inputs: c.inputs, layers }
    }
}

/// Pretty-printed canonical circuit file text, newline-terminated.
pub fn write_circuit_file(c: &QacCircuit) -> String {
    let mut s = serde_json::to_string_pretty(&CircuitFile::from(c)).expect("circuit files always serialize");
    s.push('\n');
    s
}

/// State file: `{"qubits": n, "amplitudes": [[re, im], ...]}` (normalized),
/// `{"bits": "0110"}`, or the `{"n", "amps"}` form found in reports. With
/// `"normalize": true` the amplitudes are rescaled first.
pub fn parse_state_file(text: &str) -> Result<QuantumState> {
    let v = parse_json(text)?;
    parse_state_value(&v, "state")
}

pub(crate) fn parse_state_value(v: &Value, ctx: &str) -> Result<QuantumState> {
    if let Some(bits) = v.get("bits") {
        let bits = bits.as_str().ok_or_else(|| err(&format!("{ctx}.bits"), "expected a bit string"))?;
        return QuantumState::from_bits(bits).map_err(|e| err(&format!("{ctx}.bits"), e.to_string()));
    }
    let amps_key = if v.get("amps").is_some() { "amps" } else { "amplitudes" };
    let actx = format!("{ctx}.{amps_key}");
    let amps = as_array(field(v, amps_key, ctx)?, &actx)?
        .iter()
        .enumerate()
        .map(|(i, a)| as_complex(a, &format!("{actx}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let n = match v.get("qubits").or_else(|| v.get("n")) {
        Some(n) => as_usize(n, &format!("{ctx}.qubits"))?,
        None => amps.len().trailing_zeros() as usize,
    };
    let normalize = v.get("normalize").and_then(Value::as_bool).unwrap_or(false);
    let state = if normalize { QuantumState::normalized(n, amps) } else { QuantumState::new(n, amps) };
    state.map_err(|e| err(ctx, e.to_string()))
}

/// A list of square unitaries, each a list of rows of `[re, im]` entries;
/// either a bare array or `{"unitaries": [...]}`.
pub fn parse_unitaries_file(text: &str) -> Result<Vec<CMatrix>> {
    let v = parse_json(text)?;
    let list = match v.get("unitaries") {
        Some(u) => as_array(u, "unitaries")?,
        None => as_array(&v, "unitaries")?,
    };
    list.iter().enumerate().map(|(i, m)| parse_matrix(m, &format!("unitaries[{i}]"))).collect()
}

pub(crate) fn parse_matrix(v: &Value, ctx: &str) -> Result<CMatrix> {
    let rows = as_array(v, ctx)?;
    let dim = rows.len();
    let mut out = CMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        let rctx = format!("{ctx}[{i}]");
        let row = as_array(row, &rctx)?;
        if row.len() != dim {
            return Err(err(&rctx, format!("expected {dim} entries, found {}", row.len())));
        }
        for (j, e) in row.iter().enumerate() {
            out[(i, j)] = as_complex(e, &format!("{rctx}[{j}]"))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::hadamard;

    #[test]
    fn minimal_file() {
        let c = parse_circuit_file(r#"{"qubits": 2, "inputs": 2, "layers": [{"multi": [[1, 2]]}]}"#).unwrap();
        assert_eq!(c.depth(), 1);
        assert_eq!(c.multi_layer(1).unwrap().gates, vec![QubitSet::from_labels([1, 2]).unwrap()]);
        assert_eq!(c.layers.len(), 3);
    }

    #[test]
    fn overlapping_supports_rejected() {
        let e = parse_circuit_file(r#"{"qubits": 3, "inputs": 3, "layers": [{"multi": [[1, 2], [2, 3]]}]}"#).unwrap_err();
        assert!(e.to_string().contains("layers[0].csign[1]"), "{e}");
    }

    #[test]
    fn zyz_slot_materializes() {
        let text = format!(
            r#"{{"qubits": 1, "inputs": 1, "layers": [{{"kind": "single", "gates": [{{"q": 1, "zyz": [{h}, {h}, 0, {p}]}}]}}]}}"#,
            h = std::f64::consts::FRAC_PI_2,
            p = std::f64::consts::PI
        );
        let c = parse_circuit_file(&text).unwrap();
        let g = c.single_layer(0).unwrap().gate(1);
        assert!((g * g.adjoint() - Mat2::identity()).norm() < 1e-12);
        assert!((g - hadamard()).norm() < 1e-12);
    }

    #[test]
    fn errors_carry_context() {
        let cases = [
            (r#"{"qubits": 2, "inputs": 2, "layers": [{"multi": [[1, 3]]}]}"#, "layers[0].csign[0][1]"),
            (r#"{"qubits": 2, "inputs": 2, "layers": [{"single": [{"q": 1, "matrix": [1, 1, 1, 1]}]}]}"#, "layers[0].gates[0]"),
            (r#"{"qubits": 2, "inputs": 2, "layers": [{"kind": "triple"}]}"#, "layers[0].kind"),
            ("{\"qubits\": 2,\n \"inputs\": }", "line 2"),
            (r#"{"qubits": 2, "layers": []}"#, "missing field \"inputs\""),
        ];
        for (text, needle) in cases {
            let e = parse_circuit_file(text).unwrap_err().to_string();
            assert!(e.contains(needle), "{e} lacks {needle}");
        }
        assert!(matches!(
            parse_circuit_file(r#"{"qubits": 2, "inputs": 3, "layers": []}"#),
            Err(QacError::Validation(_))
        ));
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let topo = "1,2,3;4|1,4".parse().unwrap();
        let c = crate::search::ParamCircuit::new(3, 4, topo).unwrap().randomized(11).to_circuit();
        let text = write_circuit_file(&c);
        let back = parse_circuit_file(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(write_circuit_file(&back), text);
    }

    #[test]
    fn states_and_unitaries() {
        let s = parse_state_file(r#"{"qubits": 1, "amplitudes": [[0.6, 0], [0, 0.8]]}"#).unwrap();
        assert_eq!(s.amplitudes()[1], C64::new(0.0, 0.8));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(parse_state_file(&json).unwrap(), s);
        assert_eq!(parse_state_file(r#"{"bits": "10"}"#).unwrap(), QuantumState::from_bits("10").unwrap());
        assert!(parse_state_file(r#"{"amplitudes": [1, 1]}"#).is_err());
        assert!(parse_state_file(r#"{"amplitudes": [1, 1], "normalize": true}"#).is_ok());
        let us = parse_unitaries_file(r#"{"unitaries": [[[[0,0],[1,0]],[[1,0],[0,0]]]]}"#).unwrap();
        assert_eq!(us.len(), 1);
        assert_eq!(us[0][(0, 1)], C64::new(1.0, 0.0));
        assert!(parse_unitaries_file(r#"[[[1, 0]]]"#).unwrap_err().to_string().contains("unitaries[0][0]"));
    }
}
