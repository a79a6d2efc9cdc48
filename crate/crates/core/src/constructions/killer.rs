use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::{BitString, QubitSet};
use crate::circuits::{trace_circuit, QacCircuit};
use crate::error::{QacError, Result};
use crate::gates::{parity_leakage, parity_subspace_basis, Mat2, StructuredGate};
use crate::linalg::{kron_all, null_space, unitarity_residual, CMatrix, CVector, RANK_TOL};
use crate::state::{QuantumState, C64};

/// A pure-parity state whose images under each `V_i = U_i⋯U_1` have no
/// weight on `|1…1⟩`.
#[derive(Clone, Debug, Serialize)]
pub struct KillerStateCertificate {
    pub state: QuantumState,
    pub parity: u8,
    /// `|⟨1^n|V_i|ψ⟩|` for `i = 1…k`, recomputed by applying `V_i`.
    pub residuals: Vec<f64>,
    pub parity_leakage: f64,
    pub null_space_dim: usize,
    pub tolerance: f64,
}

impl KillerStateCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn verified(&self) -> bool {
        self.max_residual() < self.tolerance
            && self.parity_leakage < self.tolerance
            && (self.state.norm() - 1.0).abs() < 1e-9
    }
}

pub(crate) fn mat2_to_cmatrix(g: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| g[(i, j)])
}

/// Finds a state of parity `b` that every `U_i⋯U_1` keeps off `|1^n⟩`.
pub fn kill_parity_state(unitaries: &[CMatrix], b: u8, tol: f64) -> Result<KillerStateCertificate> {
    let dim = unitaries.first().map(|u| u.nrows()).ok_or_else(|| {
        QacError::InvalidArgument("need the register size; pass at least one operator or use kill_parity_state_n".into())
    })?;
    if !dim.is_power_of_two() || dim < 2 {
        return Err(QacError::InvalidArgument(format!("operator dimension {dim} is not 2^n")));
    }
    kill_parity_state_n(dim.trailing_zeros() as usize, unitaries, b, tol)
}

/// [`kill_parity_state`] with an explicit register size, allowing `k = 0`.
pub fn kill_parity_state_n(n: usize, unitaries: &[CMatrix], b: u8, tol: f64) -> Result<KillerStateCertificate> {
    let basis = parity_subspace_basis(n, b)?;
    let dim = 1usize << n;
    let k = unitaries.len();
    if k >= dim / 2 {
        return Err(QacError::Precondition(format!("need k < 2^(n-1) = {}, got k = {k}", dim / 2)));
    }
    for (i, u) in unitaries.iter().enumerate() {
        if u.nrows() != dim || u.ncols() != dim {
            return Err(QacError::DimensionMismatch { expected: dim, found: u.nrows() });
        }
        let residual = unitarity_residual(u);
        if residual > crate::gates::UNITARY_TOL {
            return Err(QacError::Precondition(format!("operator {} is not unitary (residual {residual:.3e})", i + 1)));
        }
    }
    let parity_indices: Vec<usize> = (0..dim).filter(|x| (x.count_ones() & 1) as u8 == b).collect();
    debug_assert_eq!(parity_indices.len(), basis.dim());

    // V_i = U_i⋯U_1 and w_i = V_i†|1^n⟩ = conj of the last row of V_i.
    let mut prefixes = Vec::with_capacity(k);
    let mut v = CMatrix::identity(dim, dim);
    for u in unitaries {
        v = u * &v;
        prefixes.push(v.clone());
    }
    let constraints = CMatrix::from_fn(k, parity_indices.len(), |i, j| prefixes[i][(dim - 1, parity_indices[j])]);
    let (coefficients, null_dim) = if k == 0 {
        let mut e = CVector::zeros(parity_indices.len());
        e[0] = C64::new(1.0, 0.0);
        (e, parity_indices.len())
    } else {
        let ns = null_space(&constraints, RANK_TOL)?;
        let first = ns.basis().first().cloned().ok_or_else(|| {
            QacError::Internal(format!(
                "empty null space for a {k}x{} constraint matrix",
                parity_indices.len()
            ))
        })?;
        (first, ns.dim())
    };
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (j, &x) in parity_indices.iter().enumerate() {
        amps[x] = coefficients[j];
    }
    let state = QuantumState::normalized(n, amps)?;
    let psi = CVector::from_column_slice(state.amplitudes());
    let residuals = prefixes.iter().map(|v| (v * &psi)[dim - 1].norm()).collect();
    Ok(KillerStateCertificate {
        parity_leakage: parity_leakage(&state, b),
        state,
        parity: b,
        residuals,
        null_space_dim: null_dim,
        tolerance: tol,
    })
}

/// Killer state for three inputs sharing a gate in both layers of a depth-2
/// circuit, with the turn-off re-checked on the whole register.
#[derive(Clone, Debug, Serialize)]
pub struct DepthTwoKiller {
    pub qubits: [usize; 3],
    pub layer1_gate: QubitSet,
    pub layer2_gate: QubitSet,
    pub certificate: KillerStateCertificate,
    /// Largest `‖CSIGN(S_j)·φ − φ‖` over the checked completions, where `φ`
    /// is the global state just before multi layer `j`.
    pub layer1_turn_off: f64,
    pub layer2_turn_off: f64,
    pub completions_checked: usize,
    pub verified: bool,
}

/// Basis completions of `others`: every one when there are at most
/// `1 + extra` of them or `others` has at most `exhaustive_bits` qubits,
/// otherwise all-zeros plus `extra` seeded random ones.
pub(crate) fn completions(others: QubitSet, exhaustive_bits: usize, extra: usize, seed: u64) -> Vec<BitString> {
    let k = others.len();
    let labels = others.to_vec();
    let from_index = |idx: usize| {
        let ones = labels.iter().enumerate().filter(|(pos, _)| idx >> (k - 1 - pos) & 1 == 1).map(|(_, &q)| q);
        BitString::new(others, ones.collect()).expect("ones lie in the domain")
    };
    if k <= exhaustive_bits || (1usize << k) <= 1 + extra {
        return (0..1usize << k).map(from_index).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::once(0).chain((0..extra).map(|_| rng.random_range(0..1usize << k))).map(from_index).collect()
}

pub fn kill_parity_depth2(c: &QacCircuit, qubits: [usize; 3], b: u8, tol: f64) -> Result<DepthTwoKiller> {
    c.validate().map_err(QacError::Validation)?;
    if c.depth() != 2 {
        return Err(QacError::Precondition(format!("circuit has depth {}, expected 2", c.depth())));
    }
    let set = QubitSet::from_labels(qubits)?;
    if set.len() != 3 || qubits.iter().any(|&q| q > c.inputs) {
        return Err(QacError::Precondition(format!("{qubits:?} must be three distinct input qubits of 1..={}", c.inputs)));
    }
    let shared = |j: usize| -> Result<QubitSet> {
        c.multi_layer(j)
            .and_then(|ml| ml.gate_on(qubits[0]))
            .filter(|g| set.is_subset(*g))
            .ok_or_else(|| QacError::Precondition(format!("qubits {set} do not share a C-SIGN in layer {j}")))
    };
    let (g1, g2) = (shared(1)?, shared(2)?);
    let local = |k: usize| {
        let layer = c.single_layer(k).expect("depth-2 circuit has three single layers");
        kron_all(&qubits.map(|q| mat2_to_cmatrix(&layer.gate(q))))
    };
    let certificate = kill_parity_state(&[local(0), local(1)], b, tol)?;

    let others = QubitSet::range(c.qubits).difference(set);
    let rest = completions(others, 6, 16, 0);
    let mut turn_off = [0.0f64; 2];
    for r in &rest {
        let input = QuantumState::embed(&certificate.state, &qubits, c.qubits, r)?;
        let trace = trace_circuit(c, &input)?;
        for (j, g) in [(1, g1), (2, g2)] {
            let before = trace.before_multi(j).expect("depth 2");
            let moved = StructuredGate::csign(g).apply(before)?.distance(before)?;
            turn_off[j - 1] = turn_off[j - 1].max(moved);
        }
    }
    let verified = certificate.verified() && turn_off.iter().all(|&t| t < tol);
    Ok(DepthTwoKiller {
        qubits,
        layer1_gate: g1,
        layer2_gate: g2,
        certificate,
        layer1_turn_off: turn_off[0],
        layer2_turn_off: turn_off[1],
        completions_checked: rest.len(),
        verified,
    })
}
