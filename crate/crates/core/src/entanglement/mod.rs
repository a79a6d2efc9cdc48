//! S-separability, simplification of `G_η` gates, and the entanglement
//! lemma's three-way disjunction.

mod witness;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::QubitSet;
use crate::error::{QacError, Result};
use crate::gates::{check_eta, StructuredGate};
use crate::linalg::{gather, schmidt_singular_values, schmidt_split};
use crate::state::{QuantumState, C64};

pub use witness::{find_test_string_witness, AmplitudeTables, GluedStrings, SplitSets, TestStringBundle};

/// A product decomposition `ψ ≈ ψ_A ⊗ ψ_B`; each factor lists its qubits in
/// ascending label order.
#[derive(Clone, Debug, Serialize)]
pub struct ProductWitness {
    pub part_a: QubitSet,
    pub part_b: QubitSet,
    pub factor_a: QuantumState,
    pub factor_b: QuantumState,
    /// `‖ψ − ψ_A ⊗ ψ_B‖`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BipartitionEvidence {
    pub part_a: QubitSet,
    pub second_singular_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityResult {
    pub separable: bool,
    pub witness: Option<ProductWitness>,
    /// Every bipartition splitting `S`, in lexicographic order of `A`.
    pub evidence: Vec<BipartitionEvidence>,
}

fn check_set(state: &QuantumState, s: QubitSet) -> Result<()> {
    let n = state.num_qubits();
    match s.max_label() {
        Some(q) if q > n => Err(QacError::QubitOutOfRange { qubit: q, n }),
        _ => Ok(()),
    }
}

/// Bipartitions `(A, B)` of `[n]` with `1 ∈ A` and both sides meeting `s`,
/// sorted lexicographically by `A`.
pub fn splitting_bipartitions(n: usize, s: QubitSet) -> Vec<QubitSet> {
    let full = QubitSet::range(n);
    let mut parts: Vec<QubitSet> = (0..1u64 << (n - 1))
        .map(|r| QubitSet::from_mask(1 | (r << 1)))
        .filter(|a| *a != full && !a.intersection(s).is_empty() && !full.difference(*a).intersection(s).is_empty())
        .collect();
    parts.sort_by(|a, b| a.lex_cmp(*b));
    parts
}

/// Decides whether `state` factors across some bipartition that splits `s`.
pub fn s_separability(state: &QuantumState, s: QubitSet, tol: f64) -> Result<SeparabilityResult> {
    check_set(state, s)?;
    if s.len() < 2 {
        return Err(QacError::InvalidArgument(format!("S = {s} needs at least two qubits")));
    }
    let evidence = splitting_bipartitions(state.num_qubits(), s)
        .into_par_iter()
        .map(|a| {
            let sv = schmidt_singular_values(state, a)?;
            Ok(BipartitionEvidence { part_a: a, second_singular_value: sv.get(1).copied().unwrap_or(0.0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let witness = match evidence.iter().find(|e| e.second_singular_value < tol) {
        Some(e) => Some(product_witness(state, e.part_a)?),
        None => None,
    };
    Ok(SeparabilityResult { separable: witness.is_some(), witness, evidence })
}

/// Unit-norm factors of the best product approximation across `part_a`,
/// with the residual computed from the reassembled product.
pub fn product_witness(state: &QuantumState, part_a: QubitSet) -> Result<ProductWitness> {
    let n = state.num_qubits();
    let split = schmidt_split(state, part_a)?;
    let part_b = QubitSet::range(n).difference(part_a);
    let factor_a = QuantumState::normalized(part_a.len(), split.factor_a.iter().copied().collect())?;
    let factor_b = QuantumState::normalized(part_b.len(), split.factor_b.iter().copied().collect())?;
    let (la, lb) = (part_a.to_vec(), part_b.to_vec());
    let residual = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(x, amp)| {
            let p = factor_a.amplitudes()[gather(x, n, &la)] * factor_b.amplitudes()[gather(x, n, &lb)];
            (amp - p).norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    Ok(ProductWitness { part_a, part_b, factor_a, factor_b, residual })
}

/// What `G_η(S)` reduces to on a given state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SimplifyStatus {
    /// No weight on strings that are 1 throughout `S`; the gate acts trivially.
    Disappears,
    /// The qubits of `S ∖ t` are pinned to `|1⟩`, so the gate acts as `G_η(t)`.
    SimplifiesTo { t: QubitSet },
    NoSimplify,
}

impl SimplifyStatus {
    pub fn simplifies(&self) -> bool {
        !matches!(self, SimplifyStatus::NoSimplify)
    }
}

pub fn simplify_status(state: &QuantumState, s: QubitSet, eta: C64, tol: f64) -> Result<SimplifyStatus> {
    check_eta(eta)?;
    check_set(state, s)?;
    if s.is_empty() {
        return Err(QacError::InvalidArgument("S must be nonempty".into()));
    }
    let tol2 = tol * tol;
    if state.all_ones_mass(s) < tol2 {
        return Ok(SimplifyStatus::Disappears);
    }
    let n = state.num_qubits();
    let pinned: QubitSet = s
        .iter()
        .filter(|&q| {
            let bit = 1usize << (n - q);
            state.mass_where(|x| x & bit == 0) < tol2
        })
        .collect();
    Ok(if pinned.is_empty() {
        SimplifyStatus::NoSimplify
    } else {
        SimplifyStatus::SimplifiesTo { t: s.difference(pinned) }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntanglementLemmaReport {
    pub holds: bool,
    pub psi_entangled: bool,
    pub phi_entangled: bool,
    pub simplifies: bool,
    pub status: SimplifyStatus,
    pub psi: SeparabilityResult,
    /// Separability of `φ = G_η(S)|ψ⟩`.
    pub phi: SeparabilityResult,
}

/// Evaluates the three alternatives for `ψ` and `G_η(S)ψ`: `ψ` is
/// S-entangled, `G_ηψ` is S-entangled, or the gate simplifies on `ψ`.
pub fn entanglement_lemma_check(state: &QuantumState, s: QubitSet, eta: C64, tol: f64) -> Result<EntanglementLemmaReport> {
    if s.len() < 2 {
        return Err(QacError::InvalidArgument(format!("S = {s} needs at least two qubits")));
    }
    let status = simplify_status(state, s, eta, tol)?;
    let phi_state = StructuredGate::geta(s, eta).apply(state)?;
    let psi = s_separability(state, s, tol)?;
    let phi = s_separability(&phi_state, s, tol)?;
    let (psi_entangled, phi_entangled, simplifies) = (!psi.separable, !phi.separable, status.simplifies());
    Ok(EntanglementLemmaReport {
        holds: psi_entangled || phi_entangled || simplifies,
        psi_entangled,
        phi_entangled,
        simplifies,
        status,
        psi,
        phi,
    })
}
