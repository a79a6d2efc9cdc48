//! Test-string witnesses: given product decompositions of `ψ` across `(A, B)`
//! and of `φ` across `(C, D)`, build the string `y` with `⟨y|ψ⟩ ≠ 0` that the
//! amplitude equations force to vanish.

use serde::Serialize;

use super::{simplify_status, SimplifyStatus};
use crate::bits::{BitString, QubitSet};
use crate::constructions::{check_appendix_b, AppendixBReport, AppendixBValues};
use crate::error::{QacError, Result};
use crate::gates::{check_eta, StructuredGate};
use crate::linalg::{gather, schmidt_split};
use crate::state::{QuantumState, C64};

/// The four pieces of `S` cut out by the two bipartitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SplitSets {
    pub ac: QubitSet,
    pub ad: QubitSet,
    pub bc: QubitSet,
    pub bd: QubitSet,
}

impl SplitSets {
    fn new(s: QubitSet, a: QubitSet, b: QubitSet, c: QubitSet, d: QubitSet) -> Self {
        let cut = |x: QubitSet, y: QubitSet| s.intersection(x).intersection(y);
        SplitSets { ac: cut(a, c), ad: cut(a, d), bc: cut(b, c), bd: cut(b, d) }
    }

    fn all(&self) -> [QubitSet; 4] {
        [self.ac, self.ad, self.bc, self.bd]
    }

    fn empty_count(&self) -> usize {
        self.all().iter().filter(|x| x.is_empty()).count()
    }
}

/// `x^P_{jk}` for `P ∈ {A, B, C, D}`, indexed `[j][k]`.
#[derive(Clone, Debug, Serialize)]
pub struct GluedStrings {
    pub a: [[BitString; 2]; 2],
    pub b: [[BitString; 2]; 2],
    pub c: [[BitString; 2]; 2],
    pub d: [[BitString; 2]; 2],
}

/// `a_{jk} = ⟨x^A_{jk}|ψ_A⟩` and likewise for `b`, `c`, `d`.
#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeTables {
    pub a: [[C64; 2]; 2],
    pub b: [[C64; 2]; 2],
    pub c: [[C64; 2]; 2],
    pub d: [[C64; 2]; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct TestStringBundle {
    /// 1, 2 or 3: the number of empty sets among the four pieces, plus one.
    pub case: u8,
    /// Whether `A ↔ B` and `C ↔ D` were exchanged to bring the empty pieces
    /// into the standard positions (`S∩B∩C` in case 2; `S∩A∩D`, `S∩B∩C` in
    /// case 3).
    pub swapped_ab: bool,
    pub swapped_cd: bool,
    pub part_a: QubitSet,
    pub part_b: QubitSet,
    pub part_c: QubitSet,
    pub part_d: QubitSet,
    pub pieces: SplitSets,
    pub u: BitString,
    pub psi_u: C64,
    pub y: BitString,
    pub psi_y: C64,
    pub y_is_test_string: bool,
    pub glued: GluedStrings,
    /// `x^A_{jk} ∪ x^B_{ℓm} = x^C_{jℓ} ∪ x^D_{km}` for all sixteen index choices.
    pub gluing_ok: bool,
    pub amplitudes: AmplitudeTables,
    /// The case's equation system, written with `1/η` so that the `a·b`
    /// products sit on the `η` side.
    pub equations: AppendixBValues,
    pub equations_report: AppendixBReport,
    /// `‖φ − G_η(S)ψ‖`; large values mean `φ` is a hypothetical partner.
    pub phi_deviation: f64,
    /// `y` is a test string and `|⟨y|ψ⟩| ≥ tol`, although the equations force
    /// `⟨y|ψ⟩ = a_{00}b_{00} = 0` whenever `φ = G_ηψ`.
    pub contradiction_certified: bool,
}

struct Factor {
    labels: Vec<usize>,
    amps: Vec<C64>,
}

impl Factor {
    fn split(state: &QuantumState, part: QubitSet, name: &str, tol: f64) -> Result<(Factor, Factor)> {
        let n = state.num_qubits();
        let sp = schmidt_split(state, part)?;
        let second = sp.singular_values.get(1).copied().unwrap_or(0.0);
        if second >= tol {
            return Err(QacError::Precondition(format!(
                "{name} is not a product across {part} (second Schmidt value {second:.3e})"
            )));
        }
        let lead = sp.singular_values[0];
        let rest = QubitSet::range(n).difference(part);
        Ok((
            Factor { labels: part.to_vec(), amps: sp.factor_a.iter().map(|z| z * lead).collect() },
            Factor { labels: rest.to_vec(), amps: sp.factor_b.iter().copied().collect() },
        ))
    }

    /// Amplitude of the restriction of the full-register string `x`.
    fn at(&self, x: usize, n: usize) -> C64 {
        self.amps[gather(x, n, &self.labels)]
    }
}

/// Index of the first string maximizing `|ψ(x)|` among those satisfying `pred`.
fn best_string<F: Fn(usize) -> bool>(state: &QuantumState, pred: F) -> Option<(usize, f64)> {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(x, _)| pred(*x))
        .fold(None, |best: Option<(usize, f64)>, (x, a)| match best {
            Some((_, v)) if v >= a.norm() => best,
            _ => Some((x, a.norm())),
        })
}

pub fn find_test_string_witness(
    psi: &QuantumState,
    phi: &QuantumState,
    s: QubitSet,
    part_a: QubitSet,
    part_c: QubitSet,
    eta: C64,
    tol: f64,
) -> Result<TestStringBundle> {
    check_eta(eta)?;
    let n = psi.num_qubits();
    if phi.num_qubits() != n {
        return Err(QacError::DimensionMismatch { expected: n, found: phi.num_qubits() });
    }
    let full = QubitSet::range(n);
    if s.len() < 2 || !s.is_subset(full) {
        return Err(QacError::InvalidArgument(format!("S = {s} must hold at least two qubits of {full}")));
    }
    for (name, p) in [("A", part_a), ("C", part_c)] {
        if !p.is_subset(full) || p.intersection(s).is_empty() || s.difference(p).is_empty() {
            return Err(QacError::Precondition(format!("partition {name} = {p} does not split S = {s}")));
        }
    }
    let status = simplify_status(psi, s, eta, tol)?;
    if status != SimplifyStatus::NoSimplify {
        return Err(QacError::Precondition(format!("the gate simplifies on psi ({status:?})")));
    }
    let (mut fa, mut fb) = Factor::split(psi, part_a, "psi", tol)?;
    let (mut fc, mut fd) = Factor::split(phi, part_c, "phi", tol)?;
    let (mut a, mut b) = (part_a, full.difference(part_a));
    let (mut c, mut d) = (part_c, full.difference(part_c));

    // Bring the empty pieces into the standard positions.
    let raw = SplitSets::new(s, a, b, c, d);
    let (swap_ab, swap_cd) = match raw.empty_count() {
        0 => (false, false),
        1 if raw.ac.is_empty() => (true, false),
        1 if raw.ad.is_empty() => (true, true),
        1 if raw.bd.is_empty() => (false, true),
        1 => (false, false),
        2 if raw.ac.is_empty() && raw.bd.is_empty() => (false, true),
        2 if raw.ad.is_empty() && raw.bc.is_empty() => (false, false),
        k => return Err(QacError::Internal(format!("{k} empty pieces with both partitions splitting S"))),
    };
    if swap_ab {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    if swap_cd {
        std::mem::swap(&mut c, &mut d);
        std::mem::swap(&mut fc, &mut fd);
    }
    let pieces = SplitSets::new(s, a, b, c, d);
    let case = pieces.empty_count() as u8 + 1;

    let m = |set: QubitSet| set.index_mask(n);
    let s_mask = m(s);
    let (u, psi_u) = best_string(psi, |x| x & s_mask == s_mask)
        .filter(|&(_, v)| v >= tol)
        .ok_or_else(|| QacError::Precondition(format!("no string that is 1 on S has amplitude >= {tol:e}")))?;

    let zero_in = |set: QubitSet| {
        let mask = m(set);
        best_string(psi, move |x| x & mask != mask)
            .filter(|&(_, v)| v > 0.0)
            .map(|(x, _)| x)
            .ok_or_else(|| QacError::Precondition(format!("psi vanishes on every string with a 0 in {set}")))
    };
    let (mc, md) = (m(c), m(d));
    let y_a = match case {
        1 | 2 => (zero_in(pieces.ac)? & mc) | (zero_in(pieces.ad)? & md),
        _ => zero_in(s.intersection(a))?,
    };
    let y_b = match case {
        1 => (zero_in(pieces.bc)? & mc) | (zero_in(pieces.bd)? & md),
        _ => zero_in(s.intersection(b))?,
    };
    let y = (y_a & m(a)) | (y_b & m(b));
    let y_is_test_string = pieces.all().iter().all(|p| p.is_empty() || y & m(*p) != m(*p));

    // x^P_{jk}: first index toggles P's part in the first set of the other
    // bipartition, second index the part in the second set.
    let glue = |p: QubitSet, first: QubitSet, second: QubitSet, j: usize, k: usize| {
        let pick = |flag: usize, set: QubitSet| (if flag == 1 { u } else { y }) & m(p.intersection(set));
        pick(j, first) | pick(k, second)
    };
    let table = |p: QubitSet, first: QubitSet, second: QubitSet| {
        [[0, 1].map(|k| glue(p, first, second, 0, k)), [0, 1].map(|k| glue(p, first, second, 1, k))]
    };
    let (ga, gb, gc, gd) = (table(a, c, d), table(b, c, d), table(c, a, b), table(d, a, b));
    let mut gluing_ok = true;
    for i in 0..16usize {
        let (j, k, l, mm) = (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1);
        gluing_ok &= (ga[j][k] | gb[l][mm]) == (gc[j][l] | gd[k][mm]);
    }
    let amps = |f: &Factor, g: &[[usize; 2]; 2]| g.map(|row| row.map(|x| f.at(x, n)));
    let amplitudes = AmplitudeTables { a: amps(&fa, &ga), b: amps(&fb, &gb), c: amps(&fc, &gc), d: amps(&fd, &gd) };
    let bits = |p: QubitSet, g: &[[usize; 2]; 2]| g.map(|row| row.map(|x| restrict(x, p, n)));
    let glued = GluedStrings { a: bits(a, &ga), b: bits(b, &gb), c: bits(c, &gc), d: bits(d, &gd) };

    let inv = C64::new(1.0, 0.0) / eta;
    let t = &amplitudes;
    let equations = match case {
        1 => AppendixBValues::FourSets { eta: inv, a: t.a, b: t.b, c: t.c, d: t.d },
        2 => AppendixBValues::ThreeSets {
            eta: inv,
            a: t.a,
            b: [t.b[0][0], t.b[0][1]],
            c: [t.c[0][0], t.c[1][0]],
            d: t.d,
        },
        _ => AppendixBValues::TwoSets {
            eta: inv,
            a: [t.a[0][0], t.a[1][0]],
            b: [t.b[0][0], t.b[0][1]],
            c: [t.c[0][0], t.c[1][0]],
            d: [t.d[0][0], t.d[0][1]],
        },
    };
    let equations_report = check_appendix_b(&equations, tol)?;
    let psi_y = psi.amplitudes()[y];
    let phi_deviation = StructuredGate::geta(s, eta).apply(psi)?.distance(phi)?;
    Ok(TestStringBundle {
        case,
        swapped_ab: swap_ab,
        swapped_cd: swap_cd,
        part_a: a,
        part_b: b,
        part_c: c,
        part_d: d,
        pieces,
        u: BitString::from_index(u, n),
        psi_u: psi.amplitudes()[u],
        y: BitString::from_index(y, n),
        psi_y,
        y_is_test_string,
        glued,
        gluing_ok,
        amplitudes,
        equations,
        equations_report,
        phi_deviation,
        contradiction_certified: y_is_test_string && gluing_ok && psi_y.norm() >= tol && psi_u >= tol,
    })
}

fn restrict(x: usize, p: QubitSet, n: usize) -> BitString {
    BitString::from_index(x, n).restrict(p).expect("p lies inside the register")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::hadamard;

    fn set(v: &[usize]) -> QubitSet {
        QubitSet::from_labels(v.iter().copied()).unwrap()
    }

    fn plus(n: usize) -> QuantumState {
        let mut s = QuantumState::zero(n).unwrap();
        for q in 1..=n {
            s = crate::gates::apply_single_qubit(&s, &hadamard(), q).unwrap();
        }
        s
    }

    #[test]
    fn uniform_two_qubit_case_three() {
        let psi = plus(2);
        let w = find_test_string_witness(&psi, &psi, set(&[1, 2]), set(&[1]), set(&[1]), C64::new(-1.0, 0.0), 1e-9).unwrap();
        assert_eq!(w.case, 3);
        assert_eq!(w.u.to_string(), "11");
        assert_eq!(w.y.to_string(), "00");
        assert!((w.psi_y - C64::new(0.5, 0.0)).norm() < 1e-12);
        assert!(w.y_is_test_string && w.gluing_ok && w.contradiction_certified);
        // a0·b0 reproduces ⟨y|ψ⟩.
        if let AppendixBValues::TwoSets { a, b, .. } = w.equations {
            assert!((a[0] * b[0] - w.psi_y).norm() < 1e-12);
        } else {
            panic!("expected the two-set system");
        }
        // φ = ψ is not G_ηψ, so the equation system cannot hold.
        assert!(!w.equations_report.hypotheses_ok);
        assert!(w.phi_deviation > 0.1);
    }

    #[test]
    fn disappearing_gate_is_rejected() {
        let psi = QuantumState::zero(2).unwrap();
        let e = find_test_string_witness(&psi, &psi, set(&[1, 2]), set(&[1]), set(&[1]), C64::new(-1.0, 0.0), 1e-9);
        assert!(matches!(e, Err(QacError::Precondition(_))));
    }

    #[test]
    fn honest_partner_fails_product_check() {
        let psi = plus(2);
        let phi = StructuredGate::geta(set(&[1, 2]), C64::new(-1.0, 0.0)).apply(&psi).unwrap();
        let e = find_test_string_witness(&psi, &phi, set(&[1, 2]), set(&[1]), set(&[1]), C64::new(-1.0, 0.0), 1e-9);
        match e {
            Err(QacError::Precondition(msg)) => assert!(msg.contains("phi")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cases_one_and_two_from_product_states() {
        let psi = plus(4);
        let s = set(&[1, 2, 3, 4]);
        let eta = C64::new(0.0, 1.0);
        // A = {1,2}, C = {1,3}: all four pieces nonempty.
        let w = find_test_string_witness(&psi, &psi, s, set(&[1, 2]), set(&[1, 3]), eta, 1e-9).unwrap();
        assert_eq!(w.case, 1);
        assert!(w.contradiction_certified);
        // A = {1,2}, C = {1,2,3}: S∩B∩D = {4}, S∩B∩C = {3}, S∩A∩D = ∅.
        let w = find_test_string_witness(&psi, &psi, s, set(&[1, 2]), set(&[1, 2, 3]), eta, 1e-9).unwrap();
        assert_eq!(w.case, 2);
        assert!(w.swapped_ab && w.swapped_cd);
        assert!(w.pieces.bc.is_empty());
        assert!(w.contradiction_certified);
    }

    #[test]
    fn gluing_identity_needs_u_off_s() {
        // With the literal all-ones string in x^D_01, the identity breaks
        // off S as soon as u has a 0 there.
        let n = 4;
        let s = set(&[1, 2, 3]);
        let (a, b, c, d) = (set(&[1, 2]), set(&[3, 4]), set(&[1, 3]), set(&[2, 4]));
        let m = |p: QubitSet| p.index_mask(n);
        let (u, y) = (0b1110usize, 0b0000usize);
        let glue = |p: QubitSet, first: QubitSet, second: QubitSet, j: usize, k: usize, ones_for_d01: bool| {
            let pick = |flag: usize, set: QubitSet, lit: bool| {
                let src = if flag == 1 { if lit { usize::MAX } else { u } } else { y };
                src & m(p.intersection(set))
            };
            pick(j, first, false) | pick(k, second, ones_for_d01)
        };
        let mut literal_ok = true;
        let mut u_ok = true;
        for i in 0..16usize {
            let (j, k, l, mm) = (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1);
            let left = glue(a, c, d, j, k, false) | glue(b, c, d, l, mm, false);
            let right_u = glue(c, a, b, j, l, false) | glue(d, a, b, k, mm, false);
            let right_lit = glue(c, a, b, j, l, false) | glue(d, a, b, k, mm, k == 0 && mm == 1);
            u_ok &= left == right_u;
            literal_ok &= left == right_lit;
        }
        assert!(s.is_subset(QubitSet::range(n)));
        assert!(u_ok);
        assert!(!literal_ok);
    }
}
