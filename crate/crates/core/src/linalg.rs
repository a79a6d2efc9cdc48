//! Dense complex linear algebra: Schmidt coefficients across bipartitions,
//! numerical null spaces and Haar-random unitaries.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bits::QubitSet;
use crate::error::{QacError, Result};
use crate::state::{QuantumState, C64};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-9;

/// A subspace stored as an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<CVector>,
}

impl Subspace {
    /// Wraps vectors the caller guarantees to be orthonormal.
    pub(crate) fn from_orthonormal(ambient_dim: usize, basis: Vec<CVector>) -> Self {
        debug_assert!(basis.iter().all(|v| v.len() == ambient_dim));
        Subspace { ambient_dim, basis }
    }

    /// Wraps vectors after checking orthonormality to `1e-10`.
    pub fn new(ambient_dim: usize, basis: Vec<CVector>) -> Result<Self> {
        let space = Subspace { ambient_dim, basis };
        if let Some(bad) = space.basis.iter().find(|v| v.len() != ambient_dim) {
            return Err(QacError::DimensionMismatch { expected: ambient_dim, found: bad.len() });
        }
        let err = space.orthonormality_error();
        if err > 1e-10 {
            return Err(QacError::InvalidArgument(format!(
                "basis is not orthonormal (deviation {err:.3e})"
            )));
        }
        Ok(space)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in self.basis.iter().enumerate() {
            for (j, v) in self.basis.iter().enumerate().skip(i) {
                let g = u.dotc(v);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &CVector) -> f64 {
        let mut r = v.clone();
        for b in &self.basis {
            let coeff = b.dotc(v);
            r -= b * coeff;
        }
        r.norm()
    }
}

/// The `2^|A| × 2^|B|` matrix `M[a][b] = ⟨a ∪ b|ψ⟩`, with rows indexed by
/// the bits of `part_a` and columns by the complement (each in ascending
/// label order, smallest label most significant).
pub fn amplitude_matrix(state: &QuantumState, part_a: QubitSet) -> Result<CMatrix> {
    let n = state.num_qubits();
    let full = QubitSet::range(n);
    if part_a.is_empty() || !part_a.is_subset(full) || part_a == full {
        return Err(QacError::InvalidBipartition(format!(
            "part {part_a} must be a nonempty proper subset of {full}"
        )));
    }
    let part_b = full.difference(part_a);
    let a_labels = part_a.to_vec();
    let b_labels = part_b.to_vec();
    let rows = 1usize << a_labels.len();
    let cols = 1usize << b_labels.len();
    let mut m = CMatrix::zeros(rows, cols);
    for (x, amp) in state.amplitudes().iter().enumerate() {
        let r = gather(x, n, &a_labels);
        let c = gather(x, n, &b_labels);
        m[(r, c)] = *amp;
    }
    Ok(m)
}

/// Extracts the bits of `labels` from a basis index into a compact index.
pub(crate) fn gather(x: usize, n: usize, labels: &[usize]) -> usize {
    let k = labels.len();
    labels.iter().enumerate().fold(0, |acc, (pos, &q)| {
        if x & (1 << (n - q)) != 0 {
            acc | (1 << (k - 1 - pos))
        } else {
            acc
        }
    })
}

/// Schmidt coefficients of `state` across `part_a | complement`, descending.
pub fn schmidt_singular_values(state: &QuantumState, part_a: QubitSet) -> Result<Vec<f64>> {
    let m = amplitude_matrix(state, part_a)?;
    let mut values: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Best product approximation of `state` across `part_a | complement`.
#[derive(Clone, Debug)]
pub struct SchmidtSplit {
    /// Descending Schmidt coefficients.
    pub singular_values: Vec<f64>,
    /// Leading left singular vector: a unit state of the qubits in `A`.
    pub factor_a: CVector,
    /// Conjugated leading right singular vector: a unit state of `B`.
    pub factor_b: CVector,
}

pub fn schmidt_split(state: &QuantumState, part_a: QubitSet) -> Result<SchmidtSplit> {
    let m = amplitude_matrix(state, part_a)?;
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| QacError::Internal("SVD without U".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| QacError::Internal("SVD without Vᴴ".into()))?;
    let sv = &svd.singular_values;
    let lead = (0..sv.len())
        .max_by(|&i, &j| sv[i].total_cmp(&sv[j]))
        .ok_or_else(|| QacError::Internal("empty SVD".into()))?;
    let mut singular_values: Vec<f64> = sv.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let factor_a = u.column(lead).into_owned();
    // Rows of Vᴴ are already the conjugated right singular vectors.
    let factor_b = v_t.row(lead).transpose();
    Ok(SchmidtSplit { singular_values, factor_a, factor_b })
}

/// Orthonormal basis of the right null space `{v : m·v ≈ 0}`. A singular
/// value counts as zero when it is below `tol·σ_max` (or `tol` when `m = 0`).
pub fn null_space(m: &CMatrix, tol: f64) -> Result<Subspace> {
    if !(tol > 0.0) {
        return Err(QacError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Err(QacError::InvalidArgument("matrix has no columns".into()));
    }
    // Pad to at least square so the SVD yields a full set of right singular vectors.
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| QacError::Internal("SVD without Vᴴ".into()))?;
    let sv = svd.singular_values;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = if sigma_max > 0.0 { tol * sigma_max } else { tol };
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let basis = order
        .into_iter()
        .filter(|&i| sv[i] < threshold)
        .map(|i| v_t.row(i).transpose().map(|z| z.conj()))
        .collect();
    Ok(Subspace::from_orthonormal(cols, basis))
}

/// Largest entry of `|U·U† − I|` for a square matrix.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    (u * u.adjoint() - CMatrix::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Haar-random `dim × dim` unitary drawn from `rng`: QR of a complex
/// Gaussian matrix with the phases of `R`'s diagonal folded into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Seeded Haar-random unitary; identical seeds give identical matrices.
pub fn random_unitary_haar(dim: usize, seed: u64) -> Result<CMatrix> {
    if dim == 0 {
        return Err(QacError::InvalidArgument("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(haar_unitary(dim, &mut rng))
}

/// Kronecker product of square matrices, first factor most significant.
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn set(v: &[usize]) -> QubitSet {
        QubitSet::from_labels(v.iter().copied()).unwrap()
    }

    fn st(n: usize, amps: &[f64]) -> QuantumState {
        QuantumState::normalized(n, amps.iter().map(|&a| C64::new(a, 0.0)).collect()).unwrap()
    }

    #[test]
    fn schmidt_examples() {
        let bell = st(2, &[1.0, 0.0, 0.0, 1.0]);
        let sv = schmidt_singular_values(&bell, set(&[1])).unwrap();
        assert!(sv.iter().all(|s| (s - FRAC_1_SQRT_2).abs() < 1e-12));

        let prod = QuantumState::from_bits("01").unwrap();
        let sv = schmidt_singular_values(&prod, set(&[1])).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-12 && sv[1].abs() < 1e-12);

        let ghz = st(3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let sv = schmidt_singular_values(&ghz, set(&[1, 2])).unwrap();
        assert_eq!(sv.len(), 2);
        assert!(sv.iter().all(|s| (s - FRAC_1_SQRT_2).abs() < 1e-12));
    }

    #[test]
    fn schmidt_rejects_trivial_parts() {
        let s = QuantumState::zero(2).unwrap();
        assert!(matches!(schmidt_singular_values(&s, QubitSet::empty()), Err(QacError::InvalidBipartition(_))));
        assert!(matches!(schmidt_singular_values(&s, set(&[1, 2])), Err(QacError::InvalidBipartition(_))));
        assert!(schmidt_singular_values(&s, set(&[3])).is_err());
    }

    #[test]
    fn split_reconstructs_product_states() {
        let a = st(1, &[0.6, 0.8]);
        let b = st(2, &[0.5, 0.5, -0.5, 0.5]);
        let psi = a.tensor(&b).unwrap();
        let split = schmidt_split(&psi, set(&[1])).unwrap();
        let m = amplitude_matrix(&psi, set(&[1])).unwrap();
        let approx = &split.factor_a * split.factor_b.transpose();
        assert!((m - approx).norm() < 1e-12);
    }

    #[test]
    fn split_reconstructs_complex_product_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let a = QuantumState::random(2, &mut rng);
            let b = QuantumState::random(2, &mut rng);
            let psi = a.tensor(&b).unwrap();
            let split = schmidt_split(&psi, set(&[1, 2])).unwrap();
            let m = amplitude_matrix(&psi, set(&[1, 2])).unwrap();
            let approx = &split.factor_a * split.factor_b.transpose();
            assert!((m - approx).norm() < 1e-12);
        }
    }

    #[test]
    fn null_space_examples() {
        let m = CMatrix::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let ns = null_space(&m, RANK_TOL).unwrap();
        assert_eq!(ns.dim(), 1);
        let v = &ns.basis()[0];
        assert!((v[0] + v[1]).norm() < 1e-12);
        assert!((v[0].norm() - FRAC_1_SQRT_2).abs() < 1e-12);

        let z = CMatrix::zeros(2, 3);
        let ns = null_space(&z, RANK_TOL).unwrap();
        assert_eq!(ns.dim(), 3);
        assert!(ns.orthonormality_error() < 1e-12);

        assert!(null_space(&z, 0.0).is_err());
    }

    #[test]
    fn random_null_space_has_expected_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = CMatrix::from_fn(3, 8, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let ns = null_space(&m, RANK_TOL).unwrap();
        assert_eq!(ns.dim(), 5);
        let sigma_max = m.clone().svd(false, false).singular_values.max();
        for v in ns.basis() {
            assert!((&m * v).norm() < RANK_TOL * sigma_max);
        }
        assert!(ns.orthonormality_error() < 1e-10);
    }

    #[test]
    fn haar_examples() {
        let u1 = random_unitary_haar(1, 5).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-12);
        let u = random_unitary_haar(2, 7).unwrap();
        assert!(unitarity_residual(&u) < 1e-12);
        assert_eq!(u, random_unitary_haar(2, 7).unwrap());
        assert_ne!(u, random_unitary_haar(2, 8).unwrap());
        assert!(random_unitary_haar(0, 1).is_err());
    }

    #[test]
    fn subspace_checks_orthonormality() {
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(Subspace::new(2, vec![v]).is_err());
    }
}
