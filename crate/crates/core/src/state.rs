//! Pure states of `n` labeled qubits as dense amplitude vectors.
//!
//! Basis index convention: qubit 1 is the most significant bit, so the index
//! of `|x₁…xₙ⟩` is `Σ xᵢ·2^(n−i)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bits::{BitString, QubitSet};
use crate::error::{QacError, Result};
use crate::gates::Mat2;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Norm tolerance accepted by [`QuantumState::new`].
pub const NORM_TOL: f64 = 1e-9;

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumState {
    n: usize,
    #[serde(serialize_with = "crate::state::serialize_amplitudes")]
    amps: Vec<C64>,
}

pub(crate) fn serialize_amplitudes<S: serde::Serializer>(
    amps: &[C64],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(amps.iter().map(|z| [z.re, z.im]))
}

impl QuantumState {
    /// Wraps an amplitude vector, checking its length and that it is
    /// normalized to within [`NORM_TOL`].
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1 << n {
            return Err(QacError::DimensionMismatch { expected: 1 << n, found: amps.len() });
        }
        let norm = l2(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QacError::NotNormalized { norm });
        }
        Ok(QuantumState { n, amps })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(n: usize, mut amps: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1 << n {
            return Err(QacError::DimensionMismatch { expected: 1 << n, found: amps.len() });
        }
        let norm = l2(&amps);
        if norm == 0.0 || !norm.is_finite() {
            return Err(QacError::NotNormalized { norm });
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(QuantumState { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        QuantumState { n, amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_size(n)?;
        if index >= 1 << n {
            return Err(QacError::InvalidArgument(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(QuantumState { n, amps })
    }

    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// Basis state from a bit pattern such as `"101"`.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let x = BitString::parse(bits)?;
        let n = x.domain().len();
        Self::basis(n, x.to_index(n)?)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(n, amps).expect("gaussian vector is nonzero")
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// `⟨x|ψ⟩` for a full-domain string `x`.
    pub fn amplitude(&self, x: &BitString) -> Result<C64> {
        Ok(self.amps[x.to_index(self.n)?])
    }

    pub fn norm(&self) -> f64 {
        l2(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        self.same_size(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &QuantumState) -> Result<f64> {
        self.same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Largest entrywise deviation `max |self_i − other_i|`.
    pub fn max_deviation(&self, other: &QuantumState) -> Result<f64> {
        self.same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `self ⊗ other`, with `self` on qubits `1..=n` and `other` on the rest.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        check_size(self.n + other.n)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(QuantumState { n: self.n + other.n, amps })
    }

    /// Places `sub` (a state of `labels.len()` qubits, in the order given by
    /// `labels`) into an `n`-qubit register whose remaining qubits are in the
    /// basis state given by `rest` (which must cover exactly the other qubits).
    pub fn embed(sub: &QuantumState, labels: &[usize], n: usize, rest: &BitString) -> Result<QuantumState> {
        check_size(n)?;
        let k = labels.len();
        if sub.n != k {
            return Err(QacError::DimensionMismatch { expected: k, found: sub.n });
        }
        let placed = QubitSet::from_labels(labels.iter().copied())?;
        if placed.len() != k || placed.max_label().is_some_and(|q| q > n) {
            return Err(QacError::InvalidArgument(format!(
                "labels {labels:?} must be distinct qubits of a {n}-qubit register"
            )));
        }
        if rest.domain() != QubitSet::range(n).difference(placed) {
            return Err(QacError::InvalidArgument(format!(
                "completion covers {} but must cover the qubits outside {placed}",
                rest.domain()
            )));
        }
        let base = rest.ones().index_mask(n);
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (j, a) in sub.amps.iter().enumerate() {
            let mut idx = base;
            for (pos, &q) in labels.iter().enumerate() {
                if j & (1 << (k - 1 - pos)) != 0 {
                    idx |= 1 << (n - q);
                }
            }
            amps[idx] = *a;
        }
        Ok(QuantumState { n, amps })
    }

    /// Squared amplitude mass on basis states satisfying `pred(index)`.
    pub fn mass_where<F: Fn(usize) -> bool>(&self, pred: F) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| pred(*i))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Mass on basis states whose bits are all 1 throughout `set`.
    pub fn all_ones_mass(&self, set: QubitSet) -> f64 {
        let mask = set.index_mask(self.n);
        self.mass_where(|i| i & mask == mask)
    }

    /// Reduced density matrix of a single qubit.
    pub fn reduced_qubit(&self, q: usize) -> Result<Mat2> {
        self.check_qubit(q)?;
        let bit = 1 << (self.n - q);
        let mut rho = Mat2::zeros();
        for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let a0 = self.amps[i];
            let a1 = self.amps[i | bit];
            rho[(0, 0)] += a0 * a0.conj();
            rho[(0, 1)] += a0 * a1.conj();
            rho[(1, 0)] += a1 * a0.conj();
            rho[(1, 1)] += a1 * a1.conj();
        }
        Ok(rho)
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q == 0 || q > self.n {
            return Err(QacError::QubitOutOfRange { qubit: q, n: self.n });
        }
        Ok(())
    }

    fn same_size(&self, other: &QuantumState) -> Result<()> {
        if self.n != other.n {
            return Err(QacError::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(QacError::InvalidArgument(format!(
            "register size {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn l2(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Applies `u` to qubit `q` of an `n`-qubit amplitude vector in place.
pub(crate) fn apply_1q_inplace(amps: &mut [C64], n: usize, q: usize, u: &Mat2) {
    let stride = 1usize << (n - q);
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let len = amps.len();
    let mut block = 0;
    while block < len {
        for i in block..block + stride {
            let a = amps[i];
            let b = amps[i + stride];
            amps[i] = u00 * a + u01 * b;
            amps[i + stride] = u10 * a + u11 * b;
        }
        block += 2 * stride;
    }
}

/// Multiplies by `factor` every amplitude whose bits are all 1 on `mask`.
pub(crate) fn phase_all_ones_inplace(amps: &mut [C64], mask: usize, factor: C64) {
    for (i, a) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *a *= factor;
        }
    }
}

/// Trace distance `½‖ρ − σ‖₁` of two 2×2 density matrices.
pub fn trace_distance_2x2(rho: &Mat2, sigma: &Mat2) -> f64 {
    let d = rho - sigma;
    // Hermitian 2×2: eigenvalues are (tr ± sqrt((d00 − d11)² + 4|d01|²)) / 2.
    let tr = (d[(0, 0)] + d[(1, 1)]).re;
    let gap = (d[(0, 0)] - d[(1, 1)]).re;
    let disc = (gap * gap + 4.0 * d[(0, 1)].norm_sqr()).sqrt();
    0.5 * (((tr + disc) / 2.0).abs() + ((tr - disc) / 2.0).abs())
}
