//! Qubit label sets and partial bit strings.
//!
//! Qubits are labeled `1..=64`. A [`QubitSet`] is a bitmask over labels and a
//! [`BitString`] is a 0/1-valued map whose domain is an arbitrary label set,
//! so restriction `x|S` and the disjoint union `y ∪ z` are cheap mask
//! operations.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QacError, Result};

/// Largest qubit label a [`QubitSet`] can hold.
pub const MAX_LABEL: usize = 64;

/// A set of 1-based qubit labels.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct QubitSet(u64);

impl QubitSet {
    pub const fn empty() -> Self {
        QubitSet(0)
    }

    /// `{1, ..., n}`.
    pub fn range(n: usize) -> Self {
        assert!(n <= MAX_LABEL, "at most {MAX_LABEL} qubits");
        if n == 64 {
            QubitSet(u64::MAX)
        } else {
            QubitSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(q: usize) -> Self {
        assert!((1..=MAX_LABEL).contains(&q), "qubit label {q} out of range");
        QubitSet(1 << (q - 1))
    }

    /// Builds a set from labels, rejecting 0 and labels above [`MAX_LABEL`].
    /// Duplicates are merged.
    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Result<Self> {
        let mut set = QubitSet::empty();
        for q in labels {
            if q == 0 || q > MAX_LABEL {
                return Err(QacError::InvalidArgument(format!(
                    "qubit label {q} is outside 1..={MAX_LABEL}"
                )));
            }
            set.0 |= 1 << (q - 1);
        }
        Ok(set)
    }

    pub const fn from_mask(mask: u64) -> Self {
        QubitSet(mask)
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub fn contains(self, q: usize) -> bool {
        (1..=MAX_LABEL).contains(&q) && self.0 & (1 << (q - 1)) != 0
    }

    pub fn insert(&mut self, q: usize) {
        *self = self.union(QubitSet::singleton(q));
    }

    pub fn remove(&mut self, q: usize) {
        if (1..=MAX_LABEL).contains(&q) {
            self.0 &= !(1 << (q - 1));
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        QubitSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        QubitSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        QubitSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Largest label in the set.
    pub fn max_label(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(64 - self.0.leading_zeros() as usize)
        }
    }

    pub fn min_label(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize + 1)
        }
    }

    /// Labels in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(bit + 1)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Mask of the bits this set occupies in a basis index of an `n`-qubit
    /// register (qubit 1 is the most significant bit).
    pub fn index_mask(self, n: usize) -> usize {
        self.iter()
            .filter(|&q| q <= n)
            .fold(0usize, |acc, q| acc | (1 << (n - q)))
    }

    /// Lexicographic comparison of the ascending label lists.
    pub fn lex_cmp(self, other: Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, q) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for QubitSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for QubitSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(deserializer)?;
        QubitSet::from_labels(labels).map_err(serde::de::Error::custom)
    }
}

impl FromIterator<usize> for QubitSet {
    /// Panics on labels outside `1..=64`; use [`QubitSet::from_labels`] for
    /// untrusted input.
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        QubitSet::from_labels(iter).expect("qubit labels must lie in 1..=64")
    }
}

/// A 0/1-valued string whose domain is a set of qubit labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    domain: QubitSet,
    ones: QubitSet,
}

impl BitString {
    /// Builds a string from its domain and the subset of positions holding 1.
    pub fn new(domain: QubitSet, ones: QubitSet) -> Result<Self> {
        if !ones.is_subset(domain) {
            return Err(QacError::InvalidArgument(format!(
                "positions {ones} are not inside the domain {domain}"
            )));
        }
        Ok(BitString { domain, ones })
    }

    /// The constant-1 string on `domain`.
    pub fn all_ones(domain: QubitSet) -> Self {
        BitString { domain, ones: domain }
    }

    pub fn all_zeros(domain: QubitSet) -> Self {
        BitString { domain, ones: QubitSet::empty() }
    }

    /// The full-domain string `[n] → {0,1}` of basis index `index`
    /// (qubit 1 is the most significant bit).
    pub fn from_index(index: usize, n: usize) -> Self {
        let ones = (1..=n).filter(|&q| index & (1 << (n - q)) != 0).collect();
        BitString { domain: QubitSet::range(n), ones }
    }

    /// Parses a string such as `"0110"` as the full-domain string on `[len]`.
    pub fn parse(text: &str) -> Result<Self> {
        let n = text.chars().count();
        if n == 0 || n > MAX_LABEL {
            return Err(QacError::InvalidArgument(format!("bit string length {n} not in 1..=64")));
        }
        let mut ones = QubitSet::empty();
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => ones.insert(i + 1),
                other => {
                    return Err(QacError::InvalidArgument(format!(
                        "unexpected character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(BitString { domain: QubitSet::range(n), ones })
    }

    pub fn domain(&self) -> QubitSet {
        self.domain
    }

    /// Positions holding a 1.
    pub fn ones(&self) -> QubitSet {
        self.ones
    }

    /// Positions holding a 0.
    pub fn zeros(&self) -> QubitSet {
        self.domain.difference(self.ones)
    }

    pub fn get(&self, q: usize) -> Option<u8> {
        if self.domain.contains(q) {
            Some(u8::from(self.ones.contains(q)))
        } else {
            None
        }
    }

    pub fn set(&mut self, q: usize, value: bool) -> Result<()> {
        if !self.domain.contains(q) {
            return Err(QacError::InvalidArgument(format!("qubit {q} outside domain {}", self.domain)));
        }
        if value {
            self.ones.insert(q);
        } else {
            self.ones.remove(q);
        }
        Ok(())
    }

    /// `x|S`; `S` must be contained in the domain.
    pub fn restrict(&self, s: QubitSet) -> Result<Self> {
        if !s.is_subset(self.domain) {
            return Err(QacError::InvalidArgument(format!(
                "cannot restrict a string on {} to {s}",
                self.domain
            )));
        }
        Ok(BitString { domain: s, ones: self.ones.intersection(s) })
    }

    /// `y ∪ z`, defined only for disjoint domains.
    pub fn union(&self, other: &BitString) -> Result<Self> {
        if !self.domain.is_disjoint(other.domain) {
            return Err(QacError::InvalidArgument(format!(
                "string domains {} and {} overlap",
                self.domain, other.domain
            )));
        }
        Ok(BitString {
            domain: self.domain.union(other.domain),
            ones: self.ones.union(other.ones),
        })
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.ones.len()
    }

    /// `wt(x) mod 2`.
    pub fn parity(&self) -> u8 {
        (self.weight() % 2) as u8
    }

    /// Basis index in an `n`-qubit register; the domain must be `[n]`.
    pub fn to_index(&self, n: usize) -> Result<usize> {
        if self.domain != QubitSet::range(n) {
            return Err(QacError::InvalidArgument(format!(
                "string on {} is not a full {n}-qubit string",
                self.domain
            )));
        }
        Ok(self.ones.index_mask(n))
    }

    /// Index of this string inside the subsystem of the qubits in its domain,
    /// ordered by ascending label with the smallest label most significant.
    pub fn subsystem_index(&self) -> usize {
        let k = self.domain.len();
        self.domain
            .iter()
            .enumerate()
            .filter(|&(_, q)| self.ones.contains(q))
            .fold(0usize, |acc, (pos, _)| acc | (1 << (k - 1 - pos)))
    }
}

impl fmt::Display for BitString {
    /// Renders the values in ascending label order, e.g. `0110`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in self.domain.iter() {
            write!(f, "{}", u8::from(self.ones.contains(q)))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self} on {})", self.domain)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("BitString", 2)?;
        st.serialize_field("domain", &self.domain)?;
        st.serialize_field("bits", &self.to_string())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_convention_is_qubit_one_msb() {
        let x = BitString::parse("100").unwrap();
        assert_eq!(x.to_index(3).unwrap(), 4);
        assert_eq!(BitString::from_index(1, 3).to_string(), "001");
        assert_eq!(QubitSet::from_labels([1, 3]).unwrap().index_mask(3), 0b101);
    }

    #[test]
    fn restriction_and_union() {
        let x = BitString::parse("1011").unwrap();
        let a = QubitSet::from_labels([1, 2]).unwrap();
        let b = QubitSet::from_labels([3, 4]).unwrap();
        let xa = x.restrict(a).unwrap();
        let xb = x.restrict(b).unwrap();
        assert_eq!(xa.domain(), a);
        assert_eq!(xa.union(&xb).unwrap(), x);
        assert!(xa.union(&xa).is_err());
        assert!(xa.restrict(b).is_err());
    }

    #[test]
    fn weight_and_parity() {
        let x = BitString::parse("1101").unwrap();
        assert_eq!(x.weight(), 3);
        assert_eq!(x.parity(), 1);
        assert_eq!(BitString::all_ones(QubitSet::range(4)).parity(), 0);
    }

    #[test]
    fn subsystem_index_uses_ascending_labels() {
        let x = BitString::parse("0110").unwrap();
        let sub = x.restrict(QubitSet::from_labels([2, 4]).unwrap()).unwrap();
        assert_eq!(sub.to_string(), "10");
        assert_eq!(sub.subsystem_index(), 0b10);
    }

    #[test]
    fn lexicographic_order() {
        let s = |v: &[usize]| QubitSet::from_labels(v.iter().copied()).unwrap();
        assert_eq!(s(&[1]).lex_cmp(s(&[1, 2])), Ordering::Less);
        assert_eq!(s(&[1, 2]).lex_cmp(s(&[1, 3])), Ordering::Less);
        assert_eq!(s(&[1, 3]).lex_cmp(s(&[1, 2, 4])), Ordering::Greater);
    }

    #[test]
    fn bad_labels_rejected() {
        assert!(QubitSet::from_labels([0]).is_err());
        assert!(QubitSet::from_labels([65]).is_err());
        assert!(BitString::parse("01x").is_err());
    }
}
