use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::QubitSet;
use crate::error::{QacError, Result};

/// C-SIGN supports for each multi-qubit layer of a parametrized circuit.
///
/// Text form: layers separated by `|`, gates by `;`, labels by `,`, e.g.
/// `1,2,3;4,5|2,3,4`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Topology {
    layers: Vec<Vec<QubitSet>>,
}

impl Topology {
    /// Gates inside a layer are sorted by smallest label; supports in one
    /// layer must be disjoint.
    pub fn new(layers: Vec<Vec<QubitSet>>) -> Result<Self> {
        let mut layers = layers;
        for (j, layer) in layers.iter_mut().enumerate() {
            let mut used = QubitSet::empty();
            for g in layer.iter() {
                if g.is_empty() {
                    return Err(QacError::InvalidArgument(format!("multi layer {} has an empty support", j + 1)));
                }
                if !g.is_disjoint(used) {
                    return Err(QacError::InvalidArgument(format!("multi layer {}: supports overlap", j + 1)));
                }
                used = used.union(*g);
            }
            layer.sort_by_key(|g| g.min_label());
        }
        Ok(Topology { layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<QubitSet>] {
        &self.layers
    }

    /// Every qubit touched by some gate.
    pub fn used(&self) -> QubitSet {
        self.layers.iter().flatten().fold(QubitSet::empty(), |acc, g| acc.union(*g))
    }

    pub fn max_label(&self) -> Option<usize> {
        self.used().max_label()
    }

    /// Qubits whose initial value can influence qubit 1's final state.
    pub fn backward_cone(&self) -> QubitSet {
        let mut cone = QubitSet::singleton(1);
        for layer in self.layers.iter().rev() {
            for g in layer {
                if !g.is_disjoint(cone) {
                    cone = cone.union(*g);
                }
            }
        }
        cone
    }

    /// Every one of the first `n` qubits reaches the target.
    pub fn is_connected(&self, n: usize) -> bool {
        QubitSet::range(n).is_subset(self.backward_cone())
    }

    fn key(&self) -> Vec<Vec<u64>> {
        self.layers.iter().map(|l| l.iter().map(|g| g.mask()).sorted().collect()).collect()
    }

    fn relabel(&self, map: &[usize]) -> Topology {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut l: Vec<QubitSet> = l.iter().map(|g| g.iter().map(|q| map[q]).collect()).collect();
                l.sort_by_key(|g| g.min_label());
                l
            })
            .collect();
        Topology { layers }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = self
            .layers
            .iter()
            .map(|l| l.iter().map(|g| g.iter().join(",")).join(";"))
            .join("|");
        f.write_str(&text)
    }
}

impl FromStr for Topology {
    type Err = QacError;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |message: String| QacError::Parse { context: format!("topology {s:?}"), message };
        let mut layers = Vec::new();
        for layer in s.split('|') {
            let mut gates = Vec::new();
            for gate in layer.split(';').map(str::trim).filter(|g| !g.is_empty()) {
                let labels = gate
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| parse_err(format!("label {t:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if labels.iter().any(|&q| q == 0) {
                    return Err(parse_err("labels are 1-based".into()));
                }
                gates.push(QubitSet::from_labels(labels)?);
            }
            layers.push(gates);
        }
        Topology::new(layers)
    }
}

impl Serialize for Topology {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Topology {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All nonempty families of disjoint supports of size ≥ 2 inside `free`.
fn layer_options(free: QubitSet) -> Vec<Vec<QubitSet>> {
    fn go(free: QubitSet, acc: &mut Vec<QubitSet>, out: &mut Vec<Vec<QubitSet>>) {
        let Some(q) = free.min_label() else {
            if !acc.is_empty() {
                out.push(acc.clone());
            }
            return;
        };
        let rest = free.difference(QubitSet::singleton(q));
        go(rest, acc, out);
        let others = rest.to_vec();
        for mask in 1u64..(1 << others.len()) {
            let mut block = QubitSet::singleton(q);
            for (i, &r) in others.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    block.insert(r);
                }
            }
            acc.push(block);
            go(rest.difference(block), acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(free, &mut Vec::new(), &mut out);
    out
}

/// Two-layer topologies on `m` qubits with `n` inputs, one per class under
/// relabelling inputs `2..=n` and ancillas `n+1..=m` among themselves.
///
/// Kept: both layers nonempty, every gate acts on ≥ 2 qubits, every ancilla
/// is touched, and every input reaches qubit 1. Errors once more than `limit`
/// classes turn up.
pub fn enumerate_topologies(n: usize, m: usize, limit: Option<usize>) -> Result<Vec<Topology>> {
    if n < 2 || m < n {
        return Err(QacError::InvalidArgument(format!("need 2 <= n <= m, got n = {n}, m = {m}")));
    }
    let options = layer_options(QubitSet::range(m));
    let ancillas = QubitSet::range(m).difference(QubitSet::range(n));
    let relabellings: Vec<Vec<usize>> = (2..=n)
        .permutations(n - 1)
        .cartesian_product((n + 1..=m).permutations(m - n).collect::<Vec<_>>())
        .map(|(ins, anc)| std::iter::once(0).chain(std::iter::once(1)).chain(ins).chain(anc).collect())
        .collect();
    let mut classes: BTreeMap<Vec<Vec<u64>>, Topology> = BTreeMap::new();
    for l1 in &options {
        for l2 in &options {
            let t = Topology { layers: vec![l1.clone(), l2.clone()] };
            if !ancillas.is_subset(t.used()) || !t.is_connected(n) {
                continue;
            }
            let canon = relabellings.iter().map(|p| t.relabel(p)).min_by_key(|r| r.key()).expect("identity relabelling");
            classes.entry(canon.key()).or_insert(canon);
            if let Some(limit) = limit.filter(|&l| classes.len() > l) {
                return Err(QacError::Precondition(format!(
                    "more than {limit} canonical topologies at n = {n}, m = {m}; pass force to enumerate anyway"
                )));
            }
        }
    }
    Ok(classes.into_values().collect())
}
