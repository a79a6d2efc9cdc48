//! Checkers for the three amplitude equation systems closing the test-string
//! argument, and generators of instances satisfying them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QacError, Result};
use crate::state::C64;

type Pair = [C64; 2];
type Grid = [[C64; 2]; 2];

/// Amplitude tables for the four-, three- and two-set systems. Two-index
/// tables are indexed `x[j][k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum AppendixBValues {
    /// `a11·b11 = η·c11·d11` and `a_jk·b_ℓm = c_jℓ·d_km` whenever `jkℓm = 0`.
    FourSets { eta: C64, a: Grid, b: Grid, c: Grid, d: Grid },
    /// `a11·b1 = η·c1·d11` and `a_jk·b_m = c_j·d_km` whenever `jkm = 0`.
    ThreeSets { eta: C64, a: Grid, b: Pair, c: Pair, d: Grid },
    /// `a1·b1 = η·c1·d1` and `a_j·b_m = c_j·d_m` whenever `jm = 0`.
    TwoSets { eta: C64, a: Pair, b: Pair, c: Pair, d: Pair },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AppendixBCase {
    FourSets,
    ThreeSets,
    TwoSets,
}

impl std::str::FromStr for AppendixBCase {
    type Err = QacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "4" | "4sets" | "four-sets" => Ok(AppendixBCase::FourSets),
            "3" | "3sets" | "three-sets" => Ok(AppendixBCase::ThreeSets),
            "2" | "2sets" | "two-sets" => Ok(AppendixBCase::TwoSets),
            _ => Err(QacError::Parse { context: "case".into(), message: format!("unknown case {s:?}") }),
        }
    }
}

impl AppendixBValues {
    pub fn case(&self) -> AppendixBCase {
        match self {
            AppendixBValues::FourSets { .. } => AppendixBCase::FourSets,
            AppendixBValues::ThreeSets { .. } => AppendixBCase::ThreeSets,
            AppendixBValues::TwoSets { .. } => AppendixBCase::TwoSets,
        }
    }

    pub fn eta(&self) -> C64 {
        match self {
            AppendixBValues::FourSets { eta, .. }
            | AppendixBValues::ThreeSets { eta, .. }
            | AppendixBValues::TwoSets { eta, .. } => *eta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixBReport {
    pub case: AppendixBCase,
    /// Every hypothesis equation holds within the tolerance.
    pub hypotheses_ok: bool,
    /// The nonzero precondition on the `a`/`b` corner values holds.
    pub applicable: bool,
    /// The lemma's disjunction and final product equations hold.
    pub conclusion_ok: bool,
    pub hypotheses: Vec<Residual>,
    pub conclusions: Vec<Residual>,
}

struct Ledger {
    tol: f64,
    hypotheses: Vec<Residual>,
    conclusions: Vec<Residual>,
}

impl Ledger {
    fn hyp(&mut self, label: String, lhs: C64, rhs: C64) {
        self.hypotheses.push(Residual { label, value: (lhs - rhs).norm() });
    }

    fn zero(&mut self, label: String, value: C64) {
        self.conclusions.push(Residual { label, value: value.norm() });
    }

    fn small(&self, values: &[C64]) -> bool {
        values.iter().all(|v| v.norm() < self.tol)
    }

    fn all_below(&self, rs: &[Residual]) -> bool {
        rs.iter().all(|r| r.value < self.tol)
    }
}

pub fn check_appendix_b(v: &AppendixBValues, tol: f64) -> Result<AppendixBReport> {
    if !(tol > 0.0) {
        return Err(QacError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let eta = v.eta();
    if !eta.re.is_finite() || !eta.im.is_finite() || (eta - 1.0).norm() < tol {
        return Err(QacError::InvalidParameter(format!("eta must differ from 1, got {eta}")));
    }
    let mut l = Ledger { tol, hypotheses: Vec::new(), conclusions: Vec::new() };
    let (applicable, disjunction) = match v {
        AppendixBValues::FourSets { a, b, c, d, .. } => {
            for (j, k, p, m) in quads() {
                let rhs = c[j][p] * d[k][m];
                if j & k & p & m == 1 {
                    l.hyp("a11*b11 = eta*c11*d11".into(), a[1][1] * b[1][1], eta * rhs);
                } else {
                    l.hyp(format!("a{j}{k}*b{p}{m} = c{j}{p}*d{k}{m}"), a[j][k] * b[p][m], rhs);
                }
            }
            for r in 0..2 {
                for s in 0..2 {
                    l.zero(format!("a{r}0*b0{s}"), a[r][0] * b[0][s]);
                    l.zero(format!("a0{r}*b{s}0"), a[0][r] * b[s][0]);
                    l.zero(format!("c{r}0*d0{s}"), c[r][0] * d[0][s]);
                    l.zero(format!("c0{r}*d{s}0"), c[0][r] * d[s][0]);
                }
            }
            let c_off = l.small(&[c[0][0], c[0][1], c[1][0]]);
            let d_off = l.small(&[d[0][0], d[0][1], d[1][0]]);
            (!l.small(&[a[1][1]]) && !l.small(&[b[1][1]]), c_off || d_off)
        }
        AppendixBValues::ThreeSets { a, b, c, d, .. } => {
            for j in 0..2 {
                for k in 0..2 {
                    for m in 0..2 {
                        let rhs = c[j] * d[k][m];
                        if j & k & m == 1 {
                            l.hyp("a11*b1 = eta*c1*d11".into(), a[1][1] * b[1], eta * rhs);
                        } else {
                            l.hyp(format!("a{j}{k}*b{m} = c{j}*d{k}{m}"), a[j][k] * b[m], rhs);
                        }
                    }
                }
            }
            l.zero("a00*b0".into(), a[0][0] * b[0]);
            l.zero("c0*d00".into(), c[0] * d[0][0]);
            l.zero("a01*b0".into(), a[0][1] * b[0]);
            l.zero("c0*d10".into(), c[0] * d[1][0]);
            let disjunction = l.small(&[c[0]]) || l.small(&[d[0][0], d[1][0]]);
            (!l.small(&[a[1][1]]) && !l.small(&[b[1]]), disjunction)
        }
        AppendixBValues::TwoSets { a, b, c, d, .. } => {
            for j in 0..2 {
                for m in 0..2 {
                    let rhs = c[j] * d[m];
                    if j & m == 1 {
                        l.hyp("a1*b1 = eta*c1*d1".into(), a[1] * b[1], eta * rhs);
                    } else {
                        l.hyp(format!("a{j}*b{m} = c{j}*d{m}"), a[j] * b[m], rhs);
                    }
                }
            }
            l.zero("a0*b0".into(), a[0] * b[0]);
            l.zero("c0*d0".into(), c[0] * d[0]);
            (!l.small(&[a[1]]) && !l.small(&[b[1]]), true)
        }
    };
    Ok(AppendixBReport {
        case: v.case(),
        hypotheses_ok: l.all_below(&l.hypotheses),
        applicable,
        conclusion_ok: disjunction && l.all_below(&l.conclusions),
        hypotheses: l.hypotheses,
        conclusions: l.conclusions,
    })
}

fn quads() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16usize).map(|i| (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1))
}

/// A random instance satisfying every hypothesis equation with the nonzero
/// precondition active. Free values have modulus in `[0.5, 1.5]` and random
/// phase; `η` is a unit complex with angle in `[0.1π, 1.9π]`.
pub fn generate_appendix_b_instance(case: AppendixBCase, seed: u64) -> AppendixBValues {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = C64::from_polar(1.0, rng.random_range(0.1 * PI..1.9 * PI));
    let mut draw = || C64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..2.0 * PI));
    let zero = C64::new(0.0, 0.0);
    match case {
        AppendixBCase::FourSets => {
            // The c00 = c01 = c10 = 0 branch.
            let (a11, c11, d01, d10, d11) = (draw(), draw(), draw(), draw(), draw());
            let a = [[zero, zero], [a11 * d01 / (eta * d11), a11]];
            let b = [[zero, zero], [c11 * d10 / a11, eta * c11 * d11 / a11]];
            let c = [[zero, zero], [zero, c11]];
            let d = [[d01 * d10 / (eta * d11), d01], [d10, d11]];
            AppendixBValues::FourSets { eta, a, b, c, d }
        }
        AppendixBCase::ThreeSets => {
            // The d00 = d10 = 0 branch.
            let (a11, c0, c1, d01, d11) = (draw(), draw(), draw(), draw(), draw());
            let a = [[a11 * c0 * d01 / (eta * c1 * d11), a11 * c0 / (eta * c1)], [a11 * d01 / (eta * d11), a11]];
            let b = [zero, eta * c1 * d11 / a11];
            let c = [c0, c1];
            let d = [[zero, d01], [zero, d11]];
            AppendixBValues::ThreeSets { eta, a, b, c, d }
        }
        AppendixBCase::TwoSets => {
            let (a1, c1, d1, free) = (draw(), draw(), draw(), draw());
            if seed % 2 == 0 {
                // a0 = c0 = 0, d0 free.
                let d = [free, d1];
                AppendixBValues::TwoSets { eta, a: [zero, a1], b: [c1 * free / a1, eta * c1 * d1 / a1], c: [zero, c1], d }
            } else {
                // b0 = d0 = 0, c0 free.
                let c = [free, c1];
                AppendixBValues::TwoSets {
                    eta,
                    a: [a1 * free / (eta * c1), a1],
                    b: [zero, eta * c1 * d1 / a1],
                    c,
                    d: [zero, d1],
                }
            }
        }
    }
}
