//! Hierarchy bound tables, the local and no-signaling oracles, the
//! correlation-tensor quantum bound and noise visibility.

pub mod lp;

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bell::BellFunctional;
use crate::measure::{product_expectation, Behavior};
use crate::qcore::{digits, paulis, singular_values, CMatrix};
use crate::states::LabeledState;
use crate::{Error, Result};

/// Exact constant `int + sqrt2·√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Surd {
    pub int: i64,
    pub sqrt2: i64,
}

impl Surd {
    pub const fn new(int: i64, sqrt2: i64) -> Self {
        Self { int, sqrt2 }
    }

    pub fn value(&self) -> f64 {
        self.int as f64 + self.sqrt2 as f64 * SQRT_2
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let radical = match self.sqrt2 {
            1 => "sqrt2".to_string(),
            -1 => "-sqrt2".to_string(),
            q => format!("{q}*sqrt2"),
        };
        match (self.int, self.sqrt2) {
            (p, 0) => write!(f, "{p}"),
            (0, _) => write!(f, "{radical}"),
            (p, q) if q > 0 => write!(f, "{p}+{radical}"),
            (p, _) => write!(f, "{p}{radical}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    FS,
    BQS,
    BS,
    Q,
    NS,
    #[serde(rename = "kNSQ")]
    KNSQ,
    #[serde(rename = "kNSC")]
    KNSC,
    #[serde(rename = "kQC")]
    KQC,
    C,
}

impl ClassLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FS => "FS",
            Self::BQS => "BQS",
            Self::BS => "BS",
            Self::Q => "Q",
            Self::NS => "NS",
            Self::KNSQ => "kNSQ",
            Self::KNSC => "kNSC",
            Self::KQC => "kQC",
            Self::C => "C",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFamily {
    Delta3,
    SvetlichnyChain,
    ChainNetwork,
}

/// Class label → exact bound for one inequality family and size.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundTable {
    pub family: TableFamily,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub entries: Vec<(ClassLabel, Surd)>,
}

impl BoundTable {
    pub fn get(&self, label: ClassLabel) -> Option<Surd> {
        self.entries.iter().find(|(l, _)| *l == label).map(|(_, s)| *s)
    }

    pub fn value(&self, label: ClassLabel) -> Option<f64> {
        self.get(label).map(|s| s.value())
    }

    /// Pairs (lower, upper) the hierarchy requires to be ordered.
    fn order_pairs(&self) -> &'static [(ClassLabel, ClassLabel)] {
        use ClassLabel::*;
        match self.family {
            TableFamily::Delta3 | TableFamily::SvetlichnyChain => {
                &[(FS, BQS), (BQS, BS), (BS, NS), (FS, Q), (Q, NS)]
            }
            TableFamily::ChainNetwork => {
                &[(C, KQC), (KQC, Q), (Q, KNSQ), (KNSQ, NS), (C, KNSC), (KNSC, KNSQ)]
            }
        }
    }

    /// Hierarchy pairs whose bounds are out of order.
    pub fn monotonicity_violations(&self) -> Vec<(ClassLabel, ClassLabel)> {
        self.order_pairs()
            .iter()
            .filter(|(lo, hi)| match (self.value(*lo), self.value(*hi)) {
                (Some(a), Some(b)) => a > b + 1e-12,
                _ => true,
            })
            .copied()
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .entries
            .iter()
            .map(|(l, s)| json!({ "class": l.as_str(), "symbolic": s.to_string(), "decimal": s.value() }))
            .collect();
        json!({ "family": self.family, "n": self.n, "k": self.k, "bounds": rows })
    }
}

/// Tripartite chained CHSH bounds.
pub fn delta3_bounds() -> BoundTable {
    use ClassLabel::*;
    BoundTable {
        family: TableFamily::Delta3,
        n: None,
        k: None,
        entries: vec![
            (FS, Surd::new(6, 0)),
            (BQS, Surd::new(4, 2)),
            (BS, Surd::new(8, 0)),
            (Q, Surd::new(0, 6)),
            (NS, Surd::new(12, 0)),
        ],
    }
}

/// Chained Svetlichny–Mermin bounds over n+1 parties.
pub fn svetlichny_chain_bounds(n: usize) -> Result<BoundTable> {
    use ClassLabel::*;
    if !(2..=40).contains(&n) {
        return Err(Error::Invalid(format!("n = {n} outside 2..=40")));
    }
    let n_i = n as i64;
    let h = 1i64 << (n - 1);
    Ok(BoundTable {
        family: TableFamily::SvetlichnyChain,
        n: Some(n),
        k: None,
        entries: vec![
            (FS, Surd::new((n_i + 1) * h, 0)),
            (BQS, Surd::new(n_i * h, h)),
            (BS, Surd::new((n_i + 2) * h, 0)),
            (Q, Surd::new(0, (n_i + 1) * h)),
            (NS, Surd::new((n_i + 1) * 2 * h, 0)),
        ],
    })
}

/// Chain-network bounds for n parties at hybrid level k.
pub fn chain_network_bounds(n: usize, k: usize) -> Result<BoundTable> {
    use ClassLabel::*;
    if n < 3 || k < 2 || k > n {
        return Err(Error::Invalid(format!("need n >= 3 and 2 <= k <= n, got n={n}, k={k}")));
    }
    let (n, k) = (n as i64, k as i64);
    Ok(BoundTable {
        family: TableFamily::ChainNetwork,
        n: Some(n as usize),
        k: Some(k as usize),
        entries: vec![
            (NS, Surd::new(4 * n - 4, 0)),
            (KNSQ, Surd::new(4 * k - 8, 2 * (n - k + 1))),
            (Q, Surd::new(0, 2 * (n - 1))),
            (KNSC, Surd::new(2 * n + 2 * k - 6, 0)),
            (KQC, Surd::new(2 * (n - k + 1), 2 * (k - 2))),
            (C, Surd::new(2 * n - 2, 0)),
        ],
    })
}

/// Labels whose bound is exceeded by `value`, sorted by bound.
pub fn classify(value: f64, table: &BoundTable) -> Vec<ClassLabel> {
    let mut out: Vec<(ClassLabel, f64)> = table
        .entries
        .iter()
        .map(|(l, s)| (*l, s.value()))
        .filter(|(_, b)| *b < value - crate::TOL)
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out.into_iter().map(|(l, _)| l).collect()
}

/// Pauli correlation tensor T[i₁…i_n] = Tr[ρ σ_{i₁}⊗…⊗σ_{i_n}], flattened with
/// the first index most significant.
pub fn correlation_tensor(state: &LabeledState) -> Result<Vec<f64>> {
    if !state.is_qubit_register() {
        return Err(Error::Invalid("correlation tensor needs one qubit per party".into()));
    }
    let n = state.n_parties();
    let p = paulis();
    let dims = vec![3; n];
    Ok((0..3usize.pow(n as u32))
        .map(|idx| {
            let ops: Vec<&CMatrix> = digits(idx, &dims).into_iter().map(|i| &p[i]).collect();
            product_expectation(state, &ops)
        })
        .collect())
}

/// 2^{n−1}·(largest singular value of the 3 × 3^{n−1} matricized tensor).
///
/// Bounds the Svetlichny value for n ≥ 3. At n = 2 it gives 2 on a Bell
/// pair, below the CHSH value 2√2.
pub fn svd_quantum_bound(state: &LabeledState) -> Result<f64> {
    let n = state.n_parties();
    if n < 2 {
        return Err(Error::Invalid("need at least two parties".into()));
    }
    let t = correlation_tensor(state)?;
    let cols = 3usize.pow(n as u32 - 1);
    let m = CMatrix::from_real(3, cols, &t)?;
    let s = singular_values(&m);
    Ok((1u64 << (n - 1)) as f64 * s[0])
}

/// Maximum over deterministic local strategies.
pub fn classical_bound_bruteforce(f: &BellFunctional) -> Result<f64> {
    let per_party = 1usize << f.m;
    let count = (per_party as f64).powi(f.n as i32);
    if count > 1e6 {
        return Err(Error::TooLarge(format!(
            "{count:.0} deterministic strategies for n={}, m={}",
            f.n, f.m
        )));
    }
    let w = f.probability_weights();
    let n_out = 1usize << f.n;
    let inputs: Vec<Vec<usize>> = (0..f.n_inputs()).map(|xi| digits(xi, &vec![f.m; f.n])).collect();
    let mut best = f64::NEG_INFINITY;
    for s in 0..count as usize {
        let strat = digits(s, &vec![per_party; f.n]);
        let mut v = 0.0;
        for (xi, x) in inputs.iter().enumerate() {
            let a = x.iter().enumerate().fold(0, |acc, (p, &xp)| (acc << 1) | ((strat[p] >> xp) & 1));
            v += w[xi * n_out + a];
        }
        best = best.max(v);
    }
    Ok(best)
}

/// Maximum of `f` over the no-signaling polytope.
pub fn ns_bound_lp(f: &BellFunctional) -> Result<f64> {
    if f.n > 4 {
        return Err(Error::TooLarge(format!("no-signaling LP for n={} parties", f.n)));
    }
    let (n, m) = (f.n, f.m);
    let n_out = 1usize << n;
    let n_in = f.n_inputs();
    let nvar = n_in * n_out;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for xi in 0..n_in {
        let mut r = vec![0.0; nvar];
        r[xi * n_out..(xi + 1) * n_out].iter_mut().for_each(|v| *v = 1.0);
        rows.push(r);
        rhs.push(1.0);
    }
    let xdims = vec![m; n];
    let adims = vec![2; n];
    let xindex = |x: &[usize]| x.iter().fold(0, |acc, &v| acc * m + v);
    let aindex = |a: &[usize]| a.iter().fold(0, |acc, &v| acc * 2 + v);
    for j in 0..n {
        for xi in 0..n_in {
            let x = digits(xi, &xdims);
            if x[j] != 0 {
                continue;
            }
            for alt in 1..m {
                let mut xa = x.clone();
                xa[j] = alt;
                for ai in 0..n_out {
                    let a = digits(ai, &adims);
                    if a[j] != 0 {
                        continue;
                    }
                    let mut r = vec![0.0; nvar];
                    for aj in 0..2 {
                        let mut az = a.clone();
                        az[j] = aj;
                        r[xindex(&x) * n_out + aindex(&az)] += 1.0;
                        r[xindex(&xa) * n_out + aindex(&az)] -= 1.0;
                    }
                    rows.push(r);
                    rhs.push(0.0);
                }
            }
        }
    }
    Ok(lp::maximize(&f.probability_weights(), &rows, &rhs)?.value)
}

/// The 24 extremal points of the two-party, two-setting no-signaling polytope:
/// 16 deterministic behaviors and 8 PR boxes.
pub fn bipartite_ns_vertices() -> Vec<Behavior> {
    let mut out = Vec::with_capacity(24);
    for s in 0..16usize {
        let strat = vec![vec![s & 1, (s >> 1) & 1], vec![(s >> 2) & 1, (s >> 3) & 1]];
        out.push(Behavior::deterministic(2, 2, &strat));
    }
    for (alpha, beta, gamma) in (0..8usize).map(|v| ((v >> 2) & 1, (v >> 1) & 1, v & 1)) {
        let mut t = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        if a ^ b == (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma {
                            t[(x * 2 + y) * 4 + a * 2 + b] = 0.5;
                        }
                    }
                }
            }
        }
        out.push(Behavior { n: 2, m: 2, k: 2, table: t });
    }
    out
}

/// Critical visibility target/value for a functional that vanishes on noise.
pub fn noise_visibility(target_bound: f64, quantum_value: f64) -> Result<f64> {
    if !(target_bound > 0.0 && quantum_value >= target_bound) {
        return Err(Error::Invalid(format!(
            "need quantum value {quantum_value} >= bound {target_bound} > 0"
        )));
    }
    Ok(target_bound / quantum_value)
}

/// [`noise_visibility`] after checking that `f` is zero on the uniform behavior.
pub fn noise_visibility_for(f: &BellFunctional, target_bound: f64, quantum_value: f64) -> Result<f64> {
    let base = f.uniform_value();
    if base.abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "functional takes value {base} on white noise; linear interpolation does not apply"
        )));
    }
    noise_visibility(target_bound, quantum_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_functional, evaluate, facet_functional, hardy_functional, svetlichny_mermin};
    use crate::states::ghz;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn surd_display() {
        assert_eq!(Surd::new(4, 2).to_string(), "4+2*sqrt2");
        assert_eq!(Surd::new(0, 6).to_string(), "6*sqrt2");
        assert_eq!(Surd::new(0, 1).to_string(), "sqrt2");
        assert_eq!(Surd::new(12, 0).to_string(), "12");
        assert_eq!(Surd::new(3, -2).to_string(), "3-2*sqrt2");
    }

    #[test]
    fn svetlichny_rows() {
        let t = svetlichny_chain_bounds(3).unwrap();
        assert_eq!(t.get(ClassLabel::BS), Some(Surd::new(20, 0)));
        assert_eq!(t.get(ClassLabel::Q), Some(Surd::new(0, 16)));
        let t2 = svetlichny_chain_bounds(2).unwrap();
        let d = delta3_bounds();
        for l in [ClassLabel::FS, ClassLabel::BQS, ClassLabel::BS, ClassLabel::Q, ClassLabel::NS] {
            assert_eq!(t2.get(l), d.get(l));
        }
    }

    #[test]
    fn chain_network_rows() {
        let t = chain_network_bounds(3, 2).unwrap();
        assert_eq!(t.get(ClassLabel::C), Some(Surd::new(4, 0)));
        assert_eq!(t.get(ClassLabel::NS), Some(Surd::new(8, 0)));
        let t = chain_network_bounds(4, 3).unwrap();
        assert_eq!(t.get(ClassLabel::KNSQ), Some(Surd::new(4, 4)));
        assert!(chain_network_bounds(2, 2).is_err());
        assert!(chain_network_bounds(4, 5).is_err());
    }

    #[test]
    fn classify_cases() {
        use ClassLabel::*;
        let d = delta3_bounds();
        assert_eq!(classify(6.0 * SQRT_2, &d), vec![FS, BQS, BS]);
        assert!(classify(5.9, &d).is_empty());
        assert_eq!(classify(8.2, &d), vec![FS, BQS, BS]);
    }

    #[test]
    fn brute_force_values() {
        assert_eq!(classical_bound_bruteforce(&chsh_functional()).unwrap(), 2.0);
        assert_eq!(classical_bound_bruteforce(&svetlichny_mermin(3).unwrap()).unwrap(), 4.0);
        assert_eq!(classical_bound_bruteforce(&hardy_functional(3).unwrap()).unwrap(), 0.0);
        assert_eq!(classical_bound_bruteforce(&facet_functional()).unwrap(), 0.0);
    }

    #[test]
    fn brute_force_rejects_large() {
        let f = svetlichny_mermin(21).unwrap();
        assert!(matches!(classical_bound_bruteforce(&f), Err(Error::TooLarge(_))));
    }

    #[test]
    fn lp_values() {
        assert!((ns_bound_lp(&chsh_functional()).unwrap() - 4.0).abs() < 1e-9);
        assert!((ns_bound_lp(&svetlichny_mermin(3).unwrap()).unwrap() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn lp_matches_vertices_for_hardy() {
        let f = hardy_functional(2).unwrap();
        let lp = ns_bound_lp(&f).unwrap();
        let vert = bipartite_ns_vertices().iter().map(|b| evaluate(&f, b).unwrap()).fold(f64::MIN, f64::max);
        assert!((lp - vert).abs() < 1e-9);
        assert!(lp >= 0.0);
    }

    #[test]
    fn svd_bound_product_state() {
        let s = crate::states::product(&[
            crate::qcore::CVector::basis(2, 0),
            crate::qcore::CVector::basis(2, 0),
        ])
        .unwrap();
        assert!((svd_quantum_bound(&s).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_bound_ghz3() {
        let s = ghz(3, FRAC_PI_4).unwrap();
        assert!((svd_quantum_bound(&s).unwrap() - 4.0 * SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn visibility_cases() {
        let v = noise_visibility(8.0, 6.0 * SQRT_2).unwrap();
        assert!((v - 4.0 / (3.0 * SQRT_2)).abs() < 1e-15);
        assert_eq!(noise_visibility(3.0, 3.0).unwrap(), 1.0);
        assert!(noise_visibility(9.0, 8.0).is_err());
        assert!(noise_visibility_for(&hardy_functional(2).unwrap(), 1.0, 2.0).is_err());
        assert!(noise_visibility_for(&chsh_functional(), 2.0, 2.0 * SQRT_2).is_ok());
    }

    #[test]
    fn tables_monotone() {
        assert!(delta3_bounds().monotonicity_violations().is_empty());
        for n in 2..8 {
            assert!(svetlichny_chain_bounds(n).unwrap().monotonicity_violations().is_empty());
        }
        for n in 3..9 {
            for k in 2..=n {
                assert!(chain_network_bounds(n, k).unwrap().monotonicity_violations().is_empty());
            }
        }
    }

    #[test]
    fn json_has_symbolic_and_decimal() {
        let j = delta3_bounds().to_json();
        assert_eq!(j["bounds"][1]["symbolic"], "4+2*sqrt2");
        assert!((j["bounds"][1]["decimal"].as_f64().unwrap() - (4.0 + 2.0 * SQRT_2)).abs() < 1e-15);
    }
}
