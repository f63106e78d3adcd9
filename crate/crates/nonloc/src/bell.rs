//! Bell functionals and the chained post-selected sum.

use serde::{Deserialize, Serialize};

use crate::measure::{behavior, correlator, post_select, Behavior, MeasurementPlan, Observable};
use crate::qcore::digits;
use crate::states::LabeledState;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Chsh,
    SvetlichnyMermin,
    Hardy,
    Facet,
    Custom,
}

/// Either correlator weights α_x⃗ (indexed by setting tuple) or a full
/// probability-table weight vector laid out like [`Behavior::table`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficients {
    Correlator(Vec<f64>),
    Probability(Vec<f64>),
}

/// Linear form on binary-outcome behaviors with `n` parties and `m` settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    pub n: usize,
    pub m: usize,
    pub family: Family,
    pub coeffs: Coefficients,
}

impl BellFunctional {
    pub fn n_inputs(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Probability-form weights; correlator weights expand as α_x⃗·(−1)^{Σa}.
    pub fn probability_weights(&self) -> Vec<f64> {
        match &self.coeffs {
            Coefficients::Probability(w) => w.clone(),
            Coefficients::Correlator(alpha) => {
                let n_out = 1usize << self.n;
                let mut w = Vec::with_capacity(alpha.len() * n_out);
                for &a in alpha {
                    for ai in 0..n_out {
                        w.push(if ai.count_ones() % 2 == 0 { a } else { -a });
                    }
                }
                w
            }
        }
    }

    pub fn to_probability(&self) -> Self {
        Self { coeffs: Coefficients::Probability(self.probability_weights()), ..self.clone() }
    }

    /// Correlator form, when every setting row has the α·(−1)^{Σa} pattern.
    pub fn to_correlator(&self) -> Option<Self> {
        let w = match &self.coeffs {
            Coefficients::Correlator(_) => return Some(self.clone()),
            Coefficients::Probability(w) => w,
        };
        let n_out = 1usize << self.n;
        let mut alpha = Vec::with_capacity(self.n_inputs());
        for row in w.chunks(n_out) {
            let a = row[0];
            let ok = row
                .iter()
                .enumerate()
                .all(|(ai, &v)| v == if ai.count_ones() % 2 == 0 { a } else { -a });
            if !ok {
                return None;
            }
            alpha.push(a);
        }
        Some(Self { coeffs: Coefficients::Correlator(alpha), ..self.clone() })
    }

    /// Value on the uniform behavior, which Born-rule statistics of the
    /// maximally mixed state produce for traceless settings.
    pub fn uniform_value(&self) -> f64 {
        evaluate(self, &Behavior::uniform(self.n, self.m, 2)).expect("shapes agree")
    }
}

/// Correlator weights (−1)^{x·y}.
pub fn chsh_functional() -> BellFunctional {
    BellFunctional {
        n: 2,
        m: 2,
        family: Family::Chsh,
        coeffs: Coefficients::Correlator(vec![1.0, 1.0, 1.0, -1.0]),
    }
}

/// Integer correlator table of the n-party Svetlichny operator:
/// α_x⃗ = ν_{t(x⃗)} with t the number of inputs equal to 1 and
/// ν_t = (−1)^{t(t−1)/2}. Index is the setting tuple, party 1 first.
///
/// L1 mass 2ⁿ, hybrid local/nonlocal bound 2^{n−1}, quantum bound 2^{n−1}√2,
/// no-signaling bound 2ⁿ. The fully local bound is 2^{⌈n/2⌉}, which equals
/// 2^{n−1} only for n ≤ 3. For n = 2 this is CHSH.
pub fn svetlichny_mermin_table(n: usize) -> Vec<i64> {
    (0..1usize << n)
        .map(|x| {
            let t = x.count_ones() as usize;
            if (t * (t.saturating_sub(1)) / 2).is_multiple_of(2) {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Integer correlator table of the recursion
/// 𝓑_k = (A_{k,0}+A_{k,1})𝓑_{k−1} + (A_{k,0}−A_{k,1})𝓑'_{k−1}, 𝓑₁ = A_{1,0},
/// where 𝓑' flips every input.
///
/// This is the Mermin–Ardehali–Belinskii–Klyshko family. It agrees with
/// [`svetlichny_mermin_table`] for n = 2 only; for n = 3 a GHZ state reaches
/// its no-signaling value 8, so it does not obey the 2^{n−1}√2 quantum bound
/// and is not used by [`svetlichny_mermin`].
pub fn mermin_recursion_table(n: usize) -> Vec<i64> {
    let mut table = vec![1i64, 0];
    for k in 2..=n {
        let prev_len = 1usize << (k - 1);
        let mask = prev_len - 1;
        let mut next = vec![0i64; prev_len * 2];
        for y in 0..prev_len {
            let b = table[y];
            let bf = table[y ^ mask];
            next[y << 1] = b + bf;
            next[(y << 1) | 1] = b - bf;
        }
        table = next;
    }
    table
}

pub fn svetlichny_mermin(n: usize) -> Result<BellFunctional> {
    if n < 2 {
        return Err(Error::Invalid(format!("Svetlichny-Mermin operator needs n >= 2, got {n}")));
    }
    let alpha = svetlichny_mermin_table(n).into_iter().map(|v| v as f64).collect();
    Ok(BellFunctional { n, m: 2, family: Family::SvetlichnyMermin, coeffs: Coefficients::Correlator(alpha) })
}

/// xy-plane settings φ_{j,x} = x·π/2 − π/(4n) for every party. On
/// GHZ_n(π/4) every Svetlichny term contributes 1/√2, for a total of
/// 2^{n−1}√2.
pub fn svetlichny_ghz_settings(n: usize) -> Vec<Vec<Observable>> {
    let off = std::f64::consts::PI / (4.0 * n as f64);
    (0..n)
        .map(|_| {
            (0..2)
                .map(|x| Observable::spherical(std::f64::consts::FRAC_PI_2, x as f64 * std::f64::consts::FRAC_PI_2 - off))
                .collect()
        })
        .collect()
}

/// P(0⃗|0⃗) − Σ_k P(0⃗|x_k=1) − (1/(n−1))·Σ_{k≠k'} P(a_k=a_k'=1, rest 0 | x_k=x_k'=1).
///
/// Unlisted parties use setting 0. The sum over k≠k' runs over ordered pairs.
pub fn hardy_functional(n: usize) -> Result<BellFunctional> {
    if n < 2 {
        return Err(Error::Invalid(format!("Hardy functional needs n >= 2, got {n}")));
    }
    let mut w = vec![0.0; (1usize << n) * (1usize << n)];
    let bit = |k: usize| 1usize << (n - 1 - k);
    let at = |x: usize, a: usize| x * (1usize << n) + a;
    w[at(0, 0)] += 1.0;
    for k in 0..n {
        w[at(bit(k), 0)] -= 1.0;
    }
    let c = 1.0 / (n as f64 - 1.0);
    for k in 0..n {
        for kp in 0..n {
            if k != kp {
                let s = bit(k) | bit(kp);
                w[at(s, s)] -= c;
            }
        }
    }
    Ok(BellFunctional { n, m: 2, family: Family::Hardy, coeffs: Coefficients::Probability(w) })
}

/// Tripartite facet functional with two-party terms read from the marginal
/// at the absent party's setting 0.
pub fn facet_functional() -> BellFunctional {
    let mut w = vec![0.0; 64];
    let at = |x: [usize; 3], a: [usize; 3]| {
        (x[0] * 4 + x[1] * 2 + x[2]) * 8 + a[0] * 4 + a[1] * 2 + a[2]
    };
    for free in 0..2 {
        w[at([1, 1, 0], [0, 0, free])] -= 2.0; // P(A₁B₁)
        w[at([0, 1, 1], [free, 0, 0])] -= 2.0; // P(B₁C₁)
        w[at([1, 0, 1], [0, free, 0])] -= 2.0; // P(A₁C₁)
    }
    for (x, c) in [
        ([0, 0, 1], -1.0),
        ([0, 1, 0], -1.0),
        ([1, 0, 0], -1.0),
        ([1, 1, 0], 2.0),
        ([1, 0, 1], 2.0),
        ([0, 1, 1], 2.0),
        ([1, 1, 1], 2.0),
    ] {
        w[at(x, [0, 0, 0])] += c;
    }
    BellFunctional { n: 3, m: 2, family: Family::Facet, coeffs: Coefficients::Probability(w) }
}

/// Value of the linear form on a behavior.
pub fn evaluate(f: &BellFunctional, b: &Behavior) -> Result<f64> {
    if b.n != f.n || b.m != f.m || b.k != 2 {
        return Err(Error::Dimension(format!(
            "functional (n={}, m={}) on behavior (n={}, m={}, k={})",
            f.n, f.m, b.n, b.m, b.k
        )));
    }
    if f.family == Family::Facet {
        let d = b.signaling_defect();
        if d > 1e-9 {
            return Err(Error::Signaling(d));
        }
    }
    match &f.coeffs {
        Coefficients::Correlator(alpha) => {
            let mut acc = 0.0;
            for (xi, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    acc += a * correlator(b, &digits(xi, &vec![f.m; f.n]))?;
                }
            }
            Ok(acc)
        }
        Coefficients::Probability(w) => {
            if w.len() != b.table.len() {
                return Err(Error::Dimension("weight vector length".into()));
            }
            Ok(w.iter().zip(&b.table).map(|(c, p)| c * p).sum())
        }
    }
}

/// One post-selection round and the functional applied to its remainder.
#[derive(Clone, Debug)]
pub struct Round {
    pub plan: MeasurementPlan,
    pub functional: BellFunctional,
}

/// n+1 rounds; each party is post-selected in exactly one.
#[derive(Clone, Debug)]
pub struct ChainedPlan {
    pub rounds: Vec<Round>,
}

impl ChainedPlan {
    pub fn validate(&self, n_parties: usize) -> Result<()> {
        if self.rounds.len() != n_parties {
            return Err(Error::Invalid(format!("{} rounds for {n_parties} parties", self.rounds.len())));
        }
        let mut seen = vec![false; n_parties];
        for (i, r) in self.rounds.iter().enumerate() {
            let k = r.plan.post_select_party;
            if k >= n_parties || seen[k] {
                return Err(Error::Invalid(format!("round {i} post-selects party {k} twice or out of range")));
            }
            seen[k] = true;
            r.plan.validate()?;
            if r.plan.settings.len() != n_parties - 1 || r.functional.n != n_parties - 1 {
                return Err(Error::Dimension(format!(
                    "round {i}: {} setting lists and a {}-party functional for {} remaining parties",
                    r.plan.settings.len(),
                    r.functional.n,
                    n_parties - 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundValue {
    pub party: usize,
    pub probability: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainedValue {
    pub total: f64,
    pub rounds: Vec<RoundValue>,
}

/// Value of one round: post-select, build the behavior, evaluate.
pub fn round_value(state: &LabeledState, round: &Round) -> Result<(f64, f64, Behavior)> {
    let (p, cond) = post_select(state, round.plan.post_select_party, &round.plan.projector)?;
    let b = behavior(&cond, &round.plan.settings)?;
    let v = evaluate(&round.functional, &b)?;
    Ok((p, v, b))
}

/// Σ over rounds of the functional on each post-selected behavior.
pub fn chained_value(state: &LabeledState, plan: &ChainedPlan) -> Result<ChainedValue> {
    plan.validate(state.n_parties())?;
    let mut rounds = Vec::with_capacity(plan.rounds.len());
    for (i, r) in plan.rounds.iter().enumerate() {
        let (probability, value, _) = round_value(state, r).map_err(|e| match e {
            Error::ZeroProbability { party } => Error::ZeroProbabilityRound { round: i, party },
            other => other,
        })?;
        rounds.push(RoundValue { party: r.plan.post_select_party, probability, value });
    }
    let total = rounds.iter().map(|r| r.value).sum();
    Ok(ChainedValue { total, rounds })
}
