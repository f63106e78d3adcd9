//! GHZ stabilizer witness and its post-selected lift.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::measure::post_select;
use crate::qcore::{kron_all, pauli_x, pauli_z, CMatrix, CVector, C64};
use crate::states::{permute_qubits, LabeledState};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessOperator {
    pub n: usize,
    pub matrix: CMatrix,
    /// Supremum over biseparable states.
    pub biseparable_bound: f64,
    /// Maximum over all states, c_q.
    pub quantum_max: f64,
}

/// σx^{⊗n} + Σ_{k=2}^{n} σz^{(k−1)}σz^{(k)} − (n−1)·I.
///
/// Positive values witness genuine entanglement; GHZ_n(π/4) reaches 1.
pub fn ghz_stabilizer_witness(n: usize) -> Result<WitnessOperator> {
    if n < 2 {
        return Err(Error::Invalid(format!("witness needs n >= 2, got {n}")));
    }
    let dim = 1usize << n;
    let mut m = kron_all(&vec![pauli_x(); n]);
    for k in 1..n {
        let ops: Vec<CMatrix> = (0..n)
            .map(|j| if j == k - 1 || j == k { pauli_z() } else { CMatrix::identity(2) })
            .collect();
        m = m.add(&kron_all(&ops));
    }
    let matrix = m.sub(&CMatrix::identity(dim).scale_re((n - 1) as f64));
    Ok(WitnessOperator { n, matrix, biseparable_bound: 0.0, quantum_max: 1.0 })
}

pub fn witness_value(state: &LabeledState, w: &WitnessOperator) -> Result<f64> {
    if state.dim() != w.matrix.rows {
        return Err(Error::Dimension(format!("witness of size {} on state of dimension {}", w.matrix.rows, state.dim())));
    }
    Ok(state.expectation(&w.matrix))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedWitness {
    pub rounds: Vec<f64>,
    /// Σ rounds − c_q.
    pub total: f64,
}

/// Σᵢ ⟨𝒲⟩ on the state left after projecting party i with `projectors[i]`,
/// minus c_q. Biseparable inputs give at most 0.
pub fn lifted_witness_value(state: &LabeledState, w: &WitnessOperator, projectors: &[CMatrix]) -> Result<LiftedWitness> {
    let n = state.n_parties();
    if n != w.n + 1 || projectors.len() != n {
        return Err(Error::Dimension(format!(
            "{}-party witness and {} projectors on a {n}-party state",
            w.n,
            projectors.len()
        )));
    }
    let mut rounds = Vec::with_capacity(n);
    for (i, proj) in projectors.iter().enumerate() {
        let (_, cond) = post_select(state, i, proj).map_err(|e| match e {
            Error::ZeroProbability { party } => Error::ZeroProbabilityRound { round: i, party },
            other => other,
        })?;
        rounds.push(witness_value(&cond, w)?);
    }
    let total = rounds.iter().sum::<f64>() - w.quantum_max;
    Ok(LiftedWitness { rounds, total })
}

/// Gaussian-sampled unit vector, Haar distributed.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let data = (0..dim)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    CVector::new(data).normalized()
}

pub fn random_product_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LabeledState {
    let v = (1..n).fold(random_pure(2, rng), |acc, _| acc.kron(&random_pure(2, rng)));
    LabeledState::qubits(v).expect("normalized by construction")
}

/// |ψ_A⟩⊗|ψ_Ā⟩ for a random nonempty proper subset A of the n qubits.
pub fn random_bipartite_product<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let cut = rng.gen_range(1..n);
    let joint = random_pure(1 << cut, rng).kron(&random_pure(1 << (n - cut), rng));
    // Position i of `joint` holds qubit qubits[i]; invert that order.
    let mut order = vec![0; n];
    for (pos, &q) in qubits.iter().enumerate() {
        order[q] = pos;
    }
    permute_qubits(&joint, &order)
}

/// Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ| over `terms` random bipartite products with Dirichlet(1)
/// weights.
pub fn random_biseparable<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> Result<LabeledState> {
    if n < 2 || terms == 0 {
        return Err(Error::Invalid("need n >= 2 and at least one term".into()));
    }
    let weights: Vec<f64> = (0..terms).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = weights.iter().sum();
    let dim = 1usize << n;
    let mut rho = CMatrix::zeros(dim, dim);
    for w in weights {
        rho = rho.add(&random_bipartite_product(n, rng).projector().scale_re(w / sum));
    }
    LabeledState::mixed(rho, vec![2; n])
}
