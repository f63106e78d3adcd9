//! State constructors: GHZ and W families, the three-amplitude facet state,
//! white-noise mixing and bipartite-source networks.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::qcore::{digits, CMatrix, CVector, C64};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A state over an ordered list of parties.
///
/// Each party's tensor factor is contiguous; `party_qubits[p]` records which
/// source particles (0-based) party `p` holds, in the order they appear
/// inside its factor.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState {
    pub repr: Repr,
    pub party_dims: Vec<usize>,
    pub party_qubits: Vec<Vec<usize>>,
}

impl LabeledState {
    /// Pure state; every party owns one qubit when `party_dims` is all 2s.
    pub fn pure(v: CVector, party_dims: Vec<usize>) -> Result<Self> {
        let total: usize = party_dims.iter().product();
        if v.dim() != total {
            return Err(Error::Dimension(format!(
                "vector of length {} for party dimensions {party_dims:?}",
                v.dim()
            )));
        }
        if !v.is_finite() {
            return Err(Error::Invalid("non-finite amplitude".into()));
        }
        let n = v.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("state norm {n} is not 1")));
        }
        let party_qubits = default_ownership(&party_dims);
        Ok(Self { repr: Repr::Pure(v), party_dims, party_qubits })
    }

    /// Pure n-qubit state, one qubit per party.
    pub fn qubits(v: CVector) -> Result<Self> {
        let n = v.dim().trailing_zeros() as usize;
        if 1usize << n != v.dim() || n == 0 {
            return Err(Error::Dimension(format!("length {} is not a power of two", v.dim())));
        }
        Self::pure(v, vec![2; n])
    }

    pub fn mixed(rho: CMatrix, party_dims: Vec<usize>) -> Result<Self> {
        let total: usize = party_dims.iter().product();
        if !rho.is_square() || rho.rows != total {
            return Err(Error::Dimension(format!(
                "{}x{} density matrix for party dimensions {party_dims:?}",
                rho.rows, rho.cols
            )));
        }
        let defect = rho.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::Invalid(format!("density matrix trace {tr} is not 1")));
        }
        let party_qubits = default_ownership(&party_dims);
        Ok(Self { repr: Repr::Mixed(rho), party_dims, party_qubits })
    }

    pub fn n_parties(&self) -> usize {
        self.party_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.party_dims.iter().product()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    /// Density matrix, promoting pure states.
    pub fn density(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(v) => v.projector(),
            Repr::Mixed(m) => m.clone(),
        }
    }

    /// ⟨O⟩ = Tr(ρ O).
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.inner(&op.apply(v)).re,
            Repr::Mixed(m) => m.trace_product(op).re,
        }
    }

    /// True when every party holds exactly one qubit.
    pub fn is_qubit_register(&self) -> bool {
        self.party_dims.iter().all(|&d| d == 2)
    }
}

fn default_ownership(party_dims: &[usize]) -> Vec<Vec<usize>> {
    let mut next = 0;
    party_dims
        .iter()
        .map(|&d| {
            let q = if d.is_power_of_two() { d.trailing_zeros() as usize } else { 1 };
            let owned = (next..next + q).collect();
            next += q;
            owned
        })
        .collect()
}

fn check_open_angle(name: &str, theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::Invalid(format!("{name} = {theta} outside (0, pi/2)")));
    }
    Ok(())
}

/// cosθ|0…0⟩ + sinθ|1…1⟩ on n qubits.
pub fn ghz(n: usize, theta: f64) -> Result<LabeledState> {
    if n < 2 {
        return Err(Error::Invalid(format!("GHZ needs n >= 2, got {n}")));
    }
    check_open_angle("theta", theta)?;
    let dim = 1usize << n;
    let mut v = CVector::zeros(dim);
    v.data[0] = C64::new(theta.cos(), 0.0);
    v.data[dim - 1] = C64::new(theta.sin(), 0.0);
    LabeledState::qubits(v)
}

/// cosθ₁cosθ₂|001⟩ + cosθ₁sinθ₂|010⟩ + sinθ₁|100⟩.
pub fn wstate(theta1: f64, theta2: f64) -> Result<LabeledState> {
    check_open_angle("theta1", theta1)?;
    check_open_angle("theta2", theta2)?;
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    wstate_general(&[s1, c1 * s2, c1 * c2])
}

/// Σ a_k|1⟩_k, where |1⟩_k has a single excitation on qubit k.
///
/// For four qubits the basis is |1000⟩, |0100⟩, |0010⟩, |0001⟩; a printed
/// variant of this family lists |0100⟩ twice, which we read as |1000⟩.
pub fn wstate_general(amplitudes: &[f64]) -> Result<LabeledState> {
    let n = amplitudes.len();
    if n < 2 {
        return Err(Error::Invalid("W state needs at least two qubits".into()));
    }
    if amplitudes.iter().any(|&a| a == 0.0 || !a.is_finite()) {
        return Err(Error::Invalid("W amplitudes must be finite and nonzero".into()));
    }
    let norm2: f64 = amplitudes.iter().map(|a| a * a).sum();
    if (norm2 - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("W amplitudes have squared norm {norm2}")));
    }
    let mut v = CVector::zeros(1 << n);
    for (k, &a) in amplitudes.iter().enumerate() {
        v.data[1 << (n - 1 - k)] = C64::new(a, 0.0);
    }
    LabeledState::qubits(v)
}

/// √3/2|000⟩ + √3/4|110⟩ + 1/4|111⟩.
pub fn facet_state() -> LabeledState {
    let r3 = 3f64.sqrt();
    let mut v = CVector::zeros(8);
    v.data[0] = C64::new(r3 / 2.0, 0.0);
    v.data[6] = C64::new(r3 / 4.0, 0.0);
    v.data[7] = C64::new(0.25, 0.0);
    LabeledState::qubits(v).expect("normalized by construction")
}

/// Tensor product of single-party pure states.
pub fn product(locals: &[CVector]) -> Result<LabeledState> {
    let v = locals.iter().skip(1).fold(locals[0].clone(), |acc, x| acc.kron(x));
    LabeledState::pure(v.normalized(), locals.iter().map(|x| x.dim()).collect())
}

/// v·ρ + (1−v)·I/d.
pub fn add_white_noise(state: &LabeledState, v: f64) -> Result<LabeledState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Invalid(format!("visibility {v} outside [0, 1]")));
    }
    let d = state.dim();
    let rho = state.density().scale_re(v).add(&CMatrix::identity(d).scale_re((1.0 - v) / d as f64));
    Ok(LabeledState {
        repr: Repr::Mixed(rho),
        party_dims: state.party_dims.clone(),
        party_qubits: state.party_qubits.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Triangle,
    Complete,
    Star,
    Custom,
}

/// A bipartite source cosθ|00⟩ + sinθ|11⟩ whose first particle goes to
/// `parties[0]` and second to `parties[1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub theta: f64,
    pub parties: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n_parties: usize,
    pub sources: Vec<Source>,
    pub topology: Topology,
}

impl NetworkSpec {
    /// Parties A₁…A_{k+1}; source i links A_i and A_{i+1}.
    pub fn chain(thetas: &[f64]) -> Self {
        let sources =
            thetas.iter().enumerate().map(|(i, &theta)| Source { theta, parties: [i, i + 1] }).collect();
        Self { n_parties: thetas.len() + 1, sources, topology: Topology::Chain }
    }

    /// Sources (A₁,A₂), (A₂,A₃), (A₃,A₁): A₁ holds particles 1 and 6.
    pub fn triangle(thetas: [f64; 3]) -> Self {
        let links = [[0, 1], [1, 2], [2, 0]];
        let sources =
            thetas.iter().zip(links).map(|(&theta, parties)| Source { theta, parties }).collect();
        Self { n_parties: 3, sources, topology: Topology::Triangle }
    }

    /// One source per unordered pair, pairs in lexicographic order.
    pub fn complete(n_parties: usize, thetas: &[f64]) -> Result<Self> {
        let pairs: Vec<[usize; 2]> =
            (0..n_parties).flat_map(|i| ((i + 1)..n_parties).map(move |j| [i, j])).collect();
        if pairs.len() != thetas.len() {
            return Err(Error::Invalid(format!(
                "complete network on {n_parties} parties needs {} angles, got {}",
                pairs.len(),
                thetas.len()
            )));
        }
        let sources =
            thetas.iter().zip(pairs).map(|(&theta, parties)| Source { theta, parties }).collect();
        Ok(Self { n_parties, sources, topology: Topology::Complete })
    }

    /// Leaves A₁…A_k, hub last; leaf i holds the first particle of source i.
    pub fn star(thetas: &[f64]) -> Self {
        let hub = thetas.len();
        let sources =
            thetas.iter().enumerate().map(|(i, &theta)| Source { theta, parties: [i, hub] }).collect();
        Self { n_parties: hub + 1, sources, topology: Topology::Star }
    }

    pub fn validate(&self) -> Result<()> {
        let mut received = vec![0usize; self.n_parties];
        for (i, s) in self.sources.iter().enumerate() {
            check_open_angle(&format!("source {i} theta"), s.theta)?;
            for &p in &s.parties {
                if p >= self.n_parties {
                    return Err(Error::Invalid(format!("source {i} targets missing party {p}")));
                }
                received[p] += 1;
            }
            if s.parties[0] == s.parties[1] {
                return Err(Error::Invalid(format!("source {i} sends both particles to one party")));
            }
        }
        if let Some(p) = received.iter().position(|&c| c == 0) {
            return Err(Error::Invalid(format!("party {p} receives no particle")));
        }
        Ok(())
    }

    /// Particles held by each party, ascending, numbered 2i and 2i+1 for source i.
    pub fn ownership(&self) -> Vec<Vec<usize>> {
        let mut owned = vec![Vec::new(); self.n_parties];
        for (i, s) in self.sources.iter().enumerate() {
            owned[s.parties[0]].push(2 * i);
            owned[s.parties[1]].push(2 * i + 1);
        }
        for o in &mut owned {
            o.sort_unstable();
        }
        owned
    }
}

/// Product of all sources, regrouped so each party's particles are adjacent.
pub fn network_state(spec: &NetworkSpec) -> Result<LabeledState> {
    spec.validate()?;
    let raw = spec
        .sources
        .iter()
        .map(|s| {
            let (sn, cs) = s.theta.sin_cos();
            CVector::from_real(&[cs, 0.0, 0.0, sn])
        })
        .fold(CVector::from_real(&[1.0]), |acc, v| acc.kron(&v));
    let owned = spec.ownership();
    let order: Vec<usize> = owned.iter().flatten().copied().collect();
    let v = permute_qubits(&raw, &order);
    let party_dims = owned.iter().map(|o| 1usize << o.len()).collect();
    let mut st = LabeledState::pure(v, party_dims)?;
    st.party_qubits = owned;
    Ok(st)
}

/// Reorders qubits so that new position i holds old qubit `order[i]`.
pub fn permute_qubits(v: &CVector, order: &[usize]) -> CVector {
    let n = order.len();
    let dims = vec![2; n];
    let mut out = CVector::zeros(v.dim());
    for (new_idx, slot) in out.data.iter_mut().enumerate() {
        let bits = digits(new_idx, &dims);
        let mut old = vec![0; n];
        for (pos, &q) in order.iter().enumerate() {
            old[q] = bits[pos];
        }
        let old_idx = old.iter().fold(0, |acc, &b| acc * 2 + b);
        *slot = v.data[old_idx];
    }
    out
}
