//! Observables, projective post-selection and Born-rule behaviors.
//!
//! Outcome label 0 is the +1 eigenvalue, label 1 the −1 eigenvalue.

use crate::qcore::{digits, paulis, CMatrix, CVector, C64, ZERO};
use crate::states::{LabeledState, Repr};
use crate::{Error, Result};

/// Hermitian operator with spectrum in [−1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub matrix: CMatrix,
    pub bloch: Option<[f64; 3]>,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let (vals, _) = crate::qcore::hermitian_eigen(&matrix)?;
        if vals.iter().any(|v| v.abs() > 1.0 + 1e-9) {
            return Err(Error::Invalid(format!("observable spectrum {vals:?} leaves [-1, 1]")));
        }
        Ok(Self { matrix, bloch: None })
    }

    /// cos t·σz + sin t·σx.
    pub fn zx(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        bloch_observable([s, 0.0, c]).expect("unit by construction")
    }

    /// Bloch vector (sinθ cosφ, sinθ sinφ, cosθ).
    pub fn spherical(polar: f64, azimuth: f64) -> Self {
        let (sp, cp) = polar.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        bloch_observable([sp * ca, sp * sa, cp]).expect("unit by construction")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    /// The same observable acting on qubit `position` of a `n_qubits` register.
    pub fn on_qubit(&self, n_qubits: usize, position: usize) -> Self {
        let id = CMatrix::identity(2);
        let factors: Vec<CMatrix> = (0..n_qubits)
            .map(|q| if q == position { self.matrix.clone() } else { id.clone() })
            .collect();
        Self { matrix: crate::qcore::kron_all(&factors), bloch: None }
    }

    /// (I ± A)/2 for outcomes 0 and 1.
    pub fn effects(&self) -> [CMatrix; 2] {
        let id = CMatrix::identity(self.dim());
        [id.add(&self.matrix).scale_re(0.5), id.sub(&self.matrix).scale_re(0.5)]
    }

    fn is_dichotomic(&self) -> bool {
        self.matrix.matmul(&self.matrix).max_abs_diff(&CMatrix::identity(self.dim())) <= 1e-9
    }
}

/// s₁σx + s₂σy + s₃σz for a unit vector s.
pub fn bloch_observable(s: [f64; 3]) -> Result<Observable> {
    let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("Bloch vector norm {n} is not 1")));
    }
    let [x, y, z] = paulis();
    let m = x.scale_re(s[0]).add(&y.scale_re(s[1])).add(&z.scale_re(s[2]));
    Ok(Observable { matrix: m, bloch: Some(s) })
}

/// A single post-selection step followed by local settings for the others.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    pub post_select_party: usize,
    pub projector: CMatrix,
    /// Settings of the remaining parties in ascending party order.
    pub settings: Vec<Vec<Observable>>,
}

impl MeasurementPlan {
    pub fn validate(&self) -> Result<()> {
        check_projector(&self.projector)?;
        if self.settings.iter().any(|s| s.len() < 2) {
            return Err(Error::Invalid("every measuring party needs at least two settings".into()));
        }
        Ok(())
    }
}

fn check_projector(p: &CMatrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::Dimension("projector must be square".into()));
    }
    let defect = p.hermitian_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let idem = p.matmul(p).max_abs_diff(p);
    if idem > 1e-10 {
        return Err(Error::Invalid(format!("projector is not idempotent (deviation {idem:.3e})")));
    }
    Ok(())
}

fn split(dims: &[usize], party: usize) -> (usize, usize, usize) {
    let left: usize = dims[..party].iter().product();
    let right: usize = dims[party + 1..].iter().product();
    (left, dims[party], right)
}

/// (I ⊗ op ⊗ I)|v⟩ with `op` on factor `party`.
pub fn apply_local(v: &CVector, dims: &[usize], party: usize, op: &CMatrix) -> CVector {
    let (left, d, right) = split(dims, party);
    let mut out = CVector::zeros(v.dim());
    for l in 0..left {
        for r in 0..right {
            for i in 0..d {
                let mut acc = ZERO;
                for j in 0..d {
                    let a = op[(i, j)];
                    if a != ZERO {
                        acc += a * v.data[(l * d + j) * right + r];
                    }
                }
                out.data[(l * d + i) * right + r] = acc;
            }
        }
    }
    out
}

/// (I ⊗ op ⊗ I)·m, acting on the row index.
pub fn apply_local_left(m: &CMatrix, dims: &[usize], party: usize, op: &CMatrix) -> CMatrix {
    let (left, d, right) = split(dims, party);
    let mut out = CMatrix::zeros(m.rows, m.cols);
    for l in 0..left {
        for r in 0..right {
            for i in 0..d {
                let row_out = (l * d + i) * right + r;
                for j in 0..d {
                    let a = op[(i, j)];
                    if a == ZERO {
                        continue;
                    }
                    let row_in = (l * d + j) * right + r;
                    for c in 0..m.cols {
                        let x = m[(row_in, c)];
                        out[(row_out, c)] += a * x;
                    }
                }
            }
        }
    }
    out
}

/// Conditions `state` on the projector of one party.
///
/// Returns the branch probability and the normalized state of the remaining
/// parties. Rank-1 projectors on pure states keep the result pure.
pub fn post_select(state: &LabeledState, party: usize, projector: &CMatrix) -> Result<(f64, LabeledState)> {
    if party >= state.n_parties() {
        return Err(Error::Invalid(format!("party {party} out of range")));
    }
    if projector.rows != state.party_dims[party] {
        return Err(Error::Dimension(format!(
            "projector of size {} on party of dimension {}",
            projector.rows, state.party_dims[party]
        )));
    }
    check_projector(projector)?;
    let dims = &state.party_dims;
    let rest_dims: Vec<usize> = dims.iter().enumerate().filter(|&(i, _)| i != party).map(|(_, &d)| d).collect();
    let rest_qubits: Vec<Vec<usize>> = state
        .party_qubits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != party)
        .map(|(_, q)| q.clone())
        .collect();
    let rank = projector.trace().re.round() as usize;
    let (left, d, right) = split(dims, party);

    let repr = match (&state.repr, rank) {
        (Repr::Pure(psi), 1) => {
            // Π = |u⟩⟨u|: contract ⟨u| on the party's factor.
            let u = rank_one_vector(projector);
            let mut out = CVector::zeros(left * right);
            for l in 0..left {
                for r in 0..right {
                    let mut acc = ZERO;
                    for j in 0..d {
                        acc += u.data[j].conj() * psi.data[(l * d + j) * right + r];
                    }
                    out.data[l * right + r] = acc;
                }
            }
            let p = out.norm().powi(2);
            if p < 1e-12 {
                return Err(Error::ZeroProbability { party });
            }
            let out = CVector { data: out.data.iter().map(|z| z / p.sqrt()).collect() };
            (p, Repr::Pure(out))
        }
        _ => {
            let rho = state.density();
            let half = apply_local_left(&rho, dims, party, projector);
            let full = apply_local_left(&half.adjoint(), dims, party, projector);
            let p = full.trace().re;
            if p < 1e-12 {
                return Err(Error::ZeroProbability { party });
            }
            let keep: Vec<usize> = (0..dims.len()).filter(|&i| i != party).collect();
            let reduced = crate::qcore::partial_trace(&full, dims, &keep)?.scale_re(1.0 / p);
            (p, Repr::Mixed(reduced))
        }
    };
    let (p, repr) = repr;
    Ok((p, LabeledState { repr, party_dims: rest_dims, party_qubits: rest_qubits }))
}

/// Unit vector spanning a rank-1 projector.
fn rank_one_vector(p: &CMatrix) -> CVector {
    let col = (0..p.cols).max_by(|&a, &b| p[(a, a)].re.total_cmp(&p[(b, b)].re)).unwrap_or(0);
    let v = CVector::new((0..p.rows).map(|i| p[(i, col)]).collect());
    v.normalized()
}

/// Conditional probability table P(a⃗|x⃗) over n parties with m settings and
/// k outcomes each.
///
/// Flat index is `x_index · kⁿ + a_index`, both mixed-radix with party 1 as
/// the most significant digit.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub table: Vec<f64>,
}

impl Behavior {
    pub fn new(n: usize, m: usize, k: usize, table: Vec<f64>) -> Result<Self> {
        let b = Self { n, m, k, table };
        if b.table.len() != b.n_inputs() * b.n_outputs() {
            return Err(Error::Dimension(format!(
                "table of length {} for n={n}, m={m}, k={k}",
                b.table.len()
            )));
        }
        if let Some(v) = b.table.iter().find(|&&v| v < -1e-12 || !v.is_finite()) {
            return Err(Error::Invalid(format!("probability entry {v}")));
        }
        for x in 0..b.n_inputs() {
            let s: f64 = b.table[x * b.n_outputs()..(x + 1) * b.n_outputs()].iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("row {x} sums to {s}")));
            }
        }
        Ok(b)
    }

    pub fn n_inputs(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn n_outputs(&self) -> usize {
        self.k.pow(self.n as u32)
    }

    pub fn index(&self, a: &[usize], x: &[usize]) -> usize {
        let xi = x.iter().fold(0, |acc, &v| acc * self.m + v);
        let ai = a.iter().fold(0, |acc, &v| acc * self.k + v);
        xi * self.n_outputs() + ai
    }

    pub fn p(&self, a: &[usize], x: &[usize]) -> f64 {
        self.table[self.index(a, x)]
    }

    pub fn uniform(n: usize, m: usize, k: usize) -> Self {
        let len = m.pow(n as u32) * k.pow(n as u32);
        let w = 1.0 / k.pow(n as u32) as f64;
        Self { n, m, k, table: vec![w; len] }
    }

    /// `strategy[party][setting]` is the deterministic outcome.
    pub fn deterministic(m: usize, k: usize, strategy: &[Vec<usize>]) -> Self {
        let n = strategy.len();
        let mut b = Self { n, m, k, table: vec![0.0; m.pow(n as u32) * k.pow(n as u32)] };
        for xi in 0..b.n_inputs() {
            let x = digits(xi, &vec![m; n]);
            let a: Vec<usize> = x.iter().enumerate().map(|(p, &s)| strategy[p][s]).collect();
            let idx = b.index(&a, &x);
            b.table[idx] = 1.0;
        }
        b
    }

    /// λ·self + (1−λ)·other.
    pub fn mix(&self, other: &Self, lambda: f64) -> Self {
        let table = self.table.iter().zip(&other.table).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Self { n: self.n, m: self.m, k: self.k, table }
    }

    /// Largest change of any party-subset marginal under a change of one
    /// party's setting.
    pub fn signaling_defect(&self) -> f64 {
        let (n, m, k) = (self.n, self.m, self.k);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            // Marginal of all parties but j, for every setting of j.
            for xi in 0..self.n_inputs() {
                let x = digits(xi, &vec![m; n]);
                if x[j] != 0 {
                    continue;
                }
                for ai in 0..self.n_outputs() {
                    let a = digits(ai, &vec![k; n]);
                    if a[j] != 0 {
                        continue;
                    }
                    let marginal = |xj: usize| -> f64 {
                        let mut xs = x.clone();
                        xs[j] = xj;
                        (0..k)
                            .map(|aj| {
                                let mut az = a.clone();
                                az[j] = aj;
                                self.p(&az, &xs)
                            })
                            .sum()
                    };
                    let base = marginal(0);
                    for xj in 1..m {
                        worst = worst.max((marginal(xj) - base).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn is_no_signaling(&self, tol: f64) -> bool {
        self.signaling_defect() <= tol
    }
}

/// E(x⃗) = Σ_a⃗ (−1)^{Σaᵢ} P(a⃗|x⃗) for binary outcomes.
pub fn correlator(b: &Behavior, x: &[usize]) -> Result<f64> {
    if b.k != 2 {
        return Err(Error::Invalid(format!("correlator needs binary outcomes, got k={}", b.k)));
    }
    if x.len() != b.n || x.iter().any(|&s| s >= b.m) {
        return Err(Error::Dimension(format!("setting tuple {x:?} for n={}, m={}", b.n, b.m)));
    }
    let xi = x.iter().fold(0, |acc, &v| acc * b.m + v);
    let row = &b.table[xi * b.n_outputs()..(xi + 1) * b.n_outputs()];
    Ok(row
        .iter()
        .enumerate()
        .map(|(ai, &p)| if ai.count_ones() % 2 == 0 { p } else { -p })
        .sum())
}

/// Born-rule behavior for dichotomic local settings, one list per party.
pub fn behavior(state: &LabeledState, settings: &[Vec<Observable>]) -> Result<Behavior> {
    let n = state.n_parties();
    if settings.len() != n {
        return Err(Error::Dimension(format!("{} setting lists for {n} parties", settings.len())));
    }
    let m = settings[0].len();
    for (p, list) in settings.iter().enumerate() {
        if list.len() != m {
            return Err(Error::Dimension("all parties need the same number of settings".into()));
        }
        for o in list {
            if o.dim() != state.party_dims[p] {
                return Err(Error::Dimension(format!(
                    "observable of dimension {} for party {p} of dimension {}",
                    o.dim(),
                    state.party_dims[p]
                )));
            }
            if !o.is_dichotomic() {
                return Err(Error::Invalid(format!("party {p} observable is not ±1-valued")));
            }
        }
    }
    let effects: Vec<Vec<[CMatrix; 2]>> =
        settings.iter().map(|l| l.iter().map(|o| o.effects()).collect()).collect();
    let dims = &state.party_dims;
    let n_out = 1usize << n;
    let mut table = vec![0.0; m.pow(n as u32) * n_out];
    for xi in 0..m.pow(n as u32) {
        let x = digits(xi, &vec![m; n]);
        let row = &mut table[xi * n_out..(xi + 1) * n_out];
        match &state.repr {
            Repr::Pure(psi) => {
                let mut layer = vec![psi.clone()];
                for p in 0..n {
                    let [e0, e1] = &effects[p][x[p]];
                    layer = layer
                        .iter()
                        .flat_map(|v| [apply_local(v, dims, p, e0), apply_local(v, dims, p, e1)])
                        .collect();
                }
                for (slot, v) in row.iter_mut().zip(&layer) {
                    *slot = v.norm().powi(2);
                }
            }
            Repr::Mixed(rho) => {
                let mut layer = vec![rho.clone()];
                for p in 0..n {
                    let [e0, e1] = &effects[p][x[p]];
                    layer = layer
                        .iter()
                        .flat_map(|r| [apply_local_left(r, dims, p, e0), apply_local_left(r, dims, p, e1)])
                        .collect();
                }
                for (slot, r) in row.iter_mut().zip(&layer) {
                    *slot = r.trace().re;
                }
            }
        }
    }
    for v in &mut table {
        if v.abs() < 1e-15 {
            *v = 0.0;
        }
    }
    Behavior::new(n, m, 2, table)
}

/// ⟨A₁ ⊗ … ⊗ A_n⟩ for one observable per party.
pub fn product_expectation(state: &LabeledState, ops: &[&CMatrix]) -> f64 {
    let dims = &state.party_dims;
    match &state.repr {
        Repr::Pure(psi) => {
            let mut v = psi.clone();
            for (p, op) in ops.iter().enumerate() {
                v = apply_local(&v, dims, p, op);
            }
            psi.inner(&v).re
        }
        Repr::Mixed(rho) => {
            let mut r = rho.clone();
            for (p, op) in ops.iter().enumerate() {
                r = apply_local_left(&r, dims, p, op);
            }
            r.trace().re
        }
    }
}

/// Projector |v⟩⟨v| from (possibly unnormalized) amplitudes.
pub fn ket_projector(amplitudes: &[C64]) -> CMatrix {
    CVector::new(amplitudes.to_vec()).normalized().projector()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli_x, pauli_z};
    use crate::states::{ghz, network_state, wstate, NetworkSpec};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn epr() -> LabeledState {
        ghz(2, FRAC_PI_4).unwrap()
    }

    #[test]
    fn bloch_cases() {
        assert_eq!(bloch_observable([0.0, 0.0, 1.0]).unwrap().matrix, pauli_z());
        let o = bloch_observable([FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2]).unwrap();
        let want = pauli_z().add(&pauli_x()).scale_re(FRAC_1_SQRT_2);
        assert!(o.matrix.max_abs_diff(&want) < 1e-15);
        assert!(bloch_observable([0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn epr_zz_perfectly_correlated() {
        let z = Observable::zx(0.0);
        let b = behavior(&epr(), &[vec![z.clone(), z.clone()], vec![z.clone(), z]]).unwrap();
        assert!((b.p(&[0, 0], &[0, 0]) - 0.5).abs() < 1e-15);
        assert!((b.p(&[1, 1], &[0, 0]) - 0.5).abs() < 1e-15);
        assert!(b.p(&[0, 1], &[0, 0]).abs() < 1e-15);
        assert!((correlator(&b, &[0, 0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn epr_zx_uncorrelated() {
        let z = Observable::zx(0.0);
        let x = Observable::zx(std::f64::consts::FRAC_PI_2);
        let b = behavior(&epr(), &[vec![z.clone(), z], vec![x.clone(), x]]).unwrap();
        assert!(correlator(&b, &[0, 0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn uniform_correlator_zero() {
        let b = Behavior::uniform(3, 2, 2);
        assert_eq!(correlator(&b, &[1, 0, 1]).unwrap(), 0.0);
        assert!(correlator(&Behavior::uniform(2, 2, 3), &[0, 0]).is_err());
    }

    #[test]
    fn post_select_ghz_to_epr() {
        let t = 0.5;
        let s = ghz(3, t).unwrap();
        let u = CVector::from_real(&[t.sin(), t.cos()]);
        let (p, c) = post_select(&s, 0, &u.projector()).unwrap();
        assert!((p - (2.0 * t).sin().powi(2) / 2.0).abs() < 1e-14);
        let v = c.amplitudes().unwrap();
        assert!((v.data[0].re - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((v.data[3].re - FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn post_select_w_first_party() {
        let (t1, t2) = (0.6, 0.3);
        let (_, c) = post_select(&wstate(t1, t2).unwrap(), 0, &CVector::basis(2, 0).projector()).unwrap();
        let v = c.amplitudes().unwrap();
        assert!((v.data[1].re - t2.cos()).abs() < 1e-14);
        assert!((v.data[2].re - t2.sin()).abs() < 1e-14);
    }

    #[test]
    fn post_select_chain_hub_gives_epr() {
        let (t1, t2) = (0.4_f64, 1.0_f64);
        let s = network_state(&NetworkSpec::chain(&[t1, t2])).unwrap();
        let phi = (t1.tan() * t2.tan()).atan();
        let u = CVector::from_real(&[phi.sin(), 0.0, 0.0, phi.cos()]);
        let (_, c) = post_select(&s, 1, &u.projector()).unwrap();
        let v = c.amplitudes().unwrap();
        assert!((v.data[0].re.abs() - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((v.data[3].re.abs() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_branch() {
        let s = wstate(0.6, 0.3).unwrap();
        let state = crate::states::product(&[CVector::basis(2, 0), CVector::basis(2, 0)]).unwrap();
        assert!(matches!(
            post_select(&state, 0, &CVector::basis(2, 1).projector()),
            Err(Error::ZeroProbability { party: 0 })
        ));
        // Mixed path accepts a rank-2 projector.
        let mixed = crate::states::add_white_noise(&s, 1.0).unwrap();
        let rank2 = CMatrix::identity(2);
        assert!(post_select(&mixed, 0, &rank2).is_ok());
    }

    #[test]
    fn mixed_and_pure_paths_agree() {
        let s = wstate(0.7, 0.9).unwrap();
        let m = crate::states::add_white_noise(&s, 1.0).unwrap();
        let u = CVector::from_real(&[0.6, 0.8]);
        let (p1, c1) = post_select(&s, 2, &u.projector()).unwrap();
        let (p2, c2) = post_select(&m, 2, &u.projector()).unwrap();
        assert!((p1 - p2).abs() < 1e-14);
        assert!(c1.density().max_abs_diff(&c2.density()) < 1e-14);
    }

    #[test]
    fn product_state_factorizes() {
        let s = crate::states::product(&[CVector::basis(2, 0), CVector::basis(2, 0)]).unwrap();
        let a = vec![Observable::zx(0.3), Observable::zx(1.3)];
        let b = vec![Observable::zx(-0.4), Observable::zx(2.0)];
        let beh = behavior(&s, &[a, b]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let exy = correlator(&beh, &[x, y]).unwrap();
                let ex: f64 = (0..2).map(|bb| beh.p(&[0, bb], &[x, y]) - beh.p(&[1, bb], &[x, y])).sum();
                let ey: f64 = (0..2).map(|aa| beh.p(&[aa, 0], &[x, y]) - beh.p(&[aa, 1], &[x, y])).sum();
                assert!((exy - ex * ey).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_is_normalized_and_local() {
        let b = Behavior::deterministic(2, 2, &[vec![0, 1], vec![1, 1], vec![0, 0]]);
        assert!(Behavior::new(b.n, b.m, b.k, b.table.clone()).is_ok());
        assert!(b.is_no_signaling(0.0));
        assert_eq!(b.p(&[1, 1, 0], &[1, 0, 1]), 1.0);
    }
}
