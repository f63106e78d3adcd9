//! Measurement-setting search.
//!
//! Every Bell value here is multilinear in the parties' observables, and a
//! unit Bloch vector depends on each polar or azimuthal angle through
//! (cos t, sin t). Along any single coordinate the objective is therefore
//! exactly a + b·cos t + c·sin t, and three evaluations locate its maximum.
//! The search is coordinate ascent with that closed-form line step, restarted
//! from a shifted Halton sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::bell::{evaluate, svetlichny_mermin, BellFunctional, Coefficients};
use crate::bounds::correlation_tensor;
use crate::measure::{behavior, product_expectation, Observable};
use crate::qcore::{digits, singular_values, CMatrix, CVector};
use crate::states::{wstate_general, LabeledState};
use crate::{Error, Result};

/// 2√(s₁² + s₂²) from the two largest singular values of T_ij = Tr[ρ σ_i⊗σ_j].
pub fn chsh_max_two_qubit(state: &LabeledState) -> Result<f64> {
    if state.n_parties() != 2 || !state.is_qubit_register() {
        return Err(Error::Dimension("CHSH maximum needs a two-qubit state".into()));
    }
    let t = correlation_tensor(state)?;
    let s = singular_values(&CMatrix::from_real(3, 3, &t)?);
    Ok(2.0 * (s[0] * s[0] + s[1] * s[1]).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    /// cos t·σz + sin t·σx; only the polar angle moves.
    Zx,
    /// Full Bloch sphere in polar/azimuth coordinates.
    General,
}

/// Polar and azimuthal angle of one setting's Bloch vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingAngles {
    pub polar: f64,
    pub azimuth: f64,
}

impl SettingAngles {
    pub fn observable(&self) -> Observable {
        Observable::spherical(self.polar, self.azimuth)
    }
}

/// Angles indexed by party, then setting.
pub type Angles = Vec<Vec<SettingAngles>>;

pub fn observables(angles: &Angles) -> Vec<Vec<Observable>> {
    angles.iter().map(|p| p.iter().map(SettingAngles::observable).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    /// Worker threads for restarts; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 32, seed: 0x5eed, max_sweeps: 200, step_tol: 1e-10, value_tol: 1e-13, jobs: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_sweeps == 0 {
            return Err(Error::Invalid("restarts and max_sweeps must be at least 1".into()));
        }
        if !(self.step_tol > 0.0 && self.value_tol > 0.0) {
            return Err(Error::Invalid("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub value: f64,
    pub angles: Angles,
    /// Index of the restart that produced the optimum.
    pub restart: usize,
    /// False when the winning restart stopped on `max_sweeps`.
    pub converged: bool,
}

/// Evaluates a functional at given angles, with a fast path for correlator
/// coefficients that skips building the full behavior.
struct Objective<'a> {
    state: &'a LabeledState,
    f: &'a BellFunctional,
}

impl Objective<'_> {
    fn value(&self, angles: &Angles) -> Result<f64> {
        let obs = observables(angles);
        match &self.f.coeffs {
            Coefficients::Correlator(alpha) => {
                let dims = vec![self.f.m; self.f.n];
                let mut acc = 0.0;
                for (xi, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let ops: Vec<&CMatrix> = digits(xi, &dims)
                            .into_iter()
                            .enumerate()
                            .map(|(p, x)| &obs[p][x].matrix)
                            .collect();
                        acc += a * product_expectation(self.state, &ops);
                    }
                }
                Ok(acc)
            }
            Coefficients::Probability(_) => evaluate(self.f, &behavior(self.state, &obs)?),
        }
    }
}

#[derive(Clone, Copy)]
struct Coord {
    party: usize,
    setting: usize,
    azimuth: bool,
}

fn coords(n: usize, m: usize, plane: Plane) -> Vec<Coord> {
    let mut out = Vec::new();
    for party in 0..n {
        for setting in 0..m {
            out.push(Coord { party, setting, azimuth: false });
            if plane == Plane::General {
                out.push(Coord { party, setting, azimuth: true });
            }
        }
    }
    out
}

fn get(angles: &Angles, c: Coord) -> f64 {
    let s = angles[c.party][c.setting];
    if c.azimuth {
        s.azimuth
    } else {
        s.polar
    }
}

fn set(angles: &mut Angles, c: Coord, v: f64) {
    let s = &mut angles[c.party][c.setting];
    if c.azimuth {
        s.azimuth = v;
    } else {
        s.polar = v;
    }
}

fn wrap(t: f64) -> f64 {
    t.rem_euclid(TAU)
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: usize, b: usize) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

fn first_primes(k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(k);
    let mut c = 2;
    while out.len() < k {
        if out.iter().all(|p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Starting points: Halton points in [0, 2π)^d with a seeded
/// Cranley–Patterson rotation.
fn starts(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let primes = first_primes(dim);
    (0..count)
        .map(|r| {
            (0..dim)
                .map(|d| TAU * (radical_inverse(r + 1, primes[d]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

fn ascend(obj: &Objective, cs: &[Coord], mut angles: Angles, cfg: &OptimizerConfig) -> Result<(f64, Angles, bool)> {
    let mut value = obj.value(&angles)?;
    for _ in 0..cfg.max_sweeps {
        let before = value;
        let mut max_step: f64 = 0.0;
        for &c in cs {
            let old = get(&angles, c);
            let probe = |t: f64, a: &mut Angles| -> Result<f64> {
                set(a, c, t);
                obj.value(a)
            };
            let f0 = probe(0.0, &mut angles)?;
            let f1 = probe(FRAC_PI_2, &mut angles)?;
            let f2 = probe(PI, &mut angles)?;
            let a0 = 0.5 * (f0 + f2);
            let (b, s) = (0.5 * (f0 - f2), f1 - a0);
            let t = wrap(s.atan2(b));
            let candidate = probe(t, &mut angles)?;
            if candidate > value {
                value = candidate;
                max_step = max_step.max(angular_distance(t, old));
            } else {
                set(&mut angles, c, old);
            }
        }
        if value - before <= cfg.value_tol || max_step <= cfg.step_tol {
            return Ok((value, angles, true));
        }
    }
    Ok((value, angles, false))
}

/// Maximizes `f` on `state` over local settings in the chosen plane.
///
/// Returns the best local maximum over `cfg.restarts` starts. Ties break
/// toward the lowest restart index, so the result does not depend on
/// `cfg.jobs`.
pub fn optimize_settings(
    state: &LabeledState,
    f: &BellFunctional,
    plane: Plane,
    cfg: &OptimizerConfig,
) -> Result<Optimum> {
    cfg.validate()?;
    if state.n_parties() != f.n {
        return Err(Error::Dimension(format!("{}-party functional on {}-party state", f.n, state.n_parties())));
    }
    if !state.is_qubit_register() {
        return Err(Error::Invalid("setting search needs one qubit per party".into()));
    }
    let obj = Objective { state, f };
    let cs = coords(f.n, f.m, plane);
    let pts = starts(cs.len(), cfg.restarts, cfg.seed);
    let run = |r: usize| -> Result<(f64, Angles, bool)> {
        let mut angles = vec![vec![SettingAngles { polar: 0.0, azimuth: 0.0 }; f.m]; f.n];
        for (&c, &v) in cs.iter().zip(&pts[r]) {
            set(&mut angles, c, v);
        }
        ascend(&obj, &cs, angles, cfg)
    };
    let results: Vec<Result<(f64, Angles, bool)>> = if cfg.jobs == 0 {
        (0..cfg.restarts).into_par_iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.restarts).into_par_iter().map(run).collect())
    };
    let mut best: Option<Optimum> = None;
    for (restart, r) in results.into_iter().enumerate() {
        let (value, angles, converged) = r?;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(Optimum { value, angles, restart, converged });
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Closed-form chained Svetlichny sum over the four rounds of a W₄ state in
/// the symmetric case α₁ = α₂ with shared angles across rounds.
pub fn s50_formula(alphas: [f64; 4], theta: [f64; 3]) -> f64 {
    let [a1, a2, a3, a4] = alphas;
    let t: f64 = theta.iter().sum();
    let [ta, tb, tc] = theta.map(|x| (t - 2.0 * x).sin());
    let s = t.sin();
    4.0 * (-s + ta + tb + tc)
        + 2.0 * (3.0 * a1 * a4 + a1 * a1) * (s + ta - tb + tc)
        + 2.0 * (3.0 * a1 * a3 + a1 * a1) * (s - ta + tb + tc)
        + 2.0 * (2.0 * a3 * a4 + a2 * a4 + a2 * a3) * (s + ta + tb - tc)
}

fn check_s50_alphas(alphas: [f64; 4]) -> Result<()> {
    let norm2: f64 = alphas.iter().map(|a| a * a).sum();
    if (norm2 - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("alphas have squared norm {norm2}")));
    }
    if (alphas[0] - alphas[1]).abs() > 1e-12 {
        return Err(Error::Invalid("closed form requires alpha1 == alpha2".into()));
    }
    Ok(())
}

/// W₄ = α₁|0001⟩ + α₂|0010⟩ + α₃|0100⟩ + α₄|1000⟩.
pub fn w4_state(alphas: [f64; 4]) -> Result<LabeledState> {
    wstate_general(&[alphas[3], alphas[2], alphas[1], alphas[0]])
}

/// Born-rule chained Svetlichny sum on W₄: each party in turn is projected on
/// |0⟩ and the other three measure zx(θ_j) and zx(θ_j + π/2).
pub fn s50_simulated(alphas: [f64; 4], theta: [f64; 3]) -> Result<f64> {
    check_s50_alphas(alphas)?;
    let state = w4_state(alphas)?;
    let f = svetlichny_mermin(3)?;
    let settings: Vec<Vec<Observable>> =
        theta.iter().map(|&t| vec![Observable::zx(t), Observable::zx(t + FRAC_PI_2)]).collect();
    let zero = CVector::basis(2, 0).projector();
    let mut total = 0.0;
    for party in 0..4 {
        let (_, cond) = crate::measure::post_select(&state, party, &zero)?;
        total += evaluate(&f, &behavior(&cond, &settings)?)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub theta: [f64; 3],
    pub value: f64,
}

/// Closed-form surface over the cube `grid`³.
pub fn s50_surface(alphas: [f64; 4], grid: &[f64]) -> Result<Vec<SurfacePoint>> {
    check_s50_alphas(alphas)?;
    let mut out = Vec::with_capacity(grid.len().pow(3));
    for &t1 in grid {
        for &t2 in grid {
            for &t3 in grid {
                let theta = [t1, t2, t3];
                out.push(SurfacePoint { theta, value: s50_formula(alphas, theta) });
            }
        }
    }
    Ok(out)
}

/// `count` evenly spaced points on [lo, hi], endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::chsh_functional;
    use crate::states::{ghz, product, wstate};
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn quick() -> OptimizerConfig {
        OptimizerConfig { restarts: 8, ..Default::default() }
    }

    #[test]
    fn chsh_max_known_states() {
        let epr = ghz(2, FRAC_PI_4).unwrap();
        assert!((chsh_max_two_qubit(&epr).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        let prod = product(&[CVector::basis(2, 0), CVector::basis(2, 0)]).unwrap();
        assert!((chsh_max_two_qubit(&prod).unwrap() - 2.0).abs() < 1e-12);
        let t = 0.3_f64;
        let s = ghz(2, t).unwrap();
        let want = 2.0 * (1.0 + (2.0 * t).sin().powi(2)).sqrt();
        assert!((chsh_max_two_qubit(&s).unwrap() - want).abs() < 1e-12);
        assert!(chsh_max_two_qubit(&ghz(3, t).unwrap()).is_err());
    }

    #[test]
    fn optimizer_matches_chsh_oracle() {
        for t in [0.2, 0.5, FRAC_PI_4] {
            let s = ghz(2, t).unwrap();
            let opt = optimize_settings(&s, &chsh_functional(), Plane::Zx, &quick()).unwrap();
            assert!((opt.value - chsh_max_two_qubit(&s).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn optimizer_ghz3_svetlichny() {
        let s = ghz(3, FRAC_PI_4).unwrap();
        let f = svetlichny_mermin(3).unwrap();
        let opt = optimize_settings(&s, &f, Plane::General, &quick()).unwrap();
        assert!((opt.value - 4.0 * SQRT_2).abs() < 1e-6, "{}", opt.value);
        let direct = evaluate(&f, &behavior(&s, &observables(&opt.angles)).unwrap()).unwrap();
        assert!((direct - opt.value).abs() < 1e-12);
    }

    #[test]
    fn optimizer_is_thread_count_independent() {
        let s = wstate(0.7, 0.4).unwrap();
        let f = svetlichny_mermin(3).unwrap();
        let a = optimize_settings(&s, &f, Plane::General, &OptimizerConfig { jobs: 1, ..quick() }).unwrap();
        let b = optimize_settings(&s, &f, Plane::General, &OptimizerConfig { jobs: 3, ..quick() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn halton_radical_inverse() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { step_tol: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn s50_vanishes_at_zero() {
        assert_eq!(s50_formula([0.5; 4], [0.0; 3]), 0.0);
    }

    #[test]
    fn s50_rejects_asymmetric_alphas() {
        let r = 0.5f64.sqrt();
        assert!(s50_surface([r, 0.0, 0.5, 0.5], &[0.0]).is_err());
        assert!(s50_surface([0.5, 0.5, 0.5, 0.4], &[0.0]).is_err());
        assert!(s50_simulated([0.6, 0.5, 0.5, 0.3], [0.1; 3]).is_err());
    }

    #[test]
    fn s50_simulation_rounds_are_bounded() {
        // Each round is a three-qubit Svetlichny value, at most 4√2.
        let v = s50_simulated([0.5; 4], [0.3, 1.1, 2.0]).unwrap();
        assert!(v.abs() <= 4.0 * 4.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn w4_layout() {
        assert!(w4_state([0.1, 0.1, 0.7, 0.6]).is_err());
        let a = [0.5, 0.5, 0.5, 0.5];
        let v = w4_state(a).unwrap();
        let amp = v.amplitudes().unwrap();
        for idx in [1usize, 2, 4, 8] {
            assert!((amp.data[idx].re - 0.5).abs() < 1e-15);
        }
    }
}
