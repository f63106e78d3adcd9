//! Worked scenarios: states, post-selection plans and their closed forms.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use crate::bell::{chsh_functional, svetlichny_ghz_settings, svetlichny_mermin, BellFunctional, ChainedPlan, Round};
use crate::measure::{post_select, MeasurementPlan, Observable};
use crate::optimize::chsh_max_two_qubit;
use crate::qcore::{CMatrix, CVector, C64};
use crate::states::{facet_state, ghz, network_state, wstate, LabeledState, NetworkSpec};
use crate::{Error, Result};

/// sinθ|0⟩ + cosθ|1⟩, which maps cosθ|0…0⟩+sinθ|1…1⟩ to a maximally
/// entangled remainder.
pub fn ghz_projector(theta: f64) -> CMatrix {
    CVector::from_real(&[theta.sin(), theta.cos()]).projector()
}

/// sinφ|0…0⟩ + cosφ|1…1⟩ on one qubit per link, with tanφ = ∏ tanθ_s.
///
/// Contracting it against ⊗_s (cosθ_s|00⟩ + sinθ_s|11⟩) leaves equal weight
/// on the partners' |0…0⟩ and |1…1⟩.
pub fn hub_projector(thetas: &[f64]) -> CMatrix {
    let phi = thetas.iter().map(|t| t.tan()).product::<f64>().atan();
    let dim = 1usize << thetas.len();
    let mut v = CVector::zeros(dim);
    v.data[0] = C64::new(phi.sin(), 0.0);
    v.data[dim - 1] = C64::new(phi.cos(), 0.0);
    v.projector()
}

/// {σz, σx} for the first remaining party, (σz ± σx)/√2 for the second.
pub fn chsh_epr_settings() -> [Vec<Observable>; 2] {
    [
        vec![Observable::zx(0.0), Observable::zx(FRAC_PI_2)],
        vec![Observable::zx(PI / 4.0), Observable::zx(-PI / 4.0)],
    ]
}

/// {σz, σx} against cosθ̂σz ± sinθ̂σx with tanθ̂ = sin2θ, the CHSH optimum on
/// cosθ|00⟩ + sinθ|11⟩.
pub fn chsh_tilted_settings(theta: f64) -> [Vec<Observable>; 2] {
    let hat = (2.0 * theta).sin().atan();
    [vec![Observable::zx(0.0), Observable::zx(FRAC_PI_2)], vec![Observable::zx(hat), Observable::zx(-hat)]]
}

/// GHZ₃(θ), every party projected in turn, CHSH on the remaining pair.
pub fn example1(theta: f64) -> Result<(LabeledState, ChainedPlan)> {
    let state = ghz(3, theta)?;
    let rounds = (0..3)
        .map(|k| Round {
            plan: MeasurementPlan {
                post_select_party: k,
                projector: ghz_projector(theta),
                settings: chsh_epr_settings().to_vec(),
            },
            functional: chsh_functional(),
        })
        .collect();
    Ok((state, ChainedPlan { rounds }))
}

/// GHZ_{n+1}(θ) with the n-party Svetlichny operator in every round.
pub fn ghz_svetlichny_chain(n: usize, theta: f64) -> Result<(LabeledState, ChainedPlan)> {
    let state = ghz(n + 1, theta)?;
    let f = svetlichny_mermin(n)?;
    let rounds = (0..=n)
        .map(|k| Round {
            plan: MeasurementPlan {
                post_select_party: k,
                projector: ghz_projector(theta),
                settings: svetlichny_ghz_settings(n),
            },
            functional: f.clone(),
        })
        .collect();
    Ok((state, ChainedPlan { rounds }))
}

/// (n+1)·2^{n−1}·√2.
pub fn ghz_chain_value(n: usize) -> f64 {
    (n + 1) as f64 * (1u64 << (n - 1)) as f64 * SQRT_2
}

/// Conditional two-qubit states of W(θ₁, θ₂) after each party reads |0⟩.
pub fn wstate_rounds(theta1: f64, theta2: f64) -> Result<Vec<LabeledState>> {
    let w = wstate(theta1, theta2)?;
    let zero = CVector::basis(2, 0).projector();
    (0..3).map(|k| post_select(&w, k, &zero).map(|(_, s)| s)).collect()
}

/// Round maxima 2√(1 + C²) with C the concurrence of each conditional state.
pub fn wstate_round_closed_forms(theta1: f64, theta2: f64) -> [f64; 3] {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let s2t1 = (2.0 * theta1).sin();
    let n2 = c1 * c1 * c2 * c2 + s1 * s1;
    let n3 = c1 * c1 * s2 * s2 + s1 * s1;
    [
        2.0 * (1.0 + (2.0 * theta2).sin().powi(2)).sqrt(),
        2.0 * (1.0 + s2t1 * s2t1 * c2 * c2 / (n2 * n2)).sqrt(),
        2.0 * (1.0 + s2t1 * s2t1 * s2 * s2 / (n3 * n3)).sqrt(),
    ]
}

/// The round maxima as printed for this family, with a single power of the
/// normalization in the last two denominators.
pub fn wstate_round_printed_forms(theta1: f64, theta2: f64) -> [f64; 3] {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let s2t1 = (2.0 * theta1).sin();
    [
        2.0 * (1.0 + (2.0 * theta2).sin().powi(2)).sqrt(),
        2.0 * (1.0 + s2t1 * s2t1 * c2 * c2 / (c1 * c1 * c2 * c2 + s1 * s1)).sqrt(),
        2.0 * (1.0 + s2t1 * s2t1 * s2 * s2 / (c1 * c1 * s2 * s2 + s1 * s1)).sqrt(),
    ]
}

/// Chained plan over a network in which every pair of parties that needs to
/// share correlations is linked by a source.
///
/// Round k projects party k with [`hub_projector`] over its links; each other
/// party j then measures `local[j']` on the qubit it shares with k, where j'
/// counts the remaining parties in ascending order.
pub fn swap_plan(
    spec: &NetworkSpec,
    functional: &BellFunctional,
    local: &dyn Fn(usize) -> Vec<Vec<Observable>>,
) -> Result<ChainedPlan> {
    spec.validate()?;
    let owned = spec.ownership();
    let n = spec.n_parties;
    let mut rounds = Vec::with_capacity(n);
    for k in 0..n {
        let thetas: Vec<f64> = spec.sources.iter().filter(|s| s.parties.contains(&k)).map(|s| s.theta).collect();
        let base = local(k);
        let mut settings = Vec::with_capacity(n - 1);
        for (jj, j) in (0..n).filter(|&j| j != k).enumerate() {
            let (s, src) = spec
                .sources
                .iter()
                .enumerate()
                .find(|(_, s)| s.parties.contains(&k) && s.parties.contains(&j))
                .ok_or_else(|| Error::Invalid(format!("parties {k} and {j} share no source")))?;
            let particle = if src.parties[0] == j { 2 * s } else { 2 * s + 1 };
            let pos = owned[j].iter().position(|&q| q == particle).expect("owned particle");
            settings.push(base[jj].iter().map(|o| o.on_qubit(owned[j].len(), pos)).collect());
        }
        rounds.push(Round {
            plan: MeasurementPlan { post_select_party: k, projector: hub_projector(&thetas), settings },
            functional: functional.clone(),
        });
    }
    Ok(ChainedPlan { rounds })
}

/// Triangle of three sources with CHSH on the swapped pair in every round.
pub fn triangle_example(thetas: [f64; 3]) -> Result<(LabeledState, ChainedPlan)> {
    let spec = NetworkSpec::triangle(thetas);
    let state = network_state(&spec)?;
    let plan = swap_plan(&spec, &chsh_functional(), &|_| chsh_epr_settings().to_vec())?;
    Ok((state, plan))
}

/// Largest complete network simulated, in parties.
pub const COMPLETE_MAX_PARTIES: usize = 4;

/// Complete network on n+1 parties with the n-party Svetlichny operator.
pub fn complete_example(n: usize, thetas: &[f64]) -> Result<(LabeledState, ChainedPlan)> {
    if n + 1 > COMPLETE_MAX_PARTIES {
        return Err(Error::TooLarge(format!(
            "complete network on {} parties needs {} qubits",
            n + 1,
            n * (n + 1)
        )));
    }
    let spec = NetworkSpec::complete(n + 1, thetas)?;
    let state = network_state(&spec)?;
    let plan = swap_plan(&spec, &svetlichny_mermin(n)?, &|_| svetlichny_ghz_settings(n))?;
    Ok((state, plan))
}

/// Chain A—B—C of two sources. A and C read |0⟩; B uses the hub projector.
pub fn chain_example(theta1: f64, theta2: f64) -> Result<(LabeledState, ChainedPlan)> {
    let spec = NetworkSpec::chain(&[theta1, theta2]);
    let state = network_state(&spec)?;
    let zero = CVector::basis(2, 0).projector();
    let chsh = chsh_functional();
    // Round A: B's second particle and C hold source 2.
    let [b1, c1] = chsh_tilted_settings(theta2);
    let round_a = Round {
        plan: MeasurementPlan {
            post_select_party: 0,
            projector: zero.clone(),
            settings: vec![b1.iter().map(|o| o.on_qubit(2, 1)).collect(), c1],
        },
        functional: chsh.clone(),
    };
    let [a2, c2] = chsh_epr_settings();
    let round_b = Round {
        plan: MeasurementPlan {
            post_select_party: 1,
            projector: hub_projector(&[theta1, theta2]),
            settings: vec![a2, c2],
        },
        functional: chsh.clone(),
    };
    // Round C: A and B's first particle hold source 1.
    let [a3, b3] = chsh_tilted_settings(theta1);
    let round_c = Round {
        plan: MeasurementPlan {
            post_select_party: 2,
            projector: zero,
            settings: vec![a3, b3.iter().map(|o| o.on_qubit(2, 0)).collect()],
        },
        functional: chsh,
    };
    Ok((state, ChainedPlan { rounds: vec![round_a, round_b, round_c] }))
}

/// 2√2 + 2√(1+sin²2θ₁) + 2√(1+sin²2θ₂).
pub fn chain_closed_form(theta1: f64, theta2: f64) -> f64 {
    2.0 * SQRT_2
        + 2.0 * (1.0 + (2.0 * theta1).sin().powi(2)).sqrt()
        + 2.0 * (1.0 + (2.0 * theta2).sin().powi(2)).sqrt()
}

/// 2√2 + 2√(1+sin²θ₁) + 2√(1+sin²θ₂), the printed total for the chain.
pub fn chain_printed_form(theta1: f64, theta2: f64) -> f64 {
    2.0 * SQRT_2 + 2.0 * (1.0 + theta1.sin().powi(2)).sqrt() + 2.0 * (1.0 + theta2.sin().powi(2)).sqrt()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProjectorChoice {
    pub party: usize,
    /// cos(polar/2)|0⟩ + e^{i·azimuth} sin(polar/2)|1⟩.
    pub polar: f64,
    pub azimuth: f64,
    pub value: f64,
}

fn qubit_projector(polar: f64, azimuth: f64) -> CMatrix {
    let (s, c) = (polar / 2.0).sin_cos();
    CVector::new(vec![C64::new(c, 0.0), C64::from_polar(s, azimuth)]).projector()
}

fn round_chsh_max(state: &LabeledState, party: usize, polar: f64, azimuth: f64) -> f64 {
    post_select(state, party, &qubit_projector(polar, azimuth))
        .and_then(|(_, s)| chsh_max_two_qubit(&s))
        .unwrap_or(f64::NEG_INFINITY)
}

/// Best CHSH maximum for each round of a three-qubit state over all
/// single-qubit post-selection projectors: a `grid`² scan of the Bloch sphere
/// followed by shrinking local scans.
pub fn best_chsh_lift(state: &LabeledState, grid: usize) -> Result<Vec<ProjectorChoice>> {
    if state.n_parties() != 3 || !state.is_qubit_register() {
        return Err(Error::Dimension("lift search needs a three-qubit state".into()));
    }
    let grid = grid.max(4);
    let mut out = Vec::with_capacity(3);
    for party in 0..3 {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=grid {
            for j in 0..grid {
                let (p, a) = (PI * i as f64 / grid as f64, TAU * j as f64 / grid as f64);
                let v = round_chsh_max(state, party, p, a);
                if v > best.0 {
                    best = (v, p, a);
                }
            }
        }
        let mut step = PI / grid as f64;
        while step > 1e-9 {
            let mut moved = false;
            for (dp, da) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let (p, a) = (best.1 + dp * step, best.2 + da * step);
                let v = round_chsh_max(state, party, p, a);
                if v > best.0 {
                    best = (v, p, a);
                    moved = true;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        out.push(ProjectorChoice { party, polar: best.1, azimuth: best.2.rem_euclid(TAU), value: best.0 });
    }
    Ok(out)
}

/// Facet-inequality state with its best CHSH lift.
pub fn facet_state_lift(grid: usize) -> Result<Vec<ProjectorChoice>> {
    best_chsh_lift(&facet_state(), grid)
}

/// 2√2 + 4√1.75, the value claimed for the facet-inequality state.
pub fn facet_state_claim() -> f64 {
    2.0 * SQRT_2 + 4.0 * 1.75f64.sqrt()
}

/// Visibility at which the noisy chained GHZ value 6√2·v meets the
/// biseparable bound 8.
pub fn ghz3_visibility() -> f64 {
    8.0 / (6.0 * SQRT_2)
}

/// Visibility at which a noiseless value scaled by v meets `bound`.
pub fn visibility_for(bound: f64, noiseless: f64) -> Result<f64> {
    crate::bounds::noise_visibility(bound, noiseless)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::chained_value;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn example1_hits_six_root_two() {
        for t in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 0.1] {
            let (s, p) = example1(t).unwrap();
            let v = chained_value(&s, &p).unwrap();
            assert!((v.total - 6.0 * SQRT_2).abs() < 1e-12, "{t}: {}", v.total);
        }
    }

    #[test]
    fn ghz_chain_svetlichny() {
        for n in 2..=4 {
            let (s, p) = ghz_svetlichny_chain(n, 0.4).unwrap();
            let v = chained_value(&s, &p).unwrap();
            assert!((v.total - ghz_chain_value(n)).abs() < 1e-10);
        }
    }

    #[test]
    fn hub_projector_balances_chain() {
        let p = hub_projector(&[0.3, 0.9]);
        let phi = (0.3f64.tan() * 0.9f64.tan()).atan();
        assert!((p[(0, 0)].re - phi.sin().powi(2)).abs() < 1e-15);
        assert!((p[(3, 3)].re - phi.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn wstate_round_forms_match_oracle() {
        for (t1, t2) in [(0.3, 0.7), (1.2, 0.2), (FRAC_PI_4, FRAC_PI_4)] {
            let states = wstate_rounds(t1, t2).unwrap();
            let closed = wstate_round_closed_forms(t1, t2);
            for (s, c) in states.iter().zip(closed) {
                assert!((chsh_max_two_qubit(s).unwrap() - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn printed_w_forms_agree_only_on_first_round() {
        let (a, b) = (wstate_round_closed_forms(0.5, 0.6), wstate_round_printed_forms(0.5, 0.6));
        assert_eq!(a[0], b[0]);
        assert!((a[1] - b[1]).abs() > 1e-3 && (a[2] - b[2]).abs() > 1e-3);
    }

    #[test]
    fn chain_matches_corrected_form() {
        for (t1, t2) in [(0.3, 0.7), (1.2, 0.2), (FRAC_PI_3, FRAC_PI_3)] {
            let (s, p) = chain_example(t1, t2).unwrap();
            let v = chained_value(&s, &p).unwrap();
            assert!((v.total - chain_closed_form(t1, t2)).abs() < 1e-10, "{} vs {}", v.total, chain_closed_form(t1, t2));
        }
        // The two forms meet where sin2θ = sinθ.
        let t = FRAC_PI_3;
        assert!((chain_closed_form(t, t) - chain_printed_form(t, t)).abs() < 1e-12);
    }

    #[test]
    fn triangle_hits_six_root_two() {
        for th in [[0.3, 0.7, 1.1], [FRAC_PI_4; 3], [1.4, 0.2, 0.9]] {
            let (s, p) = triangle_example(th).unwrap();
            let v = chained_value(&s, &p).unwrap();
            assert!((v.total - 6.0 * SQRT_2).abs() < 1e-10, "{th:?}: {}", v.total);
        }
    }

    #[test]
    fn complete_network_three_and_four_parties() {
        let (s, p) = complete_example(2, &[0.3, 0.8, 1.2]).unwrap();
        assert!((chained_value(&s, &p).unwrap().total - ghz_chain_value(2)).abs() < 1e-10);
        let (s, p) = complete_example(3, &[0.3, 0.8, 1.2, 0.5, 0.6, 1.0]).unwrap();
        assert!((chained_value(&s, &p).unwrap().total - ghz_chain_value(3)).abs() < 1e-9);
        assert!(matches!(complete_example(4, &[0.5; 10]), Err(Error::TooLarge(_))));
    }

    #[test]
    fn lift_search_on_ghz_finds_epr() {
        let s = ghz(3, 0.4).unwrap();
        let best = best_chsh_lift(&s, 24).unwrap();
        for r in best {
            assert!((r.value - 2.0 * SQRT_2).abs() < 1e-8);
        }
    }

    #[test]
    fn visibility_value() {
        assert!((ghz3_visibility() - 4.0 / (3.0 * SQRT_2)).abs() < 1e-15);
        assert!((visibility_for(8.0, 8.0 * SQRT_2).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
