//! Independent re-derivations of values the library computes another way.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2, TAU};

use nonloc::bell::{chsh_functional, evaluate, facet_functional, hardy_functional, svetlichny_mermin, BellFunctional};
use nonloc::bounds::{bipartite_ns_vertices, classical_bound_bruteforce, ns_bound_lp, svd_quantum_bound};
use nonloc::measure::{behavior, Behavior, Observable};
use nonloc::optimize::{
    chsh_max_two_qubit, linspace, optimize_settings, s50_formula, s50_surface, OptimizerConfig, Plane,
};
use nonloc::scenarios::{wstate_round_closed_forms, wstate_rounds};
use nonloc::states::ghz;

/// Real 2×2 matrices suffice for zx-plane observables on real states.
type M2 = [[f64; 2]; 2];

fn zx(t: f64) -> M2 {
    [[t.cos(), t.sin()], [t.sin(), -t.cos()]]
}

fn expect2(psi: &[f64; 4], a: M2, b: M2) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += psi[i] * a[i >> 1][j >> 1] * b[i & 1][j & 1] * psi[j];
        }
    }
    acc
}

#[test]
fn chsh_on_epr_by_hand() {
    let psi = [1.0 / SQRT_2, 0.0, 0.0, 1.0 / SQRT_2];
    let (a, b) = ([zx(0.0), zx(PI / 2.0)], [zx(FRAC_PI_4), zx(-FRAC_PI_4)]);
    let hand = expect2(&psi, a[0], b[0]) + expect2(&psi, a[0], b[1]) + expect2(&psi, a[1], b[0])
        - expect2(&psi, a[1], b[1]);
    assert!((hand - 2.0 * SQRT_2).abs() < 1e-14);
    let s = ghz(2, FRAC_PI_4).unwrap();
    let opt = optimize_settings(&s, &chsh_functional(), Plane::Zx, &OptimizerConfig::default()).unwrap();
    assert!((opt.value - hand).abs() < 1e-9);
    assert!((chsh_max_two_qubit(&s).unwrap() - hand).abs() < 1e-12);
}

fn local_max_by_sign_assignment(alpha: &[f64], n: usize) -> f64 {
    // Each party fixes a ±1 value per setting.
    let mut best = f64::NEG_INFINITY;
    for strat in 0..1usize << (2 * n) {
        let val = |p: usize, x: usize| if (strat >> (2 * p + x)) & 1 == 0 { 1.0 } else { -1.0 };
        let mut v = 0.0;
        for (xi, &a) in alpha.iter().enumerate() {
            let mut prod = 1.0;
            for p in 0..n {
                prod *= val(p, (xi >> (n - 1 - p)) & 1);
            }
            v += a * prod;
        }
        best = best.max(v);
    }
    best
}

fn correlator_weights(f: &BellFunctional) -> Vec<f64> {
    match &f.coeffs {
        nonloc::bell::Coefficients::Correlator(a) => a.clone(),
        _ => panic!("correlator form expected"),
    }
}

#[test]
fn local_bounds_agree_with_sign_enumeration() {
    let chsh = chsh_functional();
    assert_eq!(local_max_by_sign_assignment(&correlator_weights(&chsh), 2), 2.0);
    assert_eq!(classical_bound_bruteforce(&chsh).unwrap(), 2.0);
    for n in 2..=5 {
        let f = svetlichny_mermin(n).unwrap();
        let hand = local_max_by_sign_assignment(&correlator_weights(&f), n);
        assert_eq!(hand, (1u64 << n.div_ceil(2)) as f64);
        assert_eq!(classical_bound_bruteforce(&f).unwrap(), hand);
    }
}

#[test]
fn ns_bounds_agree_with_vertices_and_boxes() {
    let chsh = chsh_functional();
    let vmax = bipartite_ns_vertices().iter().map(|b| evaluate(&chsh, b).unwrap()).fold(f64::MIN, f64::max);
    assert_eq!(vmax, 4.0);
    assert!((ns_bound_lp(&chsh).unwrap() - 4.0).abs() < 1e-8);
    // Box with a₁⊕a₂⊕a₃ fixed by the sign of α_x, uniform otherwise.
    let f = svetlichny_mermin(3).unwrap();
    let alpha = correlator_weights(&f);
    let mut t = vec![0.0; 64];
    for (x, &a) in alpha.iter().enumerate() {
        let parity = usize::from(a < 0.0);
        for out in 0..8usize {
            if (out.count_ones() as usize) % 2 == parity {
                t[x * 8 + out] = 0.25;
            }
        }
    }
    let b = Behavior::new(3, 2, 2, t).unwrap();
    assert!(b.is_no_signaling(1e-12));
    assert_eq!(evaluate(&f, &b).unwrap(), 8.0);
    assert!((ns_bound_lp(&f).unwrap() - 8.0).abs() < 1e-8);
}

#[test]
fn facet_and_hardy_local_bounds_are_zero() {
    assert!(classical_bound_bruteforce(&facet_functional()).unwrap().abs() < 1e-12);
    for n in 2..=4 {
        assert!(classical_bound_bruteforce(&hardy_functional(n).unwrap()).unwrap().abs() < 1e-12);
    }
}

#[test]
fn ghz_correlation_tensor_by_hand() {
    // GHZ₃(π/4): T_zzz-type entries vanish for odd n; the xxx, xyy, yxy, yyx
    // entries are ±1, so the matricized top singular value is √2.
    let s = ghz(3, FRAC_PI_4).unwrap();
    assert!((svd_quantum_bound(&s).unwrap() - 4.0 * SQRT_2).abs() < 1e-9);
    let opt = optimize_settings(&s, &svetlichny_mermin(3).unwrap(), Plane::General, &OptimizerConfig::default())
        .unwrap();
    assert!((opt.value - 4.0 * SQRT_2).abs() < 1e-6);
}

#[test]
fn w_rounds_by_concurrence() {
    for (t1, t2) in [(0.2, 0.3), (0.9, 1.3), (1.1, 0.6)] {
        let (s1, c1, s2, c2) = (f64::sin(t1), f64::cos(t1), f64::sin(t2), f64::cos(t2));
        // Remaining amplitude pairs after each party reads 0.
        let pairs = [(c1 * s2, c1 * c2), (s1, c1 * c2), (s1, c1 * s2)];
        let states = wstate_rounds(t1, t2).unwrap();
        let closed = wstate_round_closed_forms(t1, t2);
        for ((a, b), (st, cf)) in pairs.iter().zip(states.iter().zip(closed)) {
            let c = 2.0 * a * b / (a * a + b * b);
            let hand = 2.0 * (1.0 + c * c).sqrt();
            assert!((hand - cf).abs() < 1e-12);
            assert!((chsh_max_two_qubit(st).unwrap() - hand).abs() < 1e-12);
        }
    }
}

#[test]
fn s50_surface_pin() {
    let grid = linspace(0.0, TAU, 50);
    let surface = s50_surface([0.5; 4], &grid).unwrap();
    let max = surface.iter().map(|p| p.value).fold(f64::MIN, f64::max);
    // Grid maximum, first recorded at (θ, θ, θ) with θ = 24·2π/49.
    assert!((max - 15.999993665713982).abs() < 1e-9, "{max}");
    let sin = f64::sin;
    let hand = |t: [f64; 3]| {
        let s: f64 = t.iter().sum();
        let (a, b, c) = (sin(s - 2.0 * t[0]), sin(s - 2.0 * t[1]), sin(s - 2.0 * t[2]));
        let k = 2.0 * (0.75 + 0.25);
        4.0 * (-sin(s) + a + b + c) + k * (sin(s) + a - b + c) + k * (sin(s) - a + b + c) + k * (sin(s) + a + b - c)
    };
    for p in surface.iter().step_by(997) {
        assert!((p.value - hand(p.theta)).abs() < 1e-12);
    }
    assert_eq!(s50_formula([0.5; 4], [PI / 2.0, FRAC_PI_4, FRAC_PI_4]), 12.0);
}

#[test]
fn born_rule_matches_hand_expectation() {
    let t = 0.37;
    let s = ghz(2, t).unwrap();
    let psi = [t.cos(), 0.0, 0.0, t.sin()];
    let (a, b) = (0.4, 1.9);
    let obs = vec![vec![Observable::zx(a); 2], vec![Observable::zx(b); 2]];
    let bh = behavior(&s, &obs).unwrap();
    let e = nonloc::measure::correlator(&bh, &[0, 0]).unwrap();
    assert!((e - expect2(&psi, zx(a), zx(b))).abs() < 1e-14);
}
