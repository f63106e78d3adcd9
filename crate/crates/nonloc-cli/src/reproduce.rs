//! Reproduction targets for the worked examples.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, SQRT_2, TAU};

use anyhow::bail;
use nonloc::bell::{chained_value, chsh_functional, facet_functional, hardy_functional, svetlichny_mermin, ChainedValue};
use nonloc::bounds::{
    classical_bound_bruteforce, classify, delta3_bounds, noise_visibility, noise_visibility_for, ns_bound_lp,
    svetlichny_chain_bounds, BoundTable, ClassLabel,
};
use nonloc::optimize::{
    chsh_max_two_qubit, linspace, optimize_settings, s50_simulated, s50_surface, OptimizerConfig, Plane,
};
use nonloc::scenarios::{
    chain_closed_form, chain_example, chain_printed_form, complete_example, example1, facet_state_claim,
    facet_state_lift, ghz3_visibility, ghz_chain_value, ghz_svetlichny_chain, triangle_example,
    wstate_round_closed_forms, wstate_round_printed_forms, wstate_rounds,
};
use nonloc::states::{add_white_noise, facet_state, product};
use nonloc::qcore::CVector;
use serde_json::json;

use crate::report::{Checker, Relation, Report, Table};
use crate::{lib_error, Context, InputError};

pub const TARGETS: &[&str] =
    &["ex1", "ex2-grid", "ex3", "ex4", "s1", "s2-surface", "s3", "s4", "e-facet-state", "visibility"];

/// Accepts `ex4`, `ex4(3)` and `ex4` with `--n 3`.
pub fn parse_target(raw: &str, n_flag: Option<usize>) -> anyhow::Result<(String, Option<usize>)> {
    let (name, n) = match raw.split_once('(') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| InputError(format!("malformed target {raw:?}")))?;
            let n: usize = inner.trim().parse().map_err(|_| InputError(format!("bad size in {raw:?}")))?;
            (name.to_string(), Some(n))
        }
        None => (raw.to_string(), None),
    };
    if !TARGETS.contains(&name.as_str()) {
        bail!(InputError(format!("unknown target {raw:?}; expected one of {}", TARGETS.join(", "))));
    }
    if n.is_some() && n_flag.is_some() && n != n_flag {
        bail!(InputError(format!("size given twice: {raw} and --n {}", n_flag.unwrap_or_default())));
    }
    let n = n.or(n_flag);
    if n.is_some() && !matches!(name.as_str(), "ex4" | "s4") {
        bail!(InputError(format!("target {name} takes no size")));
    }
    Ok((name, n))
}

pub fn run(ctx: &Context, raw: &str, n_flag: Option<usize>) -> anyhow::Result<Report> {
    let (name, n) = parse_target(raw, n_flag)?;
    let label = match n {
        Some(n) => format!("{name}({n})"),
        None => name.clone(),
    };
    let mut r = Report::new("reproduce", label, ctx.seed, ctx.tol);
    let c = Checker { tol: ctx.tol };
    match name.as_str() {
        "ex1" => ex1(&mut r, c)?,
        "ex2-grid" => ex2_grid(ctx, &mut r, c)?,
        "ex3" => ex3(&mut r, c, "ex3")?,
        "ex4" => ex4(&mut r, c, n.unwrap_or(3))?,
        "s1" => s1(&mut r, c)?,
        "s2-surface" => s2_surface(&mut r, c)?,
        "s3" => ex3(&mut r, c, "s3")?,
        "s4" => s4(&mut r, c, n.unwrap_or(2))?,
        "e-facet-state" => e_facet_state(ctx, &mut r, c)?,
        "visibility" => visibility(&mut r, c)?,
        _ => unreachable!("validated by parse_target"),
    }
    let (functionals, states) = uses(&name);
    r.data["uses"] = json!({ "functionals": functionals, "states": states });
    Ok(r)
}

/// Functional families and state constructors each target exercises.
fn uses(name: &str) -> (&'static [&'static str], &'static [&'static str]) {
    match name {
        "ex1" => (&["chsh"], &["ghz", "product"]),
        "ex2-grid" => (&["chsh"], &["wstate"]),
        "ex3" | "s3" => (&["chsh"], &["network_state:chain"]),
        "ex4" => (&["svetlichny_mermin"], &["ghz"]),
        "s1" => (&["chsh"], &["network_state:triangle"]),
        "s2-surface" => (&["svetlichny_mermin"], &["wstate_general"]),
        "s4" => (&["svetlichny_mermin"], &["network_state:complete"]),
        "e-facet-state" => (&["chsh", "facet", "svetlichny_mermin"], &["facet_state"]),
        "visibility" => (&["chsh", "hardy"], &["ghz", "add_white_noise"]),
        _ => (&[], &[]),
    }
}

fn lib<T>(x: nonloc::Result<T>) -> anyhow::Result<T> {
    x.map_err(lib_error)
}

fn labels(ls: &[ClassLabel]) -> Vec<&'static str> {
    ls.iter().map(ClassLabel::as_str).collect()
}

/// Record for a chained value against a bound table, shared with `eval`.
pub fn chained_record(v: &ChainedValue, table: Option<&BoundTable>) -> serde_json::Value {
    let mut d = json!({ "rounds": v.rounds, "total": v.total });
    if let Some(t) = table {
        d["bounds"] = t.to_json();
        d["ruled_out"] = json!(labels(&classify(v.total, t)));
    }
    d
}

fn ruled_out_check(c: Checker, name: &str, got: &[ClassLabel], want: &[ClassLabel]) -> crate::report::Check {
    let same = got == want;
    c.check(name, Relation::Eq, f64::from(u8::from(same)), 1.0, 0.0)
        .note(format!("got {:?}, expected {:?}", labels(got), labels(want)))
}

fn ex1(r: &mut Report, c: Checker) -> anyhow::Result<()> {
    let table = delta3_bounds();
    let want = [ClassLabel::FS, ClassLabel::BQS, ClassLabel::BS];
    let mut per_theta = Vec::new();
    for (name, t) in [("pi/6", FRAC_PI_6), ("pi/4", FRAC_PI_4), ("pi/3", FRAC_PI_3)] {
        let (state, plan) = lib(example1(t))?;
        let v = lib(chained_value(&state, &plan))?;
        r.checks.push(c.exact(&format!("total at theta={name}"), v.total, 6.0 * SQRT_2).symbolic("6*sqrt2"));
        r.checks.push(ruled_out_check(c, &format!("ruled out at theta={name}"), &classify(v.total, &table), &want));
        per_theta.push(json!({ "theta": t, "total": v.total }));
    }
    // Product baseline: nothing is ruled out.
    let zero = CVector::basis(2, 0);
    let plus = CVector::from_real(&[1.0, 1.0]).normalized();
    let base = lib(product(&[zero, plus.clone(), plus]))?;
    let (_, plan) = lib(example1(FRAC_PI_4))?;
    let bv = lib(chained_value(&base, &plan))?;
    r.checks.push(c.check("product baseline within FS bound", Relation::Le, bv.total, 6.0, c.tol));
    r.checks.push(ruled_out_check(c, "product baseline ruled out", &classify(bv.total, &table), &[]));
    let (state, plan) = lib(example1(FRAC_PI_4))?;
    let v = lib(chained_value(&state, &plan))?;
    r.data = chained_record(&v, Some(&table));
    r.data["total_symbolic"] = json!("6*sqrt2");
    r.data["per_theta"] = json!(per_theta);
    r.data["product_baseline"] = chained_record(&bv, Some(&table));
    Ok(())
}

/// Midpoints of a `count`-cell partition of (0, π/2).
fn open_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| (i as f64 + 0.5) * FRAC_PI_2 / count as f64).collect()
}

fn ex2_grid(ctx: &Context, r: &mut Report, c: Checker) -> anyhow::Result<()> {
    let cfg = OptimizerConfig { restarts: 4, seed: ctx.seed, jobs: ctx.jobs, ..OptimizerConfig::default() };
    let chsh = chsh_functional();
    let mut table = Table::new(&[
        "theta1", "theta2", "opt1", "opt2", "opt3", "total", "oracle1", "oracle2", "oracle3", "closed1", "closed2",
        "closed3", "printed1", "printed2", "printed3", "printed_total",
    ]);
    let (mut d_oracle, mut d_closed, mut d_printed1, mut d_printed23, mut d_total) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &t1 in &open_grid(10) {
        for &t2 in &open_grid(10) {
            let states = lib(wstate_rounds(t1, t2))?;
            let closed = wstate_round_closed_forms(t1, t2);
            let printed = wstate_round_printed_forms(t1, t2);
            let mut opt = [0.0; 3];
            let mut oracle = [0.0; 3];
            for i in 0..3 {
                opt[i] = lib(optimize_settings(&states[i], &chsh, Plane::Zx, &cfg))?.value;
                oracle[i] = lib(chsh_max_two_qubit(&states[i]))?;
                d_oracle = d_oracle.max((opt[i] - oracle[i]).abs());
                d_closed = d_closed.max((opt[i] - closed[i]).abs());
                if i == 0 {
                    d_printed1 = d_printed1.max((opt[i] - printed[i]).abs());
                } else {
                    d_printed23 = d_printed23.max((opt[i] - printed[i]).abs());
                }
            }
            let total: f64 = opt.iter().sum();
            let printed_total: f64 = printed.iter().sum();
            d_total = d_total.max((total - printed_total).abs());
            if total > best.0 {
                best = (total, t1, t2);
            }
            let mut row = vec![t1, t2];
            row.extend(opt);
            row.push(total);
            row.extend(oracle);
            row.extend(closed);
            row.extend(printed);
            row.push(printed_total);
            table.rows.push(row);
        }
    }
    let s = c.search_tol();
    r.checks.push(c.check("optimized rounds match two-qubit CHSH maximum (max deviation)", Relation::Eq, d_oracle, 0.0, s));
    r.checks.push(
        c.check("optimized rounds match concurrence closed forms (max deviation)", Relation::Eq, d_closed, 0.0, s)
            .note("closed forms with the squared normalization in rounds 2 and 3"),
    );
    r.checks.push(c.check("round 1 matches printed closed form (max deviation)", Relation::Eq, d_printed1, 0.0, s));
    r.checks.push(
        c.check("rounds 2-3 match printed closed forms (max deviation)", Relation::Eq, d_printed23, 0.0, s)
            .note("printed denominators carry one power of the normalization"),
    );
    r.checks.push(c.check("summed value matches printed total (max deviation)", Relation::Eq, d_total, 0.0, s));
    r.checks.push(c.check("some grid point exceeds 8", Relation::Gt, best.0, 8.0, c.tol));
    r.data = json!({
        "grid": "midpoints of 10 cells on (0, pi/2) per angle",
        "max_total": best.0,
        "argmax": [best.1, best.2],
        "points": table.rows.len(),
    });
    r.table = Some(table);
    Ok(())
}

fn ex3(r: &mut Report, c: Checker, target: &str) -> anyhow::Result<()> {
    let samples = [(0.3, 0.7), (FRAC_PI_3, FRAC_PI_3), (1.2, 0.2), (0.5, 1.4), (0.9, 0.9)];
    let mut rows = Vec::new();
    for (t1, t2) in samples {
        let (state, plan) = lib(chain_example(t1, t2))?;
        let v = lib(chained_value(&state, &plan))?;
        let at = format!("({t1:.6}, {t2:.6})");
        r.checks.push(c.exact(&format!("total matches sin^2(2 theta) form at {at}"), v.total, chain_closed_form(t1, t2)));
        r.checks.push(c.searched(&format!("total matches printed sin^2(theta) form at {at}"), v.total, chain_printed_form(t1, t2)));
        rows.push(json!({ "theta": [t1, t2], "rounds": v.rounds, "total": v.total }));
    }
    let (state, plan) = lib(chain_example(FRAC_PI_3, FRAC_PI_3))?;
    let v = lib(chained_value(&state, &plan))?;
    let claim = 2.0 * SQRT_2 + 4.0 * 1.75f64.sqrt();
    r.checks.push(c.exact("total at theta1=theta2=pi/3", v.total, claim).symbolic("2*sqrt2+4*sqrt(1.75)"));
    r.checks.push(c.check("total at pi/3 exceeds BS", Relation::Gt, v.total, 8.0, c.tol));

    // Region where the total exceeds 8 versus the printed condition.
    let grid = open_grid(200);
    let (mut mismatches, mut inside) = (0u64, 0u64);
    for &t1 in &grid {
        for &t2 in &grid {
            let predicted = (1.0 + t1.sin().powi(2)).sqrt() + (1.0 + t2.sin().powi(2)).sqrt() > 4.0 - SQRT_2;
            let exceeds = chain_closed_form(t1, t2) > 8.0;
            inside += u64::from(exceeds);
            mismatches += u64::from(predicted != exceeds);
        }
    }
    r.checks.push(
        c.check("points where printed condition disagrees with total > 8 (200x200)", Relation::Eq, mismatches as f64, 0.0, 0.0)
            .note("total evaluated from the closed form verified above"),
    );
    let mut bqs_min = f64::INFINITY;
    for t1 in [0.05, FRAC_PI_2 - 0.05] {
        for &t2 in &linspace(0.05, FRAC_PI_2 - 0.05, 50) {
            for (a, b) in [(t1, t2), (t2, t1)] {
                let (state, plan) = lib(chain_example(a, b))?;
                bqs_min = bqs_min.min(lib(chained_value(&state, &plan))?.total);
            }
        }
    }
    r.checks.push(
        c.check("minimum at boundary offsets 0.05 exceeds BQS", Relation::Gt, bqs_min, 4.0 + 2.0 * SQRT_2, c.tol)
            .symbolic("4+2*sqrt2"),
    );
    r.data = json!({
        "network": "chain of two sources, three parties",
        "samples": rows,
        "grid_points_above_8": inside,
        "boundary_minimum": bqs_min,
        "pi_over_3": chained_record(&v, Some(&delta3_bounds())),
    });
    if target == "s3" {
        r.data["method"] = json!("hub projection without prior LOCC conversion");
    }
    Ok(())
}

fn ex4(r: &mut Report, c: Checker, n: usize) -> anyhow::Result<()> {
    let table = lib(svetlichny_chain_bounds(n))?;
    let expected = ghz_chain_value(n);
    let h = (1u64 << (n - 1)) as f64;
    let want = [ClassLabel::FS, ClassLabel::BQS, ClassLabel::BS];
    for (name, t) in [("pi/6", FRAC_PI_6), ("pi/4", FRAC_PI_4), ("pi/3", FRAC_PI_3)] {
        let (state, plan) = lib(ghz_svetlichny_chain(n, t))?;
        let v = lib(chained_value(&state, &plan))?;
        r.checks.push(
            c.exact(&format!("total at theta={name}"), v.total, expected)
                .symbolic(format!("{}*sqrt2", (n + 1) as u64 * (1u64 << (n - 1)))),
        );
        r.checks.push(c.check(&format!("total exceeds BS at theta={name}"), Relation::Gt, v.total, (n + 2) as f64 * h, c.tol));
        r.checks.push(ruled_out_check(c, &format!("ruled out at theta={name}"), &classify(v.total, &table), &want));
    }
    let (state, plan) = lib(ghz_svetlichny_chain(n, FRAC_PI_4))?;
    r.data = chained_record(&lib(chained_value(&state, &plan))?, Some(&table));
    Ok(())
}

fn s1(r: &mut Report, c: Checker) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for thetas in [[FRAC_PI_6, FRAC_PI_4, FRAC_PI_3], [0.3, 0.7, 1.1], [1.4, 0.2, 0.9]] {
        let (state, plan) = lib(triangle_example(thetas))?;
        let v = lib(chained_value(&state, &plan))?;
        r.checks.push(c.exact(&format!("triangle total at {thetas:.6?}"), v.total, 6.0 * SQRT_2).symbolic("6*sqrt2"));
        rows.push(json!({ "theta": thetas, "rounds": v.rounds, "total": v.total }));
    }
    r.data = json!({ "network": "triangle", "samples": rows, "bounds": delta3_bounds().to_json() });
    Ok(())
}

fn s2_surface(r: &mut Report, c: Checker) -> anyhow::Result<()> {
    let alphas = [0.5; 4];
    let grid = linspace(0.0, TAU, 50);
    let surface = lib(s50_surface(alphas, &grid))?;
    let mut table = Table::new(&["theta1", "theta2", "theta3", "value"]);
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for p in &surface {
        table.rows.push(vec![p.theta[0], p.theta[1], p.theta[2], p.value]);
        if p.value > best.0 {
            best = (p.value, p.theta);
        }
    }
    r.checks.push(
        c.exact("surface maximum (regression pin)", best.0, 15.999993665713982)
            .note("grid maximum of the closed form on linspace(0, 2pi, 50)^3"),
    );
    r.checks.push(c.check("surface maximum exceeds BS = 20", Relation::Gt, best.0, 20.0, c.tol));
    let small = linspace(0.0, TAU, 5);
    let mut dev = 0.0f64;
    for &a in &small {
        for &b in &small {
            for &d in &small {
                let theta = [a, b, d];
                let sim = lib(s50_simulated(alphas, theta))?;
                dev = dev.max((sim - nonloc::optimize::s50_formula(alphas, theta)).abs());
            }
        }
    }
    r.checks.push(
        c.check("closed form equals Born-rule simulation on 5^3 grid (max deviation)", Relation::Eq, dev, 0.0, c.search_tol())
            .note("simulation: W4 with each party projected on |0>, zx(theta_j), zx(theta_j + pi/2)"),
    );
    r.data = json!({
        "alphas": alphas,
        "grid": "linspace(0, 2pi, 50) per angle",
        "max_value": best.0,
        "argmax": best.1,
        "points": surface.len(),
    });
    r.table = Some(table);
    Ok(())
}

fn s4(r: &mut Report, c: Checker, n: usize) -> anyhow::Result<()> {
    let pool = [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 0.4, 1.1, 0.7];
    let pairs = (n + 1) * n / 2;
    let thetas: Vec<f64> = (0..pairs).map(|i| pool[i % pool.len()]).collect();
    let (state, plan) = lib(complete_example(n, &thetas))?;
    let v = lib(chained_value(&state, &plan))?;
    let table = lib(svetlichny_chain_bounds(n))?;
    r.checks.push(
        c.exact("complete network total", v.total, ghz_chain_value(n))
            .symbolic(format!("{}*sqrt2", (n + 1) as u64 * (1u64 << (n - 1)))),
    );
    r.checks.push(ruled_out_check(
        c,
        "ruled out",
        &classify(v.total, &table),
        &[ClassLabel::FS, ClassLabel::BQS, ClassLabel::BS],
    ));
    r.data = chained_record(&v, Some(&table));
    r.data["theta"] = json!(thetas);
    Ok(())
}

fn e_facet_state(ctx: &Context, r: &mut Report, c: Checker) -> anyhow::Result<()> {
    let lift = lib(facet_state_lift(24))?;
    let total: f64 = lift.iter().map(|p| p.value).sum();
    r.checks.push(
        c.check("best CHSH lift reaches the claimed value", Relation::Eq, total, facet_state_claim(), 1e-4)
            .symbolic("2*sqrt2+4*sqrt(1.75)"),
    );
    r.checks.push(c.check("best CHSH lift exceeds BS", Relation::Gt, total, 8.0, c.tol));
    let facet = facet_functional();
    let local = lib(classical_bound_bruteforce(&facet))?;
    let ns = lib(ns_bound_lp(&facet))?;
    r.checks.push(c.exact("facet functional local bound", local, 0.0));
    let cfg = OptimizerConfig { seed: ctx.seed, jobs: ctx.jobs, ..OptimizerConfig::default() };
    let sv = lib(optimize_settings(&facet_state(), &lib(svetlichny_mermin(3))?, Plane::General, &cfg))?;
    r.checks.push(c.check("Svetlichny value on the state within its local bound", Relation::Le, sv.value, 4.0, c.search_tol()));
    r.data = json!({
        "lift": lift,
        "total": total,
        "facet_functional": { "local_bound": local, "ns_bound": ns, "lifted_bound": ns + 3.0 * local },
        "svetlichny_on_state": { "value": sv.value, "angles": sv.angles, "local_bound": 4.0 },
    });
    Ok(())
}

fn visibility(r: &mut Report, c: Checker) -> anyhow::Result<()> {
    let v = ghz3_visibility();
    r.checks.push(c.exact("8/(6 sqrt2)", v, 4.0 / (3.0 * SQRT_2)).symbolic("4/(3*sqrt2)"));
    let (state, plan) = lib(example1(FRAC_PI_4))?;
    let noisy = lib(add_white_noise(&state, v))?;
    let at = lib(chained_value(&noisy, &plan))?;
    r.checks.push(c.exact("noisy chained total at critical visibility", at.total, 8.0));
    let pair = lib(noise_visibility(8.0, 8.0 * SQRT_2))?;
    r.checks.push(
        c.exact("visibility for the (8, 8 sqrt2) pair", pair, 1.0 / SQRT_2)
            .note("assumed pair: BS row 8 against value 8*sqrt2"),
    );
    let hardy = lib(hardy_functional(3))?;
    let hardy_ok = noise_visibility_for(&hardy, 0.0, 1.0).is_ok();
    r.data = json!({
        "critical_visibility": v,
        "noisy_total": at.total,
        "gmn2_visibility": pair,
        "hardy_uniform_value": hardy.uniform_value(),
        "hardy_interpolation_applies": hardy_ok,
    });
    Ok(())
}
