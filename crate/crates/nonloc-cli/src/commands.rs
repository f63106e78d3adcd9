//! `eval`, `bounds`, `optimize` and `witness`.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use anyhow::bail;
use nonloc::bell::{chained_value, chsh_functional, round_value, svetlichny_ghz_settings, svetlichny_mermin, Family};
use nonloc::bounds::{
    chain_network_bounds, classical_bound_bruteforce, delta3_bounds, ns_bound_lp, svd_quantum_bound,
    svetlichny_chain_bounds, BoundTable, ClassLabel,
};
use nonloc::measure::behavior;
use nonloc::optimize::optimize_settings;
use nonloc::states::ghz;
use nonloc::witness::{ghz_stabilizer_witness, lifted_witness_value, random_biseparable, witness_value};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::{Checker, Relation, Report, Table};
use crate::reproduce::chained_record;
use crate::scenario::{build_state, projector, read_json, EvalFile, OptimizeFile, WitnessFile};
use crate::{lib_error, BoundsFamily, Context, InputError};

fn lib<T>(x: nonloc::Result<T>) -> anyhow::Result<T> {
    x.map_err(lib_error)
}

fn file_label(path: &Path) -> String {
    path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn eval(ctx: &Context, path: &Path) -> anyhow::Result<Report> {
    let file: EvalFile = read_json(path)?;
    let state = build_state(&file.state, file.visibility)?;
    let plan = file.plan()?;
    let table = file.bounds.as_ref().map(|b| b.build()).transpose()?;
    let v = lib(chained_value(&state, &plan))?;
    let mut r = Report::new("eval", file_label(path), ctx.seed, ctx.tol);
    let sum: f64 = v.rounds.iter().map(|x| x.value).sum();
    r.checks.push(Checker { tol: 1e-12 }.exact("total equals sum of rounds", v.total, sum));
    let mut rows = Table::new(&["round", "party", "input_index", "output_index", "probability"]);
    for (i, round) in plan.rounds.iter().enumerate() {
        let (_, _, b) = lib(round_value(&state, round))?;
        let outputs = b.n_outputs();
        for (j, p) in b.table.iter().enumerate() {
            rows.rows.push(vec![
                i as f64,
                round.plan.post_select_party as f64,
                (j / outputs) as f64,
                (j % outputs) as f64,
                *p,
            ]);
        }
    }
    r.data = chained_record(&v, table.as_ref());
    r.table = Some(rows);
    Ok(r)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Equal,
    /// Oracle ≤ table entry.
    Below,
    /// Oracle ≥ table entry.
    Above,
}

struct Oracle {
    label: ClassLabel,
    value: f64,
    side: Side,
    method: String,
}

fn oracles(table: &BoundTable, family: BoundsFamily, n: usize) -> anyhow::Result<Vec<Oracle>> {
    let mut out = Vec::new();
    let mut push = |label, value, side, method: String| out.push(Oracle { label, value, side, method });
    match family {
        BoundsFamily::Delta3 | BoundsFamily::ChainNetwork => {
            let chsh = chsh_functional();
            let rounds = match family {
                BoundsFamily::Delta3 => 3.0,
                _ => table.n.unwrap_or(3) as f64 - 1.0,
            };
            let local = lib(classical_bound_bruteforce(&chsh))?;
            let ns = lib(ns_bound_lp(&chsh))?;
            let q = lib(nonloc::optimize::chsh_max_two_qubit(&lib(ghz(2, FRAC_PI_4))?))?;
            let local_label = if family == BoundsFamily::Delta3 { ClassLabel::FS } else { ClassLabel::C };
            push(local_label, rounds * local, Side::Equal, format!("{rounds} x CHSH deterministic strategies"));
            push(ClassLabel::Q, rounds * q, Side::Equal, format!("{rounds} x CHSH maximum on EPR"));
            push(ClassLabel::NS, rounds * ns, Side::Equal, format!("{rounds} x CHSH no-signaling LP"));
        }
        BoundsFamily::Svetlichny => {
            let f = lib(svetlichny_mermin(n))?;
            let rounds = (n + 1) as f64;
            if n <= 9 {
                let local = lib(classical_bound_bruteforce(&f))?;
                // Equal for odd n; the table row is looser for even n.
                push(ClassLabel::FS, rounds * local, Side::Below, format!("{rounds} x deterministic strategies"));
            }
            if n <= 8 {
                let g = lib(ghz(n, FRAC_PI_4))?;
                let b = lib(behavior(&g, &svetlichny_ghz_settings(n)))?;
                let achieved = lib(nonloc::bell::evaluate(&f, &b))?;
                push(ClassLabel::Q, rounds * achieved, Side::Equal, format!("{rounds} x value on GHZ_{n}"));
            }
            if (3..=8).contains(&n) {
                let g = lib(ghz(n, FRAC_PI_4))?;
                let svd = lib(svd_quantum_bound(&g))?;
                // Upper bound only, loose for even n. At n = 2 it sits below Tsirelson.
                push(ClassLabel::Q, rounds * svd, Side::Above, format!("{rounds} x SVD bound of GHZ_{n}"));
            }
            if n <= 3 {
                let ns = lib(ns_bound_lp(&f))?;
                push(ClassLabel::NS, rounds * ns, Side::Equal, format!("{rounds} x no-signaling LP"));
            }
        }
    }
    Ok(out)
}

pub fn bounds(ctx: &Context, family: BoundsFamily, n: Option<usize>, k: Option<usize>) -> anyhow::Result<Report> {
    let (table, label) = match family {
        BoundsFamily::Delta3 => {
            if n.is_some() || k.is_some() {
                bail!(InputError("delta3 takes no --n or --k".into()));
            }
            (delta3_bounds(), "delta3".to_string())
        }
        BoundsFamily::Svetlichny => {
            if k.is_some() {
                bail!(InputError("svetlichny takes no --k".into()));
            }
            let n = n.ok_or_else(|| InputError("svetlichny needs --n".into()))?;
            (lib(svetlichny_chain_bounds(n))?, format!("svetlichny(n={n})"))
        }
        BoundsFamily::ChainNetwork => {
            let (n, k) = match (n, k) {
                (Some(n), Some(k)) => (n, k),
                _ => bail!(InputError("chain-network needs --n and --k".into())),
            };
            (lib(chain_network_bounds(n, k))?, format!("chain-network(n={n}, k={k})"))
        }
    };
    let mut r = Report::new("bounds", label, ctx.seed, ctx.tol);
    let c = Checker { tol: ctx.tol };
    let viol = table.monotonicity_violations();
    r.checks.push(c.check("hierarchy ordering violations", Relation::Eq, viol.len() as f64, 0.0, 0.0));
    let mut cols = Vec::new();
    for o in oracles(&table, family, n.unwrap_or(0))? {
        let Some(entry) = table.value(o.label) else { continue };
        let name = format!("{} row against {}", o.label, o.method);
        let check = match o.side {
            Side::Equal => c.check(&name, Relation::Eq, o.value, entry, 1e-8),
            Side::Below => c.check(&name, Relation::Le, o.value, entry, 1e-9),
            Side::Above => c.check(&name, Relation::Le, entry, o.value, 1e-9),
        };
        r.checks.push(check);
        cols.push(json!({ "class": o.label.as_str(), "oracle": o.value, "method": o.method }));
    }
    r.data = table.to_json();
    r.data["oracles"] = json!(cols);
    Ok(r)
}

pub fn optimize(ctx: &Context, path: &Path) -> anyhow::Result<Report> {
    let file: OptimizeFile = read_json(path)?;
    let state = build_state(&file.state, file.visibility)?;
    let f = file.functional.build()?;
    let cfg = file.config(ctx.seed, ctx.jobs);
    let opt = lib(optimize_settings(&state, &f, file.plane, &cfg))?;
    let mut r = Report::new("optimize", file_label(path), ctx.seed, ctx.tol);
    r.data = json!({
        "value": opt.value,
        "angles": opt.angles,
        "restart": opt.restart,
        "converged": opt.converged,
        "config": { "restarts": cfg.restarts, "max_sweeps": cfg.max_sweeps, "plane": file.plane },
    });
    if f.family == Family::SvetlichnyMermin && f.n >= 3 && state.is_qubit_register() {
        let svd = lib(svd_quantum_bound(&state))?;
        r.checks.push(Checker { tol: ctx.tol }.check(
            "value within correlation-tensor bound",
            Relation::Le,
            opt.value,
            svd,
            1e-6,
        ));
        r.data["svd_quantum_bound"] = json!(svd);
    }
    Ok(r)
}

pub fn witness(ctx: &Context, path: &Path) -> anyhow::Result<Report> {
    let file: WitnessFile = read_json(path)?;
    if file.state.is_none() && file.biseparable_samples.is_none() {
        bail!(InputError(format!("{}: needs state or biseparable_samples", path.display())));
    }
    if file.projectors.is_some() && file.state.is_none() {
        bail!(InputError(format!("{}: projectors given without a state", path.display())));
    }
    let mut r = Report::new("witness", file_label(path), ctx.seed, ctx.tol);
    let c = Checker { tol: ctx.tol };
    let mut data = json!({});
    if let Some(spec) = &file.state {
        let state = build_state(spec, file.visibility)?;
        let n = state.n_parties();
        match &file.projectors {
            Some(ps) => {
                let projs = ps
                    .iter()
                    .enumerate()
                    .map(|(i, p)| projector(&format!("projectors[{i}]"), p))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                let w = lib(ghz_stabilizer_witness(n - 1))?;
                let lw = lib(lifted_witness_value(&state, &w, &projs))?;
                data["lifted"] = json!({
                    "rounds": lw.rounds,
                    "total": lw.total,
                    "quantum_max": w.quantum_max,
                    "genuinely_entangled": lw.total > ctx.tol,
                });
            }
            None => {
                let w = lib(ghz_stabilizer_witness(n))?;
                let v = lib(witness_value(&state, &w))?;
                data["value"] = json!(v);
                data["genuinely_entangled"] = json!(v > ctx.tol);
            }
        }
    }
    if let Some(batch) = &file.biseparable_samples {
        let w = lib(ghz_stabilizer_witness(batch.n))?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut max = f64::NEG_INFINITY;
        for _ in 0..batch.count {
            let s = lib(random_biseparable(batch.n, batch.terms, &mut rng))?;
            max = max.max(lib(witness_value(&s, &w))?);
        }
        r.checks.push(c.check("biseparable samples stay at or below 0", Relation::Le, max, 0.0, ctx.tol));
        data["biseparable_samples"] = json!({ "n": batch.n, "count": batch.count, "terms": batch.terms, "max": max });
    }
    r.data = data;
    Ok(r)
}
