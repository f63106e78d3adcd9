use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn nonloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonloc")).args(args).env_remove("NONLOC_SEED").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn ex1_record() {
    let out = nonloc(&["reproduce", "ex1"]);
    assert_eq!(code(&out), 0);
    let d = &json_of(&out)["data"];
    assert!((f(&d["total"]) - 6.0 * SQRT_2).abs() < 1e-12);
    assert_eq!(d["ruled_out"], serde_json::json!(["FS", "BQS", "BS"]));
    assert_eq!(d["product_baseline"]["ruled_out"], serde_json::json!([]));
}

#[test]
fn eval_example1_matches_reproduce() {
    let r = json_of(&nonloc(&["reproduce", "ex1"]));
    let out = nonloc(&["eval", &scenario("example1.json")]);
    assert_eq!(code(&out), 0);
    let e = json_of(&out);
    for key in ["rounds", "total", "ruled_out", "bounds"] {
        assert_eq!(e["data"][key], r["data"][key], "{key}");
    }
}

#[test]
fn eval_product_rules_out_nothing() {
    let out = nonloc(&["eval", &scenario("product.json")]);
    assert_eq!(code(&out), 0);
    let d = &json_of(&out)["data"];
    assert!(f(&d["total"]) <= 6.0);
    assert_eq!(d["ruled_out"], serde_json::json!([]));
}

#[test]
fn input_errors_exit_3() {
    let out = nonloc(&["eval", &scenario("bad_bloch.json")]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm 0.5"));

    let out = nonloc(&["eval", &scenario("zero_probability.json")]);
    assert_eq!(code(&out), 3);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["round"], 0);
    assert_eq!(err["error"]["party"], 0);

    assert_eq!(code(&nonloc(&["reproduce", "ex9"])), 3);
    assert_eq!(code(&nonloc(&["reproduce", "ex1(2)"])), 3);
    assert_eq!(code(&nonloc(&["bounds", "svetlichny"])), 3);
    assert_eq!(code(&nonloc(&["bounds", "chain-network", "--n", "2", "--k", "2"])), 3);
    assert_eq!(code(&nonloc(&["frobnicate"])), 3);
    assert_eq!(code(&nonloc(&["eval", "/nonexistent.json"])), 3);
    assert_eq!(code(&nonloc(&["--help"])), 0);
}

#[test]
fn schema_errors_name_the_location() {
    let dir = std::env::temp_dir().join(format!("nonloc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("typo.json");
    std::fs::write(&p, "{\n  \"state\": {\"family\": \"ghz\", \"n\": 3, \"thta\": 0.5},\n  \"rounds\": []\n}\n").unwrap();
    let out = nonloc(&["eval", p.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("thta") && msg.contains("line 2"), "{msg}");
}

#[test]
fn bounds_tables() {
    let get = |d: &Value, class: &str| {
        d["bounds"].as_array().unwrap().iter().find(|r| r["class"] == class).map(|r| f(&r["decimal"])).unwrap()
    };
    let out = nonloc(&["bounds", "delta3"]);
    assert_eq!(code(&out), 0);
    let d = &json_of(&out)["data"];
    assert_eq!(get(d, "BS"), 8.0);
    let ns_oracle = d["oracles"].as_array().unwrap().iter().find(|o| o["class"] == "NS").unwrap();
    assert!((f(&ns_oracle["oracle"]) - 12.0).abs() < 1e-8);

    let d = &json_of(&nonloc(&["bounds", "svetlichny", "--n", "3"]))["data"];
    assert_eq!(get(d, "FS"), 16.0);
    assert_eq!(get(d, "BS"), 20.0);
    assert!((get(d, "Q") - 16.0 * SQRT_2).abs() < 1e-12);
    assert_eq!(get(d, "NS"), 32.0);

    let out = nonloc(&["bounds", "chain-network", "--n", "3", "--k", "2"]);
    assert_eq!(code(&out), 0);
    let d = &json_of(&out)["data"];
    assert_eq!(get(d, "C"), 4.0);
    assert_eq!(get(d, "NS"), 8.0);
}

#[test]
fn optimize_is_deterministic_across_jobs() {
    let file = scenario("ghz3_svetlichny.json");
    let a = nonloc(&["optimize", &file, "--jobs", "1"]);
    let b = nonloc(&["optimize", &file, "--jobs", "4"]);
    let c = nonloc(&["optimize", &file]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert!((f(&json_of(&a)["data"]["value"]) - 4.0 * SQRT_2).abs() < 1e-6);
}

#[test]
fn witness_records() {
    let out = nonloc(&["witness", &scenario("ghz4_witness.json")]);
    assert_eq!(code(&out), 0);
    assert!((f(&json_of(&out)["data"]["lifted"]["total"]) - 3.0).abs() < 1e-9);
    let out = nonloc(&["witness", &scenario("biseparable.json")]);
    assert_eq!(code(&out), 0);
    assert!(f(&json_of(&out)["data"]["biseparable_samples"]["max"]) <= 0.0);
}

#[test]
fn seed_from_env_and_flag() {
    let file = scenario("biseparable.json");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nonloc"));
        cmd.args(["witness", &file]).env_remove("NONLOC_SEED");
        if let Some(s) = env {
            cmd.env("NONLOC_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        json_of(&cmd.output().unwrap())["provenance"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 0x5eed);
    assert_eq!(run(Some("42"), None), 42);
    assert_eq!(run(Some("42"), Some("7")), 7);
}

#[test]
fn visibility_target() {
    let out = nonloc(&["reproduce", "visibility"]);
    assert_eq!(code(&out), 0);
    let d = &json_of(&out)["data"];
    assert!((f(&d["critical_visibility"]) - 4.0 / (3.0 * SQRT_2)).abs() < 1e-12);
    assert!((f(&d["gmn2_visibility"]) - 1.0 / SQRT_2).abs() < 1e-12);
}

#[test]
fn failing_checks_exit_2() {
    // The printed chain-network total disagrees with the simulation.
    let out = nonloc(&["reproduce", "ex3"]);
    assert_eq!(code(&out), 2);
    let r = json_of(&out);
    let checks = r["checks"].as_array().unwrap();
    let at_pi3 = checks.iter().find(|c| c["name"] == "total at theta1=theta2=pi/3").unwrap();
    assert_eq!(at_pi3["pass"], true);
    assert!((f(&at_pi3["computed"]) - (2.0 * SQRT_2 + 4.0 * 1.75f64.sqrt())).abs() < 1e-12);
}

#[test]
fn csv_and_out_file() {
    let dir = std::env::temp_dir().join(format!("nonloc-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("surface.csv");
    let out = nonloc(&["reproduce", "s2-surface", "--format", "csv", "--out", p.to_str().unwrap()]);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta1,theta2,theta3,value"));
    assert_eq!(lines.count(), 125_000);
    let out = nonloc(&["bounds", "delta3", "--format", "csv"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("name,relation,computed,expected,tolerance,pass\n"));
}

#[test]
fn reproduce_targets_cover_families_and_constructors() {
    let mut functionals = BTreeSet::new();
    let mut states = BTreeSet::new();
    for t in ["ex1", "ex2-grid", "ex3", "ex4(2)", "s1", "s2-surface", "s3", "s4(2)", "e-facet-state", "visibility"] {
        let out = nonloc(&["reproduce", t]);
        assert!(matches!(code(&out), 0 | 2), "{t}");
        let r = json_of(&out);
        assert!(r["checks"].as_array().is_some_and(|c| !c.is_empty()), "{t}");
        for v in r["data"]["uses"]["functionals"].as_array().unwrap() {
            functionals.insert(v.as_str().unwrap().to_string());
        }
        for v in r["data"]["uses"]["states"].as_array().unwrap() {
            let s = v.as_str().unwrap();
            states.insert(s.split(':').next().unwrap().to_string());
        }
    }
    let want_f: BTreeSet<String> = ["chsh", "svetlichny_mermin", "hardy", "facet"].map(String::from).into();
    let want_s: BTreeSet<String> =
        ["ghz", "wstate", "wstate_general", "facet_state", "product", "network_state", "add_white_noise"]
            .map(String::from)
            .into();
    assert_eq!(functionals, want_f);
    assert_eq!(states, want_s);
}

#[test]
fn records_are_byte_stable() {
    for args in [&["reproduce", "ex2-grid"][..], &["reproduce", "e-facet-state"], &["bounds", "svetlichny", "--n", "3"]] {
        assert_eq!(nonloc(args).stdout, nonloc(args).stdout, "{args:?}");
    }
}
