//! Output records: checks against reference values, tables, provenance.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Tolerance floor for values produced by a numerical search.
pub const SEARCH_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// |computed − expected| ≤ tolerance.
    Eq,
    /// computed > expected + tolerance.
    Gt,
    /// computed ≤ expected + tolerance.
    Le,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub computed: f64,
    pub expected: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_symbolic: Option<String>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub kind: &'static str,
    pub target: String,
    pub checks: Vec<Check>,
    pub data: Value,
    /// Emitted only as CSV.
    #[serde(skip)]
    pub table: Option<Table>,
    pub provenance: Provenance,
}

/// Check builder carrying the run's exact and search tolerances.
#[derive(Clone, Copy, Debug)]
pub struct Checker {
    pub tol: f64,
}

impl Checker {
    pub fn search_tol(&self) -> f64 {
        self.tol.max(SEARCH_TOL)
    }

    pub fn check(&self, name: &str, rel: Relation, computed: f64, expected: f64, tol: f64) -> Check {
        let pass = match rel {
            Relation::Eq => (computed - expected).abs() <= tol,
            Relation::Gt => computed > expected + tol,
            Relation::Le => computed <= expected + tol,
        };
        Check {
            name: name.to_string(),
            relation: rel,
            computed,
            expected,
            expected_symbolic: None,
            tolerance: tol,
            pass,
            note: None,
        }
    }

    pub fn exact(&self, name: &str, computed: f64, expected: f64) -> Check {
        self.check(name, Relation::Eq, computed, expected, self.tol)
    }

    pub fn searched(&self, name: &str, computed: f64, expected: f64) -> Check {
        self.check(name, Relation::Eq, computed, expected, self.search_tol())
    }
}

impl Check {
    pub fn symbolic(mut self, s: impl Into<String>) -> Self {
        self.expected_symbolic = Some(s.into());
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = Some(s.into());
        self
    }
}

impl Report {
    pub fn new(kind: &'static str, target: impl Into<String>, seed: u64, tol: f64) -> Self {
        Self {
            kind,
            target: target.into(),
            checks: Vec::new(),
            data: Value::Null,
            table: None,
            provenance: Provenance { version: env!("CARGO_PKG_VERSION"), seed, tolerance: tol },
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut v);
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.table {
            Some(t) => {
                out.push_str(&t.columns.join(","));
                out.push('\n');
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(|x| fmt15(*x)).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            None => {
                out.push_str("name,relation,computed,expected,tolerance,pass\n");
                for c in &self.checks {
                    let rel = serde_json::to_value(c.relation).expect("relation serializes");
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        csv_field(&c.name),
                        rel.as_str().unwrap_or_default(),
                        fmt15(c.computed),
                        fmt15(c.expected),
                        fmt15(c.tolerance),
                        c.pass
                    ));
                }
            }
        }
        out
    }

    pub fn write(&self, format: crate::Format, out: Option<&Path>) -> std::io::Result<()> {
        let text = match format {
            crate::Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json value prints");
                s.push('\n');
                s
            }
            crate::Format::Csv => self.to_csv(),
        };
        match out {
            Some(p) => std::fs::write(p, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}

/// x rounded to 15 significant digits.
pub fn sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

fn fmt15(x: f64) -> String {
    format!("{}", sig15(x))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(sig15(x))) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}
