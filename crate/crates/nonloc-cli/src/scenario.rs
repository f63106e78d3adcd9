//! Scenario file schema and its conversion to library types.

use std::path::Path;

use anyhow::bail;
use nonloc::bell::{
    chsh_functional, facet_functional, hardy_functional, svetlichny_mermin, BellFunctional, ChainedPlan,
    Coefficients, Family, Round,
};
use nonloc::bounds::{chain_network_bounds, delta3_bounds, svetlichny_chain_bounds, BoundTable};
use nonloc::measure::{bloch_observable, MeasurementPlan, Observable};
use nonloc::optimize::{OptimizerConfig, Plane};
use nonloc::qcore::{CMatrix, CVector, C64};
use nonloc::states::{
    add_white_noise, facet_state, ghz, network_state, product, wstate, wstate_general, LabeledState, NetworkSpec,
};
use serde::Deserialize;

use crate::InputError;

const NORM_TOL: f64 = 1e-9;

pub type Complex = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Ghz { n: usize, theta: f64 },
    W { theta1: f64, theta2: f64 },
    WGeneral { amplitudes: Vec<f64> },
    Facet,
    Product { locals: Vec<Vec<Complex>> },
    Amplitudes { party_dims: Vec<usize>, amplitudes: Vec<Complex> },
    Network { network: NetworkSpec },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Axis {
    Bloch([f64; 3]),
    Zx(f64),
    Spherical { polar: f64, azimuth: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Embed {
    pub position: usize,
    pub of: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartySettings {
    pub observables: Vec<Axis>,
    #[serde(default)]
    pub qubit: Option<Embed>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Chsh,
    SvetlichnyMermin { n: usize },
    Hardy { n: usize },
    Facet,
    Custom { n: usize, m: usize, correlator: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundSpec {
    pub party: usize,
    /// Amplitudes of the rank-1 projector on the party's space.
    pub projector: Vec<Complex>,
    pub settings: Vec<PartySettings>,
    pub functional: FunctionalSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundsSpec {
    Delta3,
    Svetlichny { n: usize },
    ChainNetwork { n: usize, k: usize },
}

/// Input to `eval`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub state: StateSpec,
    #[serde(default)]
    pub visibility: Option<f64>,
    pub rounds: Vec<RoundSpec>,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeFile {
    pub state: StateSpec,
    #[serde(default)]
    pub visibility: Option<f64>,
    pub functional: FunctionalSpec,
    #[serde(default = "default_plane")]
    pub plane: Plane,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
}

fn default_plane() -> Plane {
    Plane::Zx
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiseparableBatch {
    pub n: usize,
    pub count: usize,
    #[serde(default = "default_terms")]
    pub terms: usize,
}

fn default_terms() -> usize {
    3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub visibility: Option<f64>,
    /// One projector per party, for the lifted witness.
    #[serde(default)]
    pub projectors: Option<Vec<Vec<Complex>>>,
    #[serde(default)]
    pub biseparable_samples: Option<BiseparableBatch>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())).into())
}

fn complex_vec(v: &[Complex]) -> Vec<C64> {
    v.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

fn normalized(what: &str, v: &[Complex]) -> anyhow::Result<CVector> {
    let c = CVector::new(complex_vec(v));
    let n = c.norm();
    if !c.is_finite() || (n - 1.0).abs() > NORM_TOL {
        bail!(InputError(format!("{what} has norm {n}, expected 1")));
    }
    Ok(c)
}

fn lib<T>(r: nonloc::Result<T>) -> anyhow::Result<T> {
    r.map_err(crate::lib_error)
}

impl StateSpec {
    pub fn build(&self) -> anyhow::Result<LabeledState> {
        lib(match self {
            StateSpec::Ghz { n, theta } => ghz(*n, *theta),
            StateSpec::W { theta1, theta2 } => wstate(*theta1, *theta2),
            StateSpec::WGeneral { amplitudes } => wstate_general(amplitudes),
            StateSpec::Facet => Ok(facet_state()),
            StateSpec::Product { locals } => {
                let vs = locals
                    .iter()
                    .enumerate()
                    .map(|(i, l)| normalized(&format!("state.locals[{i}]"), l))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                if vs.is_empty() {
                    bail!(InputError("state.locals is empty".into()));
                }
                product(&vs)
            }
            StateSpec::Amplitudes { party_dims, amplitudes } => {
                let v = normalized("state.amplitudes", amplitudes)?;
                LabeledState::pure(v, party_dims.clone())
            }
            StateSpec::Network { network } => network_state(network),
        })
    }
}

pub fn build_state(spec: &StateSpec, visibility: Option<f64>) -> anyhow::Result<LabeledState> {
    let s = spec.build()?;
    match visibility {
        Some(v) => lib(add_white_noise(&s, v)),
        None => Ok(s),
    }
}

impl Axis {
    fn observable(&self, at: &str) -> anyhow::Result<Observable> {
        match self {
            Axis::Bloch(s) => bloch_observable(*s).map_err(|e| InputError(format!("{at}: {e}")).into()),
            Axis::Zx(t) => Ok(Observable::zx(*t)),
            Axis::Spherical { polar, azimuth } => Ok(Observable::spherical(*polar, *azimuth)),
        }
    }
}

impl FunctionalSpec {
    pub fn build(&self) -> anyhow::Result<BellFunctional> {
        lib(match self {
            FunctionalSpec::Chsh => Ok(chsh_functional()),
            FunctionalSpec::SvetlichnyMermin { n } => svetlichny_mermin(*n),
            FunctionalSpec::Hardy { n } => hardy_functional(*n),
            FunctionalSpec::Facet => Ok(facet_functional()),
            FunctionalSpec::Custom { n, m, correlator } => {
                if correlator.len() != m.pow(*n as u32) {
                    bail!(InputError(format!("custom functional needs {} correlator weights", m.pow(*n as u32))));
                }
                Ok(BellFunctional {
                    n: *n,
                    m: *m,
                    family: Family::Custom,
                    coeffs: Coefficients::Correlator(correlator.clone()),
                })
            }
        })
    }
}

impl BoundsSpec {
    pub fn build(&self) -> anyhow::Result<BoundTable> {
        lib(match self {
            BoundsSpec::Delta3 => Ok(delta3_bounds()),
            BoundsSpec::Svetlichny { n } => svetlichny_chain_bounds(*n),
            BoundsSpec::ChainNetwork { n, k } => chain_network_bounds(*n, *k),
        })
    }
}

pub fn projector(what: &str, amps: &[Complex]) -> anyhow::Result<CMatrix> {
    Ok(normalized(what, amps)?.projector())
}

impl EvalFile {
    pub fn plan(&self) -> anyhow::Result<ChainedPlan> {
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for (i, r) in self.rounds.iter().enumerate() {
            let settings = r
                .settings
                .iter()
                .enumerate()
                .map(|(p, ps)| {
                    ps.observables
                        .iter()
                        .enumerate()
                        .map(|(x, a)| {
                            let o = a.observable(&format!("rounds[{i}].settings[{p}].observables[{x}]"))?;
                            Ok(match &ps.qubit {
                                Some(e) if e.position < e.of => o.on_qubit(e.of, e.position),
                                Some(e) => bail!(InputError(format!(
                                    "rounds[{i}].settings[{p}].qubit: position {} of {}",
                                    e.position, e.of
                                ))),
                                None => o,
                            })
                        })
                        .collect::<anyhow::Result<Vec<_>>>()
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            rounds.push(Round {
                plan: MeasurementPlan {
                    post_select_party: r.party,
                    projector: projector(&format!("rounds[{i}].projector"), &r.projector)?,
                    settings,
                },
                functional: r.functional.build()?,
            });
        }
        Ok(ChainedPlan { rounds })
    }
}

impl OptimizeFile {
    pub fn config(&self, seed: u64, jobs: usize) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        OptimizerConfig {
            restarts: self.restarts.unwrap_or(d.restarts),
            max_sweeps: self.max_sweeps.unwrap_or(d.max_sweeps),
            seed,
            jobs,
            ..d
        }
    }
}
