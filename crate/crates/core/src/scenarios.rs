//! Built-in scenarios and the JSON scenario file format.
//!
//! # File format (`tsvf-scenario/1`)
//!
//! ```json
//! {
//!   "format": "tsvf-scenario/1",
//!   "name": "three-box",
//!   "dim": 3,
//!   "pre":  [[0.5773502691896258, 0.0], [0.5773502691896258, 0.0], [0.5773502691896258, 0.0]],
//!   "post": [[0.5773502691896258, 0.0], [0.5773502691896258, 0.0], [-0.5773502691896258, 0.0]],
//!   "observables": { "P_A": [[[1, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]] },
//!   "unitaries": {},
//!   "schedule": [{ "observable": "P_A", "unitary": "identity" }],
//!   "pointer_sigma": 10.0,
//!   "n_particles": 1
//! }
//! ```
//!
//! Amplitudes and matrix entries are `[re, im]` pairs; matrices are lists of
//! rows. `post` may be omitted or `null` for a pre-selected-only scenario.
//! The name `identity` always resolves, both as observable and as unitary.
//!
//! Basis ordering: three boxes are `A = 0, B = 1, C = 2`; two spins are
//! `↑↑, ↑↓, ↓↑, ↓↓` (row-major, `↑ = 0`). Scenario equality ignores the global
//! phase of states.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{embed, Operator, StateVector, Tensor, VALIDATION_TOLERANCE};
use crate::tsvf::{Observable, ScheduleStep, TwoStateVector};

pub const FORMAT_VERSION: &str = "tsvf-scenario/1";

/// Default cap on the dense Hilbert-space dimension (3^6).
pub const DEFAULT_DIM_BUDGET: usize = 729;

/// Environment variable overriding [`DEFAULT_DIM_BUDGET`].
pub const DIM_BUDGET_ENV: &str = "TSVF_DIM_BUDGET";

/// States further than this from unit norm are rejected on load; closer ones
/// are renormalized with a warning.
pub const LOAD_NORM_TOLERANCE: f64 = 1e-6;

pub const IDENTITY: &str = "identity";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub observable: String,
    #[serde(default = "identity_name")]
    pub unitary: String,
}

fn identity_name() -> String {
    IDENTITY.to_string()
}

impl ScheduleEntry {
    pub fn measure(observable: impl Into<String>) -> Self {
        Self {
            observable: observable.into(),
            unitary: identity_name(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub name: String,
    pub dim: usize,
    pub pre: StateVector,
    pub post: Option<StateVector>,
    pub observables: BTreeMap<String, Operator>,
    pub unitaries: BTreeMap<String, Operator>,
    pub schedule: Vec<ScheduleEntry>,
    pub pointer_sigma: Option<f64>,
    pub n_particles: Option<usize>,
}

impl ScenarioSpec {
    /// Check dimensions, normalization, Hermiticity, unitarity and that every
    /// schedule name resolves.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::EmptyDimension);
        }
        let check_state = |label: &str, v: &StateVector| -> Result<()> {
            if v.dim() != self.dim {
                return Err(Error::Scenario(format!(
                    "{label} has dimension {} but dim = {}",
                    v.dim(),
                    self.dim
                )));
            }
            if !v.is_normalized(VALIDATION_TOLERANCE) {
                return Err(Error::Scenario(format!(
                    "{label} state not normalized (norm = {:.9})",
                    v.norm()
                )));
            }
            Ok(())
        };
        check_state("pre", &self.pre)?;
        if let Some(post) = &self.post {
            check_state("post", post)?;
        }
        for (name, op) in &self.observables {
            if op.dim() != self.dim {
                return Err(Error::Scenario(format!(
                    "observable `{name}` has dimension {} but dim = {}",
                    op.dim(),
                    self.dim
                )));
            }
            let deviation = op.hermiticity_deviation();
            if deviation > VALIDATION_TOLERANCE {
                return Err(Error::Scenario(format!(
                    "observable `{name}` is not Hermitian (max |A - A^dagger| = {deviation:.3e})"
                )));
            }
        }
        for (name, op) in &self.unitaries {
            if op.dim() != self.dim {
                return Err(Error::Scenario(format!(
                    "unitary `{name}` has dimension {} but dim = {}",
                    op.dim(),
                    self.dim
                )));
            }
            let deviation = op.unitarity_deviation();
            if deviation > VALIDATION_TOLERANCE {
                return Err(Error::Scenario(format!(
                    "unitary `{name}` is not unitary (max |U^dagger U - I| = {deviation:.3e})"
                )));
            }
        }
        for (i, entry) in self.schedule.iter().enumerate() {
            if entry.observable != IDENTITY && !self.observables.contains_key(&entry.observable) {
                return Err(Error::Scenario(format!(
                    "schedule[{i}] references missing observable `{}`",
                    entry.observable
                )));
            }
            if entry.unitary != IDENTITY && !self.unitaries.contains_key(&entry.unitary) {
                return Err(Error::Scenario(format!(
                    "schedule[{i}] references missing unitary `{}`",
                    entry.unitary
                )));
            }
        }
        if let Some(sigma) = self.pointer_sigma {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::Scenario(format!("pointer_sigma must be positive, got {sigma}")));
            }
        }
        if self.n_particles == Some(0) {
            return Err(Error::Scenario("n_particles must be at least 1".into()));
        }
        Ok(())
    }

    pub fn two_state_vector(&self) -> Result<TwoStateVector> {
        TwoStateVector::new(self.pre.clone(), self.post.clone())
    }

    pub fn operator(&self, name: &str) -> Result<Operator> {
        if let Some(op) = self.observables.get(name) {
            return Ok(op.clone());
        }
        if name == IDENTITY {
            return Ok(Operator::identity(self.dim));
        }
        Err(Error::UnknownName {
            kind: "observable",
            name: name.to_string(),
        })
    }

    /// Whether the named observable is a projector (`P² = P` within 1e-9).
    pub fn is_projector(&self, name: &str) -> bool {
        self.observables.get(name).is_some_and(|p| {
            p.matmul(p)
                .and_then(|pp| pp.max_abs_diff(p))
                .is_ok_and(|d| d <= VALIDATION_TOLERANCE)
        })
    }

    pub fn observable(&self, name: &str) -> Result<Observable> {
        Observable::new(self.operator(name)?)
    }

    pub fn unitary(&self, name: &str) -> Result<Operator> {
        if let Some(op) = self.unitaries.get(name) {
            return Ok(op.clone());
        }
        if name == IDENTITY {
            return Ok(Operator::identity(self.dim));
        }
        Err(Error::UnknownName {
            kind: "unitary",
            name: name.to_string(),
        })
    }

    pub fn resolve_schedule(&self, entries: &[ScheduleEntry]) -> Result<Vec<ScheduleStep>> {
        entries
            .iter()
            .map(|e| {
                ScheduleStep::new(
                    e.observable.clone(),
                    self.observable(&e.observable)?,
                    self.unitary(&e.unitary)?,
                )
            })
            .collect()
    }

    /// The scenario's own measurement schedule.
    pub fn schedule_steps(&self) -> Result<Vec<ScheduleStep>> {
        self.resolve_schedule(&self.schedule)
    }

    /// Named observables with their spectral decompositions, in name order.
    pub fn named_observables(&self) -> Result<Vec<(String, Observable)>> {
        self.observables
            .iter()
            .map(|(n, op)| Ok((n.clone(), Observable::new(op.clone())?)))
            .collect()
    }

    /// Semantic equality: states up to global phase, operators entrywise.
    pub fn approx_eq(&self, other: &ScenarioSpec, tol: f64) -> bool {
        let ops_eq = |a: &BTreeMap<String, Operator>, b: &BTreeMap<String, Operator>| {
            a.len() == b.len()
                && a.iter()
                    .zip(b)
                    .all(|((na, oa), (nb, ob))| na == nb && oa.max_abs_diff(ob).is_ok_and(|d| d <= tol))
        };
        self.name == other.name
            && self.dim == other.dim
            && self.pre.approx_eq_up_to_phase(&other.pre, tol)
            && match (&self.post, &other.post) {
                (Some(a), Some(b)) => a.approx_eq_up_to_phase(b, tol),
                (None, None) => true,
                _ => false,
            }
            && ops_eq(&self.observables, &other.observables)
            && ops_eq(&self.unitaries, &other.unitaries)
            && self.schedule == other.schedule
            && self.pointer_sigma == other.pointer_sigma
            && self.n_particles == other.n_particles
    }

    pub fn to_document(&self) -> ScenarioDocument {
        let vec = |v: &StateVector| v.amplitudes().iter().map(|z| [z.re, z.im]).collect();
        let mat = |op: &Operator| {
            (0..op.dim())
                .map(|r| op.row(r).iter().map(|z| [z.re, z.im]).collect())
                .collect()
        };
        ScenarioDocument {
            format: FORMAT_VERSION.to_string(),
            name: Some(self.name.clone()),
            dim: self.dim,
            pre: vec(&self.pre),
            post: self.post.as_ref().map(vec),
            observables: self.observables.iter().map(|(k, v)| (k.clone(), mat(v))).collect(),
            unitaries: self.unitaries.iter().map(|(k, v)| (k.clone(), mat(v))).collect(),
            schedule: self.schedule.clone(),
            pointer_sigma: self.pointer_sigma,
            n_particles: self.n_particles,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }
}

type Pair = [f64; 2];

/// On-disk representation of a scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub pre: Vec<Pair>,
    #[serde(default)]
    pub post: Option<Vec<Pair>>,
    #[serde(default)]
    pub observables: BTreeMap<String, Vec<Vec<Pair>>>,
    #[serde(default)]
    pub unitaries: BTreeMap<String, Vec<Vec<Pair>>>,
    #[serde(default)]
    pub schedule: Vec<ScheduleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointer_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<usize>,
}

/// A validated scenario plus any non-fatal issues found while loading.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub spec: ScenarioSpec,
    pub warnings: Vec<String>,
}

fn pairs_to_complex(pairs: &[Pair]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn load_state(label: &str, pairs: &[Pair], dim: usize, warnings: &mut Vec<String>) -> Result<StateVector> {
    if pairs.len() != dim {
        return Err(Error::Scenario(format!(
            "`{label}` has {} amplitudes but dim = {dim}",
            pairs.len()
        )));
    }
    let v = StateVector::new(pairs_to_complex(pairs)).map_err(|e| Error::Scenario(format!("`{label}`: {e}")))?;
    let norm = v.norm();
    if (norm - 1.0).abs() > LOAD_NORM_TOLERANCE {
        return Err(Error::Scenario(format!(
            "`{label}` state not normalized (norm = {norm:.9})"
        )));
    }
    if (norm - 1.0).abs() > 1e-12 {
        warnings.push(format!("`{label}` renormalized from norm {norm:.15}"));
    }
    v.normalize()
}

fn load_matrix(kind: &str, name: &str, rows: &[Vec<Pair>], dim: usize) -> Result<Operator> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Scenario(format!("{kind} `{name}` must be a {dim}x{dim} matrix")));
    }
    Operator::from_rows(rows.iter().map(|r| pairs_to_complex(r)).collect())
        .map_err(|e| Error::Scenario(format!("{kind} `{name}`: {e}")))
}

/// Parse and validate a scenario document.
pub fn load_scenario(document: &str) -> Result<LoadedScenario> {
    let doc: ScenarioDocument =
        serde_json::from_str(document).map_err(|e| Error::Scenario(format!("schema violation: {e}")))?;
    if doc.format != FORMAT_VERSION {
        return Err(Error::Scenario(format!(
            "unsupported format `{}` (expected `{FORMAT_VERSION}`)",
            doc.format
        )));
    }
    if doc.dim == 0 {
        return Err(Error::Scenario("dim must be positive".into()));
    }
    let mut warnings = Vec::new();
    let pre = load_state("pre", &doc.pre, doc.dim, &mut warnings)?;
    let post = doc
        .post
        .as_deref()
        .map(|p| load_state("post", p, doc.dim, &mut warnings))
        .transpose()?;
    let observables = doc
        .observables
        .iter()
        .map(|(k, m)| Ok((k.clone(), load_matrix("observable", k, m, doc.dim)?)))
        .collect::<Result<_>>()?;
    let unitaries = doc
        .unitaries
        .iter()
        .map(|(k, m)| Ok((k.clone(), load_matrix("unitary", k, m, doc.dim)?)))
        .collect::<Result<_>>()?;
    let spec = ScenarioSpec {
        name: doc.name.unwrap_or_else(|| "custom".to_string()),
        dim: doc.dim,
        pre,
        post,
        observables,
        unitaries,
        schedule: doc.schedule,
        pointer_sigma: doc.pointer_sigma,
        n_particles: doc.n_particles,
    };
    spec.validate()?;
    Ok(LoadedScenario { spec, warnings })
}

/// Dense dimension budget from the environment, or the default.
pub fn dim_budget_from_env() -> Result<usize> {
    match std::env::var(DIM_BUDGET_ENV) {
        Ok(v) => {
            v.trim().parse::<usize>().ok().filter(|&b| b > 0).ok_or_else(|| {
                Error::InvalidParameter(format!("{DIM_BUDGET_ENV} must be a positive integer, got `{v}`"))
            })
        }
        Err(_) => Ok(DEFAULT_DIM_BUDGET),
    }
}

pub const BOX_NAMES: [&str; 3] = ["A", "B", "C"];

/// Three-box pre-selection `(|A⟩+|B⟩+|C⟩)/√3`.
pub fn three_box_pre() -> StateVector {
    let s = 1.0 / 3f64.sqrt();
    StateVector::from_real(&[s, s, s]).expect("static state")
}

/// Three-box post-selection `(|A⟩+|B⟩-|C⟩)/√3`.
pub fn three_box_post() -> StateVector {
    let s = 1.0 / 3f64.sqrt();
    StateVector::from_real(&[s, s, -s]).expect("static state")
}

pub fn box_projector(index: usize) -> Operator {
    let mut d = [0.0; 3];
    d[index] = 1.0;
    Operator::diagonal(&d)
}

/// Three-box scenario for `n` particles, with the default dimension budget.
pub fn three_box(n: usize) -> Result<ScenarioSpec> {
    three_box_with_budget(n, DEFAULT_DIM_BUDGET)
}

/// One particle: observables `P_A, P_B, P_C` and the location `X` (eigenvalues
/// 0, 1, 2 for A, B, C). `n > 1` particles: the tensor-power states and number
/// operators `N_A, N_B, N_C`.
pub fn three_box_with_budget(n: usize, budget: usize) -> Result<ScenarioSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("three-box needs at least one particle".into()));
    }
    let dim = u32::try_from(n)
        .ok()
        .and_then(|e| 3usize.checked_pow(e))
        .unwrap_or(usize::MAX);
    if dim > budget {
        return Err(Error::DimBudgetExceeded { dim, budget });
    }

    let mut observables = BTreeMap::new();
    let (pre, post) = if n == 1 {
        for (i, b) in BOX_NAMES.iter().enumerate() {
            observables.insert(format!("P_{b}"), box_projector(i));
        }
        observables.insert("X".to_string(), Operator::diagonal(&[0.0, 1.0, 2.0]));
        (three_box_pre(), three_box_post())
    } else {
        for (i, b) in BOX_NAMES.iter().enumerate() {
            let p = box_projector(i);
            let number = (0..n).fold(Operator::zeros(dim), |acc, site| &acc + &embed(&p, site, n));
            observables.insert(format!("N_{b}"), number);
        }
        (three_box_pre().tensor_power(n), three_box_post().tensor_power(n))
    };
    let spec = ScenarioSpec {
        name: "three-box".to_string(),
        dim,
        pre,
        post: Some(post),
        observables,
        unitaries: BTreeMap::new(),
        schedule: Vec::new(),
        pointer_sigma: Some(crate::measure::DEFAULT_SIGMA),
        n_particles: Some(n),
    };
    spec.validate()?;
    Ok(spec)
}

/// Two spin-1/2 particles in the singlet state, pre-selected only, with
/// single-side Pauli observables `sigma_1x, sigma_2x, sigma_1y, sigma_2y`.
/// The default schedule measures `sigma_1x` then `sigma_2x`.
pub fn singlet() -> ScenarioSpec {
    let s = 1.0 / 2f64.sqrt();
    let pre = StateVector::from_real(&[0.0, s, -s, 0.0]).expect("static state");
    let mut observables = BTreeMap::new();
    for (site, label) in [(0, "1"), (1, "2")] {
        observables.insert(format!("sigma_{label}x"), embed(&Operator::pauli_x(), site, 2));
        observables.insert(format!("sigma_{label}y"), embed(&Operator::pauli_y(), site, 2));
    }
    ScenarioSpec {
        name: "singlet".to_string(),
        dim: 4,
        pre,
        post: None,
        observables,
        unitaries: BTreeMap::new(),
        schedule: vec![ScheduleEntry::measure("sigma_1x"), ScheduleEntry::measure("sigma_2x")],
        pointer_sigma: None,
        n_particles: None,
    }
}

/// Look up a built-in scenario by name.
pub fn builtin(name: &str, n: usize, budget: usize) -> Result<Option<ScenarioSpec>> {
    match name {
        "three-box" | "three_box" => three_box_with_budget(n, budget).map(Some),
        "singlet" => Ok(Some(singlet())),
        _ => Ok(None),
    }
}
