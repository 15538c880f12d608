//! Two-state vectors and the quantities they determine.
//!
//! A [`TwoStateVector`] holds the pre-selected state and (optionally) the
//! post-selected state, both already propagated to the time of the
//! intermediate measurement. A missing post-selection is the pre-selected-only
//! case: every rule here then reduces to the Born rule.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{spectral, Operator, SpectralDecomposition, StateVector, VALIDATION_TOLERANCE};

/// Probability at or above which an outcome counts as certain.
pub const CERTAINTY_THRESHOLD: f64 = 1.0 - 1e-9;

/// Denominators below this mean no outcome survives post-selection.
pub const IMPOSSIBLE_POSTSELECTION: f64 = 1e-30;

/// Smallest `|⟨post|pre⟩|` for which a weak value is reported.
pub const MIN_WEAK_OVERLAP: f64 = 1e-12;

/// A Hermitian operator together with its spectral projectors.
#[derive(Clone, Debug)]
pub struct Observable {
    operator: Operator,
    spectrum: SpectralDecomposition,
}

impl Observable {
    pub fn new(operator: Operator) -> Result<Self> {
        let spectrum = spectral(&operator)?;
        Ok(Self { operator, spectrum })
    }

    /// Observable with the given eigenvalues on the computational basis.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(Operator::diagonal(values))
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }
}

#[derive(Clone, Debug)]
pub struct TwoStateVector {
    pre: StateVector,
    post: Option<StateVector>,
}

impl TwoStateVector {
    /// Both states must be normalized within 1e-9 and share a dimension.
    pub fn new(pre: StateVector, post: Option<StateVector>) -> Result<Self> {
        ensure_normalized(&pre)?;
        if let Some(post) = &post {
            ensure_normalized(post)?;
            if post.dim() != pre.dim() {
                return Err(Error::DimensionMismatch {
                    expected: pre.dim(),
                    found: post.dim(),
                });
            }
        }
        Ok(Self { pre, post })
    }

    pub fn pre_selected(pre: StateVector) -> Result<Self> {
        Self::new(pre, None)
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> Option<&StateVector> {
        self.post.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.pre.dim()
    }

    /// `⟨post|pre⟩`, if there is a post-selection.
    pub fn overlap(&self) -> Option<Complex64> {
        self.post
            .as_ref()
            .map(|post| post.inner(&self.pre).expect("dims checked on construction"))
    }
}

fn ensure_normalized(v: &StateVector) -> Result<()> {
    if v.is_normalized(VALIDATION_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::NotNormalized { norm: v.norm() })
    }
}

fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// One outcome of a (possibly multi-time) measurement. Single measurements
/// have a one-element label.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub label: Vec<f64>,
    pub probability: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    outcomes: Vec<Outcome>,
}

impl OutcomeDistribution {
    /// Normalize non-negative weights into a distribution.
    fn from_weights(weights: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total < IMPOSSIBLE_POSTSELECTION {
            return Err(Error::ImpossiblePostSelection);
        }
        Ok(Self {
            outcomes: weights
                .into_iter()
                .map(|(label, w)| Outcome {
                    label,
                    probability: (w / total).clamp(0.0, 1.0),
                })
                .collect(),
        })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter()
    }

    /// Probability of the outcome whose label matches within 1e-9, else 0.
    pub fn probability_of(&self, label: &[f64]) -> f64 {
        self.outcomes
            .iter()
            .find(|o| labels_match(&o.label, label))
            .map_or(0.0, |o| o.probability)
    }

    /// The outcome with probability at least [`CERTAINTY_THRESHOLD`], if any.
    pub fn certain_outcome(&self) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.probability >= CERTAINTY_THRESHOLD)
    }

    /// Marginal over one position of a tuple-labelled distribution.
    pub fn marginal(&self, position: usize) -> OutcomeDistribution {
        let mut out: Vec<Outcome> = Vec::new();
        for o in &self.outcomes {
            let key = o.label[position];
            match out.iter_mut().find(|m| labels_match(&m.label, &[key])) {
                Some(m) => m.probability += o.probability,
                None => out.push(Outcome {
                    label: vec![key],
                    probability: o.probability,
                }),
            }
        }
        out.sort_by(|a, b| a.label[0].total_cmp(&b.label[0]));
        OutcomeDistribution { outcomes: out }
    }

    pub fn expectation(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.probability * o.label.iter().sum::<f64>())
            .sum()
    }
}

fn labels_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

/// ABL probabilities of an intermediate measurement of `obs`.
///
/// `P(a_i) = |⟨post|Π_i|pre⟩|² / Σ_k |⟨post|Π_k|pre⟩|²`; without a
/// post-selection this is `‖Π_i|pre⟩‖²`.
pub fn abl_probabilities(tsv: &TwoStateVector, obs: &Observable) -> Result<OutcomeDistribution> {
    ensure_dim(tsv.dim(), obs.dim())?;
    let weights = obs
        .spectrum()
        .iter()
        .map(|(lambda, proj)| {
            let projected = proj.apply(tsv.pre())?;
            let w = match tsv.post() {
                Some(post) => post.inner(&projected)?.norm_sqr(),
                None => projected.norm_sqr(),
            };
            Ok((vec![lambda], w))
        })
        .collect::<Result<Vec<_>>>()?;
    OutcomeDistribution::from_weights(weights)
}

/// One intermediate measurement followed by unitary evolution to the next.
#[derive(Clone, Debug)]
pub struct ScheduleStep {
    pub label: String,
    pub observable: Observable,
    pub evolution: Operator,
}

impl ScheduleStep {
    pub fn new(label: impl Into<String>, observable: Observable, evolution: Operator) -> Result<Self> {
        ensure_dim(observable.dim(), evolution.dim())?;
        evolution.ensure_unitary()?;
        Ok(Self {
            label: label.into(),
            observable,
            evolution,
        })
    }

    /// Measurement with no evolution afterwards.
    pub fn measure(label: impl Into<String>, observable: Observable) -> Self {
        let dim = observable.dim();
        Self {
            label: label.into(),
            observable,
            evolution: Operator::identity(dim),
        }
    }
}

/// Unnormalized weights `|⟨post| U_k Π_k ... U_1 Π_1 |pre⟩|²` for every
/// outcome tuple, in lexicographic order of eigenvalue indices. Without a
/// post-selection the weight is the squared norm of the chain.
///
/// The weights sum to the probability that the post-selection succeeds.
pub fn sequence_weights(
    pre: &StateVector,
    post: Option<&StateVector>,
    schedule: &[ScheduleStep],
) -> Result<Vec<(Vec<f64>, f64)>> {
    if let Some(post) = post {
        ensure_dim(pre.dim(), post.dim())?;
    }
    for step in schedule {
        ensure_dim(pre.dim(), step.observable.dim())?;
        ensure_dim(pre.dim(), step.evolution.dim())?;
        step.evolution.ensure_unitary()?;
    }

    let mut out = Vec::new();
    let mut label = Vec::with_capacity(schedule.len());
    chain(pre.clone(), post, schedule, &mut label, &mut out)?;
    Ok(out)
}

fn chain(
    state: StateVector,
    post: Option<&StateVector>,
    rest: &[ScheduleStep],
    label: &mut Vec<f64>,
    out: &mut Vec<(Vec<f64>, f64)>,
) -> Result<()> {
    let Some((step, rest)) = rest.split_first() else {
        let w = match post {
            Some(post) => post.inner(&state)?.norm_sqr(),
            None => state.norm_sqr(),
        };
        out.push((label.clone(), w));
        return Ok(());
    };
    for (lambda, proj) in step.observable.spectrum().iter() {
        let next = step.evolution.apply(&proj.apply(&state)?)?;
        label.push(lambda);
        chain(next, post, rest, label, out)?;
        label.pop();
    }
    Ok(())
}

/// Joint probabilities for a sequence of intermediate measurements,
/// conditioned on the post-selection.
pub fn sequence_probabilities(
    pre: &StateVector,
    post: Option<&StateVector>,
    schedule: &[ScheduleStep],
) -> Result<OutcomeDistribution> {
    OutcomeDistribution::from_weights(sequence_weights(pre, post, schedule)?)
}

/// `A_w = ⟨post|A|pre⟩ / ⟨post|pre⟩`.
pub fn weak_value(tsv: &TwoStateVector, op: &Operator) -> Result<Complex64> {
    ensure_dim(tsv.dim(), op.dim())?;
    let post = tsv.post().ok_or(Error::MissingPostSelection)?;
    let overlap = post.inner(tsv.pre())?;
    if overlap.norm() < MIN_WEAK_OVERLAP {
        return Err(Error::UndefinedWeakValue {
            overlap: overlap.norm(),
        });
    }
    Ok(op.sandwich(post, tsv.pre())? / overlap)
}

/// Weak value of `Σ_i op^(i)` over `n` particles that each carry the same
/// single-particle two-state vector. Uses additivity of weak values, so the
/// N-particle space is never built.
pub fn ensemble_weak_value(tsv: &TwoStateVector, op: &Operator, n: usize) -> Result<Complex64> {
    Ok(weak_value(tsv, op)? * n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementOfReality {
    pub observable: String,
    pub value: f64,
    pub probability: f64,
}

/// Observables whose ABL distribution is certain, with their certain value.
pub fn elements_of_reality<'a, I>(tsv: &TwoStateVector, observables: I) -> Result<Vec<ElementOfReality>>
where
    I: IntoIterator<Item = (&'a str, &'a Observable)>,
{
    let mut out = Vec::new();
    for (name, obs) in observables {
        let dist = abl_probabilities(tsv, obs)?;
        if let Some(o) = dist.certain_outcome() {
            out.push(ElementOfReality {
                observable: name.to_string(),
                value: o.label[0],
                probability: o.probability,
            });
        }
    }
    Ok(out)
}

fn certain_value(tsv: &TwoStateVector, obs: &Observable) -> Result<Option<f64>> {
    Ok(abl_probabilities(tsv, obs)?.certain_outcome().map(|o| o.label[0]))
}

/// Certain values of `A`, `B` and `AB`, where known.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductRuleReport {
    pub value_a: Option<f64>,
    pub value_b: Option<f64>,
    pub value_ab: Option<f64>,
    /// `None` when any of the three lacks an element of reality.
    pub product_rule_holds: Option<bool>,
}

impl ProductRuleReport {
    pub fn is_applicable(&self) -> bool {
        self.product_rule_holds.is_some()
    }

    pub fn is_violation(&self) -> bool {
        self.product_rule_holds == Some(false)
    }
}

/// Test whether `A = a` and `B = b` imply `AB = ab` for commuting `A`, `B`.
pub fn product_rule_report(tsv: &TwoStateVector, a: &Observable, b: &Observable) -> Result<ProductRuleReport> {
    let deviation = a.operator().commutator_norm(b.operator())?;
    if deviation > VALIDATION_TOLERANCE {
        return Err(Error::NonCommuting { deviation });
    }
    let ab = Observable::new(a.operator().matmul(b.operator())?)?;
    let value_a = certain_value(tsv, a)?;
    let value_b = certain_value(tsv, b)?;
    let value_ab = certain_value(tsv, &ab)?;
    let product_rule_holds = match (value_a, value_b, value_ab) {
        (Some(x), Some(y), Some(xy)) => Some((x * y - xy).abs() <= VALIDATION_TOLERANCE),
        _ => None,
    };
    Ok(ProductRuleReport {
        value_a,
        value_b,
        value_ab,
        product_rule_holds,
    })
}
