use num_complex::Complex64;
use serde_json::{json, Value};

use super::report::{sampled, Parameters, RunReport};
use super::{resolve_scenario, Mode};
use crate::error::{Error, Result};
use crate::hilbert::VALIDATION_TOLERANCE;
use crate::measure::{
    derive_seed, ensemble_pressure, pointer_conditional_mean, pointer_samples, run_pre_post_experiment,
    weak_pointer_amplitudes, ExperimentResult, GaussianPointer, DEFAULT_SIGMA,
};
use crate::scenarios::{self, ScenarioSpec};
use crate::tsvf::{
    abl_probabilities, ensemble_weak_value, product_rule_report, sequence_weights, weak_value, OutcomeDistribution,
    IMPOSSIBLE_POSTSELECTION,
};

const THREE_BOX: &str = "three-box";

/// Estimate quoted for the N-particle post-selection probability, reported
/// next to the computed value.
const QUOTED_RARITY: &str = "of the order of 3^{-N}";

fn outcome_json(label: &[f64]) -> Value {
    if label.len() == 1 {
        json!(label[0])
    } else {
        json!(label)
    }
}

fn distribution_json(dist: &OutcomeDistribution) -> Value {
    Value::Array(
        dist.iter()
            .map(|o| json!({ "outcome": outcome_json(&o.label), "probability": o.probability }))
            .collect(),
    )
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Probability of each outcome sum, in ascending order of the sum.
fn sum_distribution(dist: &OutcomeDistribution) -> Vec<(f64, f64)> {
    let mut sums: Vec<(f64, f64)> = Vec::new();
    for o in dist.iter() {
        let s: f64 = o.label.iter().sum();
        match sums.iter_mut().find(|(k, _)| (k - s).abs() <= 1e-9) {
            Some((_, p)) => *p += o.probability,
            None => sums.push((s, o.probability)),
        }
    }
    sums.sort_by(|a, b| a.0.total_cmp(&b.0));
    sums
}

fn rarity_json(n: usize) -> Value {
    let single = scenarios::three_box_post()
        .inner(&scenarios::three_box_pre())
        .expect("equal dims")
        .norm_sqr();
    let mut block = json!({
        "n_particles": n,
        "single_particle_rate": single,
        "n_particle_rate": single.powi(n as i32),
        "n_particle_rate_formula": "9^(-N)",
    });
    if n > 1 {
        block["quoted_estimate"] = json!(QUOTED_RARITY);
        block["quoted_estimate_value"] = json!(3f64.powi(-(n as i32)));
    }
    block
}

/// `abl`: ABL distribution of one observable and whether it is an element of reality.
pub fn cmd_abl(scenario: &str, n: Option<usize>, observable: &str, budget: usize) -> Result<RunReport> {
    let resolved = resolve_scenario(scenario, n, budget)?;
    let spec = &resolved.spec;
    let tsv = spec.two_state_vector()?;
    let obs = spec.observable(observable)?;
    let dist = abl_probabilities(&tsv, &obs)?;
    let mut report = RunReport::new(
        &spec.name,
        "abl",
        Parameters {
            observable: Some(observable.to_string()),
            n_particles: Some(resolved.n_particles),
            ..Default::default()
        },
    );
    let element = dist
        .certain_outcome()
        .map(|o| json!({ "observable": observable, "value": o.label[0], "probability": o.probability }));
    if let Some(o) = dist.certain_outcome() {
        report
            .notes
            .push(format!("element of reality: {observable} = {}", o.label[0]));
    } else {
        report.notes.push(format!("no element of reality for {observable}"));
    }
    report.analytic = json!({
        "observable": observable,
        "post_selected": tsv.post().is_some(),
        "distribution": distribution_json(&dist),
        "element_of_reality": element.unwrap_or(Value::Null),
    });
    Ok(report)
}

/// `weak`: weak value of an operator. Three-box number operators beyond the
/// dense budget fall back to additivity over single-particle weak values.
pub fn cmd_weak(scenario: &str, n: Option<usize>, operator: &str, budget: usize) -> Result<RunReport> {
    let params = |n_particles| Parameters {
        observable: Some(operator.to_string()),
        n_particles: Some(n_particles),
        ..Default::default()
    };
    match resolve_scenario(scenario, n, budget) {
        Ok(resolved) => {
            let spec = &resolved.spec;
            let tsv = spec.two_state_vector()?;
            let op = spec.operator(operator)?;
            let w = weak_value(&tsv, &op)?;
            let mut report = RunReport::new(&spec.name, "weak", params(resolved.n_particles));
            report.analytic = json!({
                "operator": operator,
                "weak_value": complex_json(w),
                "method": "dense",
                "dim": spec.dim,
                "overlap": complex_json(tsv.overlap().expect("weak value needs post-selection")),
            });
            Ok(report)
        }
        Err(Error::DimBudgetExceeded { dim, budget }) if is_three_box(scenario) => {
            let n = n.unwrap_or(1);
            let Some(box_index) = number_operator_box(operator) else {
                return Err(Error::DimBudgetExceeded { dim, budget });
            };
            let single = scenarios::three_box(1)?;
            let tsv = single.two_state_vector()?;
            let w = ensemble_weak_value(&tsv, &scenarios::box_projector(box_index), n)?;
            let mut report = RunReport::new(THREE_BOX, "weak", params(n));
            report.analytic = json!({
                "operator": operator,
                "weak_value": complex_json(w),
                "method": "additivity",
                "dim": dim,
                "overlap": complex_json(tsv.overlap().expect("three-box is post-selected").powi(n as i32)),
            });
            report.notes.push(format!(
                "dense dimension {dim} exceeds budget {budget}; weak value summed over {n} single-particle terms"
            ));
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

fn is_three_box(name: &str) -> bool {
    matches!(name, "three-box" | "three_box")
}

fn number_operator_box(name: &str) -> Option<usize> {
    let b = name.strip_prefix("N_")?;
    scenarios::BOX_NAMES.iter().position(|x| *x == b)
}

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub scenario: String,
    pub n: Option<usize>,
    pub mode: Mode,
    pub trials: u64,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub observables: Vec<String>,
    pub budget: usize,
}

/// `simulate`: strong pre/post experiment, single weak pointers, or the
/// N-particle pressure ensemble, with analytic references alongside.
pub fn cmd_simulate(opts: &SimulateOptions) -> Result<RunReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    match opts.mode {
        Mode::Strong => simulate_strong(opts),
        Mode::Weak => simulate_weak(opts),
        Mode::Pressure => simulate_pressure(opts),
    }
}

fn simulate_params(opts: &SimulateOptions, sigma: Option<f64>, n_particles: usize) -> Parameters {
    Parameters {
        observable: (!opts.observables.is_empty()).then(|| opts.observables.join(",")),
        mode: Some(opts.mode.as_str().to_string()),
        trials: Some(opts.trials),
        seed: Some(opts.seed),
        sigma,
        n_particles: Some(n_particles),
    }
}

fn experiment_json(result: &ExperimentResult) -> Value {
    let conditional = result.conditional.as_ref().map(|freqs| {
        freqs
            .iter()
            .map(|f| {
                json!({
                    "outcome": outcome_json(&f.label),
                    "count": f.count,
                    "frequency": sampled(f.frequency, f.n, f.standard_error),
                })
            })
            .collect::<Vec<_>>()
    });
    let sums = result.conditional.as_ref().map(|freqs| {
        let mut sums: Vec<(f64, u64)> = Vec::new();
        for f in freqs {
            let s: f64 = f.label.iter().sum();
            match sums.iter_mut().find(|(k, _)| (k - s).abs() <= 1e-9) {
                Some((_, c)) => *c += f.count,
                None => sums.push((s, f.count)),
            }
        }
        sums.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = result.successes;
        sums.into_iter()
            .map(|(s, c)| {
                let p = c as f64 / n as f64;
                json!({ "sum": s, "count": c, "frequency": sampled(p, n, (p * (1.0 - p) / n as f64).sqrt()) })
            })
            .collect::<Vec<_>>()
    });
    json!({
        "trials": result.trials,
        "successes": result.successes,
        "success_rate": sampled(result.success_rate.frequency, result.success_rate.n, result.success_rate.standard_error),
        "conditional": conditional,
        "sum_frequencies": sums,
    })
}

fn simulate_strong(opts: &SimulateOptions) -> Result<RunReport> {
    let resolved = resolve_scenario(&opts.scenario, opts.n, opts.budget)?;
    let spec = &resolved.spec;
    let entries = if opts.observables.is_empty() {
        spec.schedule.clone()
    } else {
        opts.observables.iter().map(scenarios::ScheduleEntry::measure).collect()
    };
    let steps = spec.resolve_schedule(&entries)?;
    let labels: Vec<&str> = steps.iter().map(|s| s.label.as_str()).collect();

    let weights = sequence_weights(&spec.pre, spec.post.as_ref(), &steps)?;
    let success: f64 = weights.iter().map(|w| w.1).sum();
    let result = run_pre_post_experiment(&spec.pre, spec.post.as_ref(), &steps, opts.trials, opts.seed)?;

    let mut report = RunReport::new(
        &spec.name,
        "simulate",
        simulate_params(opts, None, resolved.n_particles),
    );
    let mut analytic = json!({
        "schedule": labels,
        "postselection_probability": success,
    });
    if success >= IMPOSSIBLE_POSTSELECTION {
        let dist = crate::tsvf::sequence_probabilities(&spec.pre, spec.post.as_ref(), &steps)?;
        analytic["distribution"] = distribution_json(&dist);
        analytic["sum_distribution"] = Value::Array(
            sum_distribution(&dist)
                .into_iter()
                .map(|(s, p)| json!({ "sum": s, "probability": p }))
                .collect(),
        );
    } else {
        analytic["distribution"] = Value::Null;
        report
            .notes
            .push("post-selection is impossible for this schedule".into());
    }
    if resolved.builtin && spec.name == THREE_BOX {
        analytic["postselection_rarity"] = rarity_json(resolved.n_particles);
    }
    if !result.has_data() {
        report.notes.push("no data: no trial passed post-selection".into());
    }
    report.analytic = analytic;
    report.sampled = experiment_json(&result);
    Ok(report)
}

fn pointer_sigma(opts: &SimulateOptions, spec: &ScenarioSpec) -> f64 {
    opts.sigma.or(spec.pointer_sigma).unwrap_or(DEFAULT_SIGMA)
}

fn selected_names(opts: &SimulateOptions, spec: &ScenarioSpec, filter: impl Fn(&str) -> bool) -> Vec<String> {
    if opts.observables.is_empty() {
        spec.observables.keys().filter(|k| filter(k)).cloned().collect()
    } else {
        opts.observables.clone()
    }
}

fn simulate_weak(opts: &SimulateOptions) -> Result<RunReport> {
    let resolved = resolve_scenario(&opts.scenario, opts.n, opts.budget)?;
    let spec = &resolved.spec;
    let tsv = spec.two_state_vector()?;
    let sigma = pointer_sigma(opts, spec);
    let pointer = GaussianPointer::new(sigma)?;
    let names = selected_names(opts, spec, |_| true);

    let mut analytic = Vec::new();
    let mut sampled_out = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let obs = spec.observable(name)?;
        let mixture = weak_pointer_amplitudes(&tsv, &obs, &pointer)?;
        let moments = pointer_conditional_mean(&mixture)?;
        let w = weak_value(&tsv, obs.operator())?;
        let stats = pointer_samples(&mixture, opts.trials, derive_seed(opts.seed, k as u64))?;
        analytic.push(json!({
            "observable": name,
            "weak_value": complex_json(w),
            "conditional_mean": moments.mean,
            "conditional_variance": moments.variance,
            "postselection_probability": moments.postselection_probability,
        }));
        sampled_out.push(json!({
            "observable": name,
            "mean": sampled(stats.sample_mean, stats.n_trials, stats.standard_error),
            "variance": stats.sample_variance,
            "z_score": stats.z_score(),
        }));
    }
    let mut report = RunReport::new(
        &spec.name,
        "simulate",
        simulate_params(opts, Some(sigma), resolved.n_particles),
    );
    report.analytic = json!({ "pointers": analytic });
    if resolved.builtin && spec.name == THREE_BOX {
        report.analytic["postselection_rarity"] = rarity_json(resolved.n_particles);
    }
    report.sampled = json!({ "pointers": sampled_out });
    Ok(report)
}

fn simulate_pressure(opts: &SimulateOptions) -> Result<RunReport> {
    // The factorized sampler only needs the single-particle description.
    let (spec, builtin, n) = if is_three_box(&opts.scenario) {
        (scenarios::three_box(1)?, true, opts.n.unwrap_or(1))
    } else {
        let r = resolve_scenario(&opts.scenario, opts.n, opts.budget)?;
        (r.spec, r.builtin, r.n_particles)
    };
    let tsv = spec.two_state_vector()?;
    let sigma = pointer_sigma(opts, &spec);
    let pointer = GaussianPointer::new(sigma)?;
    let names = selected_names(opts, &spec, |k| spec.is_projector(k));
    if names.is_empty() {
        return Err(Error::InvalidParameter(
            "pressure mode needs projector observables (none found; pass --observable)".into(),
        ));
    }
    let overlap = tsv.overlap().ok_or(Error::MissingPostSelection)?;

    let mut analytic = Vec::new();
    let mut sampled_out = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let obs = spec.observable(name)?;
        let w = weak_value(&tsv, obs.operator())?;
        let stats = ensemble_pressure(
            &tsv,
            &obs,
            n as u64,
            &pointer,
            opts.trials,
            derive_seed(opts.seed, k as u64),
        )?;
        analytic.push(json!({
            "observable": name,
            "weak_value_per_particle": complex_json(w),
            "ensemble_weak_value": complex_json(w * n as f64),
            "conditional_mean": stats.analytic_mean,
            "postselection_probability": stats.analytic_postselection_probability,
            "uncoupled_postselection_probability": overlap.norm_sqr().powi(n as i32),
        }));
        sampled_out.push(json!({
            "observable": name,
            "aggregate_mean": sampled(stats.sample_mean, stats.n_trials, stats.standard_error),
            "aggregate_variance": stats.sample_variance,
            "z_score": stats.z_score(),
        }));
    }
    let mut report = RunReport::new(&spec.name, "simulate", simulate_params(opts, Some(sigma), n));
    report.analytic = json!({ "boxes": analytic });
    if builtin && spec.name == THREE_BOX {
        report.analytic["postselection_rarity"] = rarity_json(n);
    }
    report.sampled = json!({ "boxes": sampled_out, "sampler": "factorized conditional" });
    Ok(report)
}

/// `check`: product-rule report over all commuting pairs of named observables.
pub fn cmd_check(scenario: &str, n: Option<usize>, budget: usize) -> Result<RunReport> {
    let resolved = resolve_scenario(scenario, n, budget)?;
    let spec = &resolved.spec;
    let tsv = spec.two_state_vector()?;
    let named = spec.named_observables()?;

    let mut pairs = Vec::new();
    let mut violations = Vec::new();
    let mut non_commuting = Vec::new();
    for (i, (name_a, a)) in named.iter().enumerate() {
        for (name_b, b) in &named[i..] {
            if a.operator().commutator_norm(b.operator())? > VALIDATION_TOLERANCE {
                non_commuting.push(json!([name_a, name_b]));
                continue;
            }
            let r = product_rule_report(&tsv, a, b)?;
            if !r.is_applicable() {
                continue;
            }
            let entry = json!({
                "a": name_a,
                "b": name_b,
                "value_a": r.value_a,
                "value_b": r.value_b,
                "value_ab": r.value_ab,
                "product_rule_holds": r.product_rule_holds,
            });
            if r.is_violation() {
                violations.push(entry.clone());
            }
            pairs.push(entry);
        }
    }
    let mut report = RunReport::new(
        &spec.name,
        "check",
        Parameters {
            n_particles: Some(resolved.n_particles),
            ..Default::default()
        },
    );
    if pairs.is_empty() {
        report.notes.push("no applicable pairs".into());
    }
    for v in &violations {
        report.notes.push(format!(
            "product rule fails for ({}, {}): {} * {} != {}",
            v["a"].as_str().unwrap_or_default(),
            v["b"].as_str().unwrap_or_default(),
            v["value_a"],
            v["value_b"],
            v["value_ab"],
        ));
    }
    report.analytic = json!({
        "pairs": pairs,
        "violations": violations,
        "non_commuting": non_commuting,
    });
    Ok(report)
}
