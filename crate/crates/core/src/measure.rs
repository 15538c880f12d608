//! Strong and weak measurement simulation with pre- and post-selection.
//!
//! # Random streams
//!
//! Every trial draws from its own ChaCha20 stream: the generator is seeded
//! with `ChaCha20Rng::seed_from_u64(master_seed)` and then switched to
//! stream number `trial_index`. Trials therefore produce the same draws no
//! matter how they are scheduled across threads.
//!
//! # Pointer model
//!
//! The pointer starts in `φ(q) = (2πσ²)^(-1/4) exp(-(q - q0)²/(4σ²))`. An
//! impulsive von Neumann coupling to an observable with spectral projectors
//! `Π_i` and eigenvalues `a_i`, followed by post-selection, leaves the
//! pointer in the unnormalized state `ψ(q) = Σ_i c_i φ(q - a_i)` with
//! `c_i = ⟨post|Π_i|pre⟩`. Interference between the shifted Gaussians is
//! kept exactly, so the same description covers weak and strong coupling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::tsvf::{Observable, ScheduleStep, TwoStateVector, IMPOSSIBLE_POSTSELECTION};

/// Rejection sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-9;

/// Default pointer spread for observables with unit eigenvalue gaps.
pub const DEFAULT_SIGMA: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Self::new(seed, trial)
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Master seed for the `index`-th independent quantity of a run (SplitMix64
/// finalizer of `seed + (index + 1)·γ`), so that e.g. per-box pointer samples
/// in one run do not share draws.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Neumaier-compensated sum and sum of squares.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and unbiased sample variance.
fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut ss = CompensatedSum::default();
    xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
    (mean, ss.value() / (n - 1) as f64)
}

/// Ideal projective measurement: Born-rule outcome and collapsed state.
pub fn strong_measure<R: Rng + ?Sized>(
    state: &StateVector,
    obs: &Observable,
    rng: &mut R,
) -> Result<(f64, StateVector)> {
    let branches = obs
        .spectrum()
        .iter()
        .map(|(lambda, proj)| Ok((lambda, proj.apply(state)?)))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = branches.iter().map(|(_, v)| v.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        acc += w;
        chosen = Some(i);
        if u < acc {
            break;
        }
    }
    let i = chosen.ok_or(Error::ZeroNorm)?;
    let (lambda, v) = &branches[i];
    Ok((*lambda, v.normalize()?))
}

/// What happened in one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub postselected: bool,
    /// One eigenvalue per schedule step, in schedule order.
    pub outcomes: Vec<f64>,
    /// Pointer positions, for weak-measurement trials.
    pub pointer_readings: Vec<f64>,
}

/// Run the three-stage protocol `trials` times: prepare `pre`, perform each
/// scheduled strong measurement and evolution, then post-select on `post`
/// (always succeeds when `post` is `None`).
pub fn simulate_trials(
    pre: &StateVector,
    post: Option<&StateVector>,
    schedule: &[ScheduleStep],
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    for step in schedule {
        if step.observable.dim() != pre.dim() {
            return Err(Error::DimensionMismatch {
                expected: pre.dim(),
                found: step.observable.dim(),
            });
        }
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::for_trial(seed, t).rng();
            let mut state = pre.clone();
            let mut outcomes = Vec::with_capacity(schedule.len());
            for step in schedule {
                let (value, collapsed) = strong_measure(&state, &step.observable, &mut rng)?;
                outcomes.push(value);
                state = step.evolution.apply(&collapsed)?;
            }
            let postselected = match post {
                Some(post) => {
                    let p = post.inner(&state)?.norm_sqr();
                    rng.random::<f64>() < p
                }
                None => true,
            };
            Ok(TrialRecord {
                postselected,
                outcomes,
                pointer_readings: Vec::new(),
            })
        })
        .collect()
}

/// A sampled proportion with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frequency {
    pub label: Vec<f64>,
    pub count: u64,
    pub n: u64,
    pub frequency: f64,
    pub standard_error: f64,
}

impl Frequency {
    fn new(label: Vec<f64>, count: u64, n: u64) -> Self {
        let f = count as f64 / n as f64;
        Self {
            label,
            count,
            n,
            frequency: f,
            standard_error: (f * (1.0 - f) / n as f64).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: Frequency,
    /// Outcome-tuple frequencies among post-selected trials; `None` when no
    /// trial passed post-selection.
    pub conditional: Option<Vec<Frequency>>,
}

impl ExperimentResult {
    pub fn has_data(&self) -> bool {
        self.conditional.is_some()
    }

    pub fn frequency_of(&self, label: &[f64]) -> Option<&Frequency> {
        self.conditional
            .as_ref()?
            .iter()
            .find(|f| f.label.len() == label.len() && f.label.iter().zip(label).all(|(a, b)| (a - b).abs() <= 1e-9))
    }
}

/// Tally trial records into conditional outcome frequencies.
pub fn summarize(records: &[TrialRecord]) -> ExperimentResult {
    let trials = records.len() as u64;
    let kept: Vec<&TrialRecord> = records.iter().filter(|r| r.postselected).collect();
    let successes = kept.len() as u64;
    let success_rate = Frequency::new(Vec::new(), successes, trials.max(1));
    let conditional = (successes > 0).then(|| {
        let mut counts: Vec<(Vec<f64>, u64)> = Vec::new();
        for r in &kept {
            match counts.iter_mut().find(|(l, _)| l == &r.outcomes) {
                Some((_, c)) => *c += 1,
                None => counts.push((r.outcomes.clone(), 1)),
            }
        }
        counts.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        counts
            .into_iter()
            .map(|(label, c)| Frequency::new(label, c, successes))
            .collect()
    });
    ExperimentResult {
        trials,
        successes,
        success_rate,
        conditional,
    }
}

/// Simulate and summarize the pre/post-selected measurement protocol.
pub fn run_pre_post_experiment(
    pre: &StateVector,
    post: Option<&StateVector>,
    schedule: &[ScheduleStep],
    trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(summarize(&simulate_trials(pre, post, schedule, trials, seed)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianPointer {
    sigma: f64,
    initial_mean: f64,
}

impl GaussianPointer {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_mean(sigma, 0.0)
    }

    pub fn with_mean(sigma: f64, initial_mean: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pointer sigma must be positive, got {sigma}"
            )));
        }
        if !initial_mean.is_finite() {
            return Err(Error::InvalidParameter("pointer mean must be finite".into()));
        }
        Ok(Self { sigma, initial_mean })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn initial_mean(&self) -> f64 {
        self.initial_mean
    }

    /// Initial wavefunction `φ(q)`.
    pub fn wavefunction(&self, q: f64) -> f64 {
        gaussian_amplitude(q - self.initial_mean, self.sigma)
    }
}

fn gaussian_amplitude(x: f64, sigma: f64) -> f64 {
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp()
}

/// Post-selected pointer state `ψ(q) = Σ_i c_i φ(q - a_i)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointerMixture {
    pub coefficients: Vec<Complex64>,
    pub centers: Vec<f64>,
    pub sigma: f64,
}

/// Moments of the normalized pointer density `|ψ(q)|²/‖ψ‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointerMoments {
    pub mean: f64,
    pub variance: f64,
    /// `‖ψ‖²`: probability that post-selection succeeds with the pointer coupled.
    pub postselection_probability: f64,
}

impl PointerMixture {
    /// Amplitude `ψ(q)`.
    pub fn amplitude(&self, q: f64) -> Complex64 {
        self.coefficients
            .iter()
            .zip(&self.centers)
            .map(|(c, &a)| c * gaussian_amplitude(q - a, self.sigma))
            .sum()
    }

    /// Unnormalized density `|ψ(q)|²`.
    pub fn density(&self, q: f64) -> f64 {
        self.amplitude(q).norm_sqr()
    }

    /// Pairwise Gaussian overlaps: `∫ φ(q-a)φ(q-b) dq = exp(-(a-b)²/(8σ²))`,
    /// with the product centred on `(a+b)/2` and variance `σ²`.
    fn pair_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let s2 = self.sigma * self.sigma;
        let n = self.centers.len();
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| {
                let (a, b) = (self.centers[i], self.centers[j]);
                let w =
                    (self.coefficients[i].conj() * self.coefficients[j]).re * (-(a - b) * (a - b) / (8.0 * s2)).exp();
                (w, 0.5 * (a + b))
            })
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.pair_terms().map(|(w, _)| w).sum::<f64>().max(0.0)
    }
}

/// Closed-form post-selected pointer state for a coupling to `obs`.
pub fn weak_pointer_amplitudes(
    tsv: &TwoStateVector,
    obs: &Observable,
    pointer: &GaussianPointer,
) -> Result<PointerMixture> {
    if obs.dim() != tsv.dim() {
        return Err(Error::DimensionMismatch {
            expected: tsv.dim(),
            found: obs.dim(),
        });
    }
    let post = tsv.post().ok_or(Error::MissingPostSelection)?;
    let mut coefficients = Vec::with_capacity(obs.spectrum().len());
    let mut centers = Vec::with_capacity(obs.spectrum().len());
    for (lambda, proj) in obs.spectrum().iter() {
        coefficients.push(proj.sandwich(post, tsv.pre())?);
        centers.push(pointer.initial_mean() + lambda);
    }
    Ok(PointerMixture {
        coefficients,
        centers,
        sigma: pointer.sigma(),
    })
}

/// Exact conditional mean and variance of the pointer position.
pub fn pointer_conditional_mean(mixture: &PointerMixture) -> Result<PointerMoments> {
    let s2 = mixture.sigma * mixture.sigma;
    let (mut norm, mut first, mut second) = (0.0, 0.0, 0.0);
    for (w, m) in mixture.pair_terms() {
        norm += w;
        first += w * m;
        second += w * (s2 + m * m);
    }
    if norm.is_nan() || norm < IMPOSSIBLE_POSTSELECTION {
        return Err(Error::VanishingPointerNorm { norm_sqr: norm });
    }
    let mean = first / norm;
    Ok(PointerMoments {
        mean,
        variance: (second / norm - mean * mean).max(0.0),
        postselection_probability: norm.min(1.0),
    })
}

/// Exact sampler for `|ψ(q)|²/‖ψ‖²`.
///
/// Proposals come from the Gaussian mixture with weights `|c_i|` and
/// components `φ(q-a_i)²`; by Cauchy–Schwarz
/// `|ψ(q)|² ≤ (Σ|c_i|)·Σ|c_i|φ(q-a_i)²`, so accept/reject is exact.
#[derive(Clone, Debug)]
pub struct PointerSampler {
    mixture: PointerMixture,
    weights: Vec<f64>,
    total_weight: f64,
    acceptance_rate: f64,
}

impl PointerSampler {
    pub fn new(mixture: &PointerMixture) -> Result<Self> {
        let norm = mixture.norm_sqr();
        if norm < IMPOSSIBLE_POSTSELECTION {
            return Err(Error::VanishingPointerNorm { norm_sqr: norm });
        }
        let weights: Vec<f64> = mixture.coefficients.iter().map(|c| c.norm()).collect();
        let total_weight: f64 = weights.iter().sum();
        let acceptance_rate = norm / (total_weight * total_weight);
        if acceptance_rate < MIN_ACCEPTANCE_RATE {
            return Err(Error::SamplerAcceptance { rate: acceptance_rate });
        }
        Ok(Self {
            mixture: mixture.clone(),
            weights,
            total_weight,
            acceptance_rate,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance_rate
    }

    fn envelope(&self, q: f64) -> f64 {
        let s = self.mixture.sigma;
        let comp: f64 = self
            .weights
            .iter()
            .zip(&self.mixture.centers)
            .map(|(w, &a)| w * gaussian_amplitude(q - a, s).powi(2))
            .sum();
        self.total_weight * comp
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let mut u = rng.random::<f64>() * self.total_weight;
            let mut k = self.weights.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                if u < *w {
                    k = i;
                    break;
                }
                u -= w;
            }
            let z: f64 = StandardNormal.sample(rng);
            let q = self.mixture.centers[k] + self.mixture.sigma * z;
            let env = self.envelope(q);
            if env > 0.0 && rng.random::<f64>() * env < self.mixture.density(q) {
                return q;
            }
        }
    }
}

/// One draw from the post-selected pointer density.
pub fn sample_pointer<R: Rng + ?Sized>(mixture: &PointerMixture, rng: &mut R) -> Result<f64> {
    Ok(PointerSampler::new(mixture)?.sample(rng))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointerStatistics {
    pub n_trials: u64,
    pub n_particles: u64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    /// From the sample variance.
    pub standard_error: f64,
    pub analytic_mean: f64,
    /// Probability that all particles pass post-selection with pointers coupled.
    pub analytic_postselection_probability: f64,
}

impl PointerStatistics {
    fn from_samples(samples: &[f64], n_particles: u64, analytic_mean: f64, postselection: f64) -> Self {
        let (mean, var) = mean_and_variance(samples);
        Self {
            n_trials: samples.len() as u64,
            n_particles,
            sample_mean: mean,
            sample_variance: var,
            standard_error: (var / samples.len() as f64).sqrt(),
            analytic_mean,
            analytic_postselection_probability: postselection.clamp(0.0, 1.0),
        }
    }

    /// `|sample_mean - analytic_mean|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.sample_mean - self.analytic_mean).abs() / self.standard_error
    }
}

/// Draw `trials` pointer readings for a single particle.
pub fn pointer_samples(mixture: &PointerMixture, trials: u64, seed: u64) -> Result<PointerStatistics> {
    ensemble_samples(mixture, 1, trials, seed)
}

fn ensemble_samples(mixture: &PointerMixture, n: u64, trials: u64, seed: u64) -> Result<PointerStatistics> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("particle count must be at least 1".into()));
    }
    let moments = pointer_conditional_mean(mixture)?;
    let sampler = PointerSampler::new(mixture)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::for_trial(seed, t).rng();
            let mut sum = CompensatedSum::default();
            for _ in 0..n {
                sum.add(sampler.sample(&mut rng));
            }
            sum.value()
        })
        .collect();
    Ok(PointerStatistics::from_samples(
        &samples,
        n,
        moments.mean * n as f64,
        moments.postselection_probability.powi(n as i32),
    ))
}

/// Summed pointer reading over `n` identically pre- and post-selected
/// particles, each weakly coupled to its own pointer.
///
/// Conditional on every post-selection succeeding, the pointers are
/// independent copies of the single-particle conditional distribution, so
/// trials sample that distribution directly instead of rejecting on the
/// (exponentially rare) joint post-selection.
pub fn ensemble_pressure(
    tsv_single: &TwoStateVector,
    box_projector: &Observable,
    n: u64,
    pointer: &GaussianPointer,
    trials: u64,
    seed: u64,
) -> Result<PointerStatistics> {
    let mixture = weak_pointer_amplitudes(tsv_single, box_projector, pointer)?;
    ensemble_samples(&mixture, n, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Operator;
    use crate::tsvf::abl_probabilities;

    fn three_box() -> TwoStateVector {
        let s = 1.0 / 3f64.sqrt();
        TwoStateVector::new(
            StateVector::from_real(&[s, s, s]).unwrap(),
            Some(StateVector::from_real(&[s, s, -s]).unwrap()),
        )
        .unwrap()
    }

    fn box_projector(i: usize) -> Observable {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        Observable::diagonal(&d).unwrap()
    }

    /// Oracle: composite Simpson quadrature of q^k |ψ(q)|² on a wide grid.
    fn quadrature_mean(m: &PointerMixture) -> (f64, f64) {
        let lo = m.centers.iter().cloned().fold(f64::INFINITY, f64::min) - 14.0 * m.sigma;
        let hi = m.centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 14.0 * m.sigma;
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let (mut z, mut q1) = (0.0, 0.0);
        for i in 0..=n {
            let q = lo + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let d = m.density(q);
            z += w * d;
            q1 += w * q * d;
        }
        (q1 / z, z * h / 3.0)
    }

    #[test]
    fn rng_streams_are_reproducible_and_distinct() {
        let a: u64 = RngStream::for_trial(7, 3).rng().random();
        let b: u64 = RngStream::for_trial(7, 3).rng().random();
        let c: u64 = RngStream::for_trial(7, 4).rng().random();
        let d: u64 = RngStream::for_trial(8, 3).rng().random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn strong_measure_on_eigenstate() {
        let state = StateVector::basis(3, 0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..100 {
            let (v, collapsed) = strong_measure(&state, &box_projector(0), &mut rng).unwrap();
            assert_eq!(v, 1.0);
            assert_eq!(collapsed, state);
        }
    }

    #[test]
    fn strong_measure_collapses_onto_box() {
        let tsv = three_box();
        let mut rng = RngStream::new(2, 0).rng();
        let mut seen = false;
        for _ in 0..200 {
            let (v, collapsed) = strong_measure(tsv.pre(), &box_projector(0), &mut rng).unwrap();
            if v == 1.0 {
                assert!(collapsed.approx_eq_up_to_phase(&StateVector::basis(3, 0).unwrap(), 1e-12));
                seen = true;
            }
        }
        assert!(seen);
    }

    #[test]
    fn strong_measure_born_frequencies() {
        let tsv = three_box();
        let x = Observable::diagonal(&[0.0, 1.0, 2.0]).unwrap();
        let n = 1_000_000u64;
        let counts: u64 = (0..n)
            .into_par_iter()
            .map(|t| {
                let mut rng = RngStream::for_trial(11, t).rng();
                (strong_measure(tsv.pre(), &x, &mut rng).unwrap().0 == 0.0) as u64
            })
            .sum();
        let f = counts as f64 / n as f64;
        let se = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        assert!((f - 1.0 / 3.0).abs() < 3.0 * se, "f = {f}");
    }

    #[test]
    fn experiment_box_a_always_found() {
        let tsv = three_box();
        let r = run_pre_post_experiment(
            tsv.pre(),
            tsv.post(),
            &[ScheduleStep::measure("P_A", box_projector(0))],
            100_000,
            5,
        )
        .unwrap();
        let f = r.frequency_of(&[1.0]).unwrap();
        assert_eq!(f.frequency, 1.0);
        assert!(r.frequency_of(&[0.0]).is_none());
        // Oracle: Σ_a |⟨ψ₂|Π_a|ψ₁⟩|² = (1/3)² + 0².
        let weights =
            crate::tsvf::sequence_weights(tsv.pre(), tsv.post(), &[ScheduleStep::measure("P_A", box_projector(0))])
                .unwrap();
        let p: f64 = weights.iter().map(|w| w.1).sum();
        assert!((p - 1.0 / 9.0).abs() < 1e-15);
        let se = (p * (1.0 - p) / 1e5).sqrt();
        assert!((r.success_rate.frequency - p).abs() < 3.0 * se, "{:?}", r.success_rate);
    }

    #[test]
    fn experiment_empty_schedule_rate() {
        let tsv = three_box();
        let r = run_pre_post_experiment(tsv.pre(), tsv.post(), &[], 100_000, 9).unwrap();
        let p: f64 = 1.0 / 9.0;
        let se = (p * (1.0 - p) / 1e5).sqrt();
        assert!((r.success_rate.frequency - p).abs() < 3.0 * se);
    }

    #[test]
    fn experiment_without_successes_is_no_data() {
        let pre = StateVector::basis(2, 0).unwrap();
        let post = StateVector::basis(2, 1).unwrap();
        let r = run_pre_post_experiment(&pre, Some(&post), &[], 100, 1).unwrap();
        assert_eq!(r.successes, 0);
        assert!(!r.has_data());
        assert!(run_pre_post_experiment(&pre, Some(&post), &[], 0, 1).is_err());
    }

    #[test]
    fn experiment_is_deterministic() {
        let tsv = three_box();
        let sched = [ScheduleStep::measure(
            "X",
            Observable::diagonal(&[0.0, 1.0, 2.0]).unwrap(),
        )];
        let a = simulate_trials(tsv.pre(), tsv.post(), &sched, 5000, 7).unwrap();
        let b = simulate_trials(tsv.pre(), tsv.post(), &sched, 5000, 7).unwrap();
        assert_eq!(a, b);
        // Sequential evaluation of a single trial reproduces the parallel run.
        let single = simulate_trials(tsv.pre(), tsv.post(), &sched, 1, 7).unwrap();
        assert_eq!(single[0], a[0]);
    }

    #[test]
    fn pointer_amplitudes_box_c() {
        let tsv = three_box();
        let m = weak_pointer_amplitudes(&tsv, &box_projector(2), &GaussianPointer::new(1.0).unwrap()).unwrap();
        // Eigenvalues sorted ascending: 0 then 1.
        assert_eq!(m.centers, vec![0.0, 1.0]);
        assert!((m.coefficients[0] - Complex64::new(2.0 / 3.0, 0.0)).norm() < 1e-12);
        assert!((m.coefficients[1] - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pointer_amplitudes_identity_and_box_a() {
        let tsv = three_box();
        let p = GaussianPointer::new(1.0).unwrap();
        let id = Observable::new(Operator::identity(3)).unwrap();
        let m = weak_pointer_amplitudes(&tsv, &id, &p).unwrap();
        assert_eq!(m.centers, vec![1.0]);
        assert!((m.coefficients[0] - tsv.overlap().unwrap()).norm() < 1e-12);

        let m = weak_pointer_amplitudes(&tsv, &box_projector(0), &p).unwrap();
        assert!(m.coefficients[0].norm() < 1e-15);
        assert!((m.coefficients[1] - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-12);
        let pre_only = TwoStateVector::pre_selected(tsv.pre().clone()).unwrap();
        assert!(matches!(
            weak_pointer_amplitudes(&pre_only, &id, &p),
            Err(Error::MissingPostSelection)
        ));
    }

    #[test]
    fn conditional_mean_matches_quadrature() {
        let tsv = three_box();
        for sigma in [0.01, 0.3, 1.0, 10.0] {
            for i in 0..3 {
                let m =
                    weak_pointer_amplitudes(&tsv, &box_projector(i), &GaussianPointer::new(sigma).unwrap()).unwrap();
                let (q_mean, q_norm) = quadrature_mean(&m);
                let mom = pointer_conditional_mean(&m).unwrap();
                assert!(
                    (mom.mean - q_mean).abs() < 1e-9,
                    "sigma {sigma} box {i}: {} vs {q_mean}",
                    mom.mean
                );
                assert!((mom.postselection_probability - q_norm).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn conditional_mean_limits_box_c() {
        let tsv = three_box();
        let at = |sigma: f64| {
            let m = weak_pointer_amplitudes(&tsv, &box_projector(2), &GaussianPointer::new(sigma).unwrap()).unwrap();
            pointer_conditional_mean(&m).unwrap().mean
        };
        // Frozen from the quadrature oracle above (and an independent scipy quad run).
        assert!((at(10.0) - -0.992541952488354).abs() < 1e-9);
        assert!((at(10.0) + 1.0).abs() < 0.02);
        let strong = abl_probabilities(&tsv, &box_projector(2)).unwrap().expectation();
        assert!((at(0.01) - strong).abs() < 0.02 * strong);
        assert!((at(0.01) - 0.2).abs() < 1e-9);
        // Box A: pure Gaussian at 1 for any coupling.
        for sigma in [0.01, 1.0, 100.0] {
            let m = weak_pointer_amplitudes(&tsv, &box_projector(0), &GaussianPointer::new(sigma).unwrap()).unwrap();
            assert!((pointer_conditional_mean(&m).unwrap().mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_pointer_norm() {
        let m = PointerMixture {
            coefficients: vec![Complex64::new(0.0, 0.0)],
            centers: vec![0.0],
            sigma: 1.0,
        };
        assert!(matches!(
            pointer_conditional_mean(&m),
            Err(Error::VanishingPointerNorm { .. })
        ));
        let mut rng = RngStream::new(0, 0).rng();
        assert!(matches!(
            sample_pointer(&m, &mut rng),
            Err(Error::VanishingPointerNorm { .. })
        ));
    }

    #[test]
    fn sampled_pointer_single_gaussian() {
        let m = PointerMixture {
            coefficients: vec![Complex64::new(1.0, 0.0)],
            centers: vec![0.0],
            sigma: 2.0,
        };
        let s = pointer_samples(&m, 100_000, 3).unwrap();
        assert!(s.sample_mean.abs() < 4.0 * s.standard_error);
        // Variance of the sample variance for a normal: 2σ⁴/(n-1).
        let tol = 4.0 * (2.0 * 16.0 / 1e5f64).sqrt();
        assert!((s.sample_variance - 4.0).abs() < tol);
    }

    #[test]
    fn sampled_pointer_box_a() {
        let tsv = three_box();
        let sigma = 3.0;
        let m = weak_pointer_amplitudes(&tsv, &box_projector(0), &GaussianPointer::new(sigma).unwrap()).unwrap();
        let s = pointer_samples(&m, 100_000, 4).unwrap();
        assert!((s.sample_mean - 1.0).abs() < 3.0 * sigma / (1e5f64).sqrt());
    }

    #[test]
    fn ensemble_reduces_to_single_particle() {
        let tsv = three_box();
        let p = GaussianPointer::new(10.0).unwrap();
        let e = ensemble_pressure(&tsv, &box_projector(2), 1, &p, 1000, 5).unwrap();
        let m = weak_pointer_amplitudes(&tsv, &box_projector(2), &p).unwrap();
        let s = pointer_samples(&m, 1000, 5).unwrap();
        assert_eq!(e, s);
    }

    #[test]
    fn ensemble_box_a_mean() {
        let tsv = three_box();
        let p = GaussianPointer::new(10.0).unwrap();
        let e = ensemble_pressure(&tsv, &box_projector(0), 10, &p, 20_000, 8).unwrap();
        assert_eq!(e.analytic_mean, 10.0);
        assert!(e.z_score() < 4.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..4).map(|k| derive_seed(7, k)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_ne!(derive_seed(7, 1), derive_seed(8, 0));
        assert_eq!(derive_seed(7, 2), derive_seed(7, 2));
    }

    #[test]
    fn mean_and_variance_basic() {
        let (m, v) = mean_and_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }
}
