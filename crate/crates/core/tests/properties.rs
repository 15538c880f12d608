mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use tsvf_core::hilbert::spectral;
use tsvf_core::hilbert::{Operator, StateVector, Tensor};
use tsvf_core::measure::{pointer_conditional_mean, run_pre_post_experiment, weak_pointer_amplitudes, GaussianPointer};
use tsvf_core::tsvf::{
    abl_probabilities, sequence_probabilities, weak_value, Observable, ScheduleStep, TwoStateVector,
};

use common::*;

fn random_hermitian(seed: u64, dim: usize) -> Operator {
    let mut rng = rng(seed);
    let m = random_operator(&mut rng, dim);
    (&m + &m.dagger()).scale_real(0.5)
}

/// Eigenvalues with multiplicity, ascending, from the library decomposition.
fn expanded_eigenvalues(op: &Operator) -> Vec<f64> {
    let s = spectral(op).unwrap();
    let mut out = Vec::new();
    for (lambda, p) in s.iter() {
        let mult = p.trace().re.round() as usize;
        out.extend(std::iter::repeat_n(lambda, mult));
    }
    out
}

fn nalgebra_eigenvalues(op: &Operator) -> Vec<f64> {
    let d = op.dim();
    let m = DMatrix::<Complex64>::from_fn(d, d, |i, j| op.get(i, j));
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_matches_nalgebra(seed in any::<u64>(), dim in 1usize..=8) {
        let op = random_hermitian(seed, dim);
        let ours = expanded_eigenvalues(&op);
        let theirs = nalgebra_eigenvalues(&op);
        prop_assert_eq!(ours.len(), dim);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-8, "{:?} vs {:?}", ours, theirs);
        }
        let s = spectral(&op).unwrap();
        prop_assert!(s.reconstruct().max_abs_diff(&op).unwrap() <= 1e-8);
    }

    #[test]
    fn degenerate_spectra_merge_into_projectors(seed in any::<u64>(), dim in 1usize..=7) {
        let mut rng = rng(seed);
        let (obs, _, values) = random_observable(&mut rng, dim);
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assert_eq!(obs.eigenvalues(), distinct.as_slice());
        let projectors = obs.spectrum().projectors();
        let mut total = Operator::zeros(dim);
        for (i, p) in projectors.iter().enumerate() {
            prop_assert!(p.matmul(p).unwrap().max_abs_diff(p).unwrap() <= 1e-8);
            for q in &projectors[i + 1..] {
                prop_assert!(p.matmul(q).unwrap().max_abs_diff(&Operator::zeros(dim)).unwrap() <= 1e-8);
            }
            total = &total + p;
        }
        prop_assert!(total.max_abs_diff(&Operator::identity(dim)).unwrap() <= 1e-8);
        prop_assert!(obs.spectrum().reconstruct().max_abs_diff(obs.operator()).unwrap() <= 1e-8);
    }

    #[test]
    fn tensor_is_associative(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3, dc in 1usize..=3) {
        let mut rng = rng(seed);
        let (a, b, c) = (random_state(&mut rng, da), random_state(&mut rng, db), random_state(&mut rng, dc));
        let left = a.tensor(&b).tensor(&c);
        let right = a.tensor(&b.tensor(&c));
        prop_assert!(left.approx_eq_up_to_phase(&right, 1e-12));
        prop_assert!((left.norm() - 1.0).abs() <= 1e-12);

        let (x, y, z) = (random_operator(&mut rng, da), random_operator(&mut rng, db), random_operator(&mut rng, dc));
        let l = x.tensor(&y).tensor(&z);
        let r = x.tensor(&y.tensor(&z));
        prop_assert!(l.max_abs_diff(&r).unwrap() <= 1e-12);
    }

    #[test]
    fn tensor_mixed_product(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = rng(seed);
        let (x, y) = (random_operator(&mut rng, da), random_operator(&mut rng, db));
        let (u, v) = (random_state(&mut rng, da), random_state(&mut rng, db));
        let lhs = x.tensor(&y).apply(&u.tensor(&v)).unwrap();
        let rhs = x.apply(&u).unwrap().tensor(&y.apply(&v).unwrap());
        for (p, q) in lhs.amplitudes().iter().zip(rhs.amplitudes()) {
            prop_assert!((p - q).norm() <= 1e-10);
        }
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(seed in any::<u64>(), dim in 1usize..=8) {
        let mut rng = rng(seed);
        let (a, b) = (random_state(&mut rng, dim), random_state(&mut rng, dim));
        let ab = a.inner(&b).unwrap();
        let ba = b.inner(&a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-14);
        prop_assert!((a.inner(&a).unwrap() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn weak_value_is_linear(seed in any::<u64>(), dim in 1usize..=6, re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let mut rng = rng(seed);
        let tsv = random_tsv(&mut rng, dim, 0.1);
        let (x, y) = (random_operator(&mut rng, dim), random_operator(&mut rng, dim));
        let k = Complex64::new(re, im);
        let combo = &x.scale(k) + &y;
        let lhs = weak_value(&tsv, &combo).unwrap();
        let rhs = k * weak_value(&tsv, &x).unwrap() + weak_value(&tsv, &y).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        let one = weak_value(&tsv, &Operator::identity(dim)).unwrap();
        prop_assert!((one - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn certainty_fixes_the_weak_value(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let c = random_certain_case(&mut rng, 6);
        let dist = abl_probabilities(&c.tsv, &c.observable).unwrap();
        let certain = dist.certain_outcome().expect("constructed to be certain");
        prop_assert_eq!(certain.label[0], c.certain_value);
        let w = weak_value(&c.tsv, c.observable.operator()).unwrap();
        prop_assert!((w - Complex64::new(c.certain_value, 0.0)).norm() <= 1e-6);
    }

    #[test]
    fn abl_without_postselection_is_born(seed in any::<u64>(), dim in 1usize..=6) {
        let mut rng = rng(seed);
        let pre = random_state(&mut rng, dim);
        let (obs, basis, values) = random_observable(&mut rng, dim);
        let tsv = TwoStateVector::pre_selected(pre.clone()).unwrap();
        let dist = abl_probabilities(&tsv, &obs).unwrap();
        for o in dist.iter() {
            // Born weight from the known eigenbasis.
            let born: f64 = basis
                .iter()
                .zip(&values)
                .filter(|(_, &v)| v == o.label[0])
                .map(|(e, _)| {
                    let amp: Complex64 = e.iter().zip(pre.amplitudes()).map(|(x, y)| x.conj() * y).sum();
                    amp.norm_sqr()
                })
                .sum();
            prop_assert!((o.probability - born).abs() <= 1e-10);
        }
        // Post-selecting on the pre-selected state is not the same thing in
        // general, but the weak value then equals the expectation value.
        let same = TwoStateVector::new(pre.clone(), Some(pre.clone())).unwrap();
        let w = weak_value(&same, obs.operator()).unwrap();
        let expectation = obs.operator().sandwich(&pre, &pre).unwrap();
        prop_assert!((w - expectation).norm() <= 1e-10);
    }

    #[test]
    fn later_measurements_do_not_change_earlier_marginals(seed in any::<u64>(), dim in 2usize..=4) {
        let mut rng = rng(seed);
        let pre = random_state(&mut rng, dim);
        let (a, _, _) = random_observable(&mut rng, dim);
        let (b, _, _) = random_observable(&mut rng, dim);
        let u: Operator = {
            let basis = random_basis(&mut rng, dim);
            let entries = (0..dim * dim).map(|k| basis[k % dim][k / dim]).collect();
            Operator::new(dim, entries).unwrap()
        };
        let single = sequence_probabilities(&pre, None, &[ScheduleStep::measure("a", a.clone())]).unwrap();
        let pair = sequence_probabilities(
            &pre,
            None,
            &[
                ScheduleStep::new("a", a.clone(), u).unwrap(),
                ScheduleStep::measure("b", b),
            ],
        )
        .unwrap();
        let marginal = pair.marginal(0);
        for o in single.iter() {
            prop_assert!((marginal.probability_of(&o.label) - o.probability).abs() <= 1e-10);
        }
    }

    #[test]
    fn single_step_sequence_is_abl(seed in any::<u64>(), dim in 1usize..=5) {
        let mut rng = rng(seed);
        let tsv = random_tsv(&mut rng, dim, 0.2);
        let (obs, _, _) = random_observable(&mut rng, dim);
        let abl = abl_probabilities(&tsv, &obs).unwrap();
        let seq = sequence_probabilities(tsv.pre(), tsv.post(), &[ScheduleStep::measure("a", obs)]).unwrap();
        prop_assert_eq!(abl.len(), seq.len());
        for (x, y) in abl.iter().zip(seq.iter()) {
            prop_assert_eq!(&x.label, &y.label);
            prop_assert!((x.probability - y.probability).abs() <= 1e-12);
        }
        let total: f64 = abl.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pointer_limits(seed in any::<u64>(), dim in 2usize..=4) {
        let mut rng = rng(seed);
        let tsv = random_tsv(&mut rng, dim, 0.3);
        let (obs, _, _) = random_observable(&mut rng, dim);
        let w = weak_value(&tsv, obs.operator()).unwrap();
        let overlap = tsv.overlap().unwrap().norm_sqr();

        // Weak limit: the pointer reads Re A_w, post-selection is unperturbed.
        let wide = weak_pointer_amplitudes(&tsv, &obs, &GaussianPointer::new(1e4).unwrap()).unwrap();
        let m = pointer_conditional_mean(&wide).unwrap();
        prop_assert!((m.mean - w.re).abs() <= 1e-4 * (1.0 + w.norm()).powi(2), "{} vs {}", m.mean, w.re);
        prop_assert!((m.postselection_probability - overlap).abs() <= 1e-6);

        // Strong limit: the pointer reads the ABL expectation.
        let narrow = weak_pointer_amplitudes(&tsv, &obs, &GaussianPointer::new(1e-2).unwrap()).unwrap();
        if let Ok(m) = pointer_conditional_mean(&narrow) {
            if let Ok(abl) = abl_probabilities(&tsv, &obs) {
                prop_assert!((m.mean - abl.expectation()).abs() <= 1e-9, "{} vs {}", m.mean, abl.expectation());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monte_carlo_matches_abl(seed in any::<u64>(), dim in 2usize..=4) {
        let mut rng = rng(seed);
        let tsv = random_tsv(&mut rng, dim, 0.3);
        let (obs, _, _) = random_observable(&mut rng, dim);
        let dist = abl_probabilities(&tsv, &obs).unwrap();
        let r = run_pre_post_experiment(tsv.pre(), tsv.post(), &[ScheduleStep::measure("a", obs)], 20_000, seed).unwrap();
        prop_assume!(r.successes >= 500);
        for o in dist.iter() {
            let f = r.frequency_of(&o.label).map(|f| f.frequency).unwrap_or(0.0);
            let se = (o.probability * (1.0 - o.probability) / r.successes as f64).sqrt();
            prop_assert!(within_se(f, o.probability, se, 5.0), "{:?}: {} vs {} ± {}", o.label, f, o.probability, se);
        }
    }
}

#[test]
fn sequential_projector_table() {
    // |ψ⟩ = (|0⟩+|1⟩+|2⟩)/√3 measured by P_0 then P_1 without post-selection:
    // brute-force weights from explicit projections.
    let pre = StateVector::from_real(&[1.0, 1.0, 1.0]).unwrap().normalize().unwrap();
    let p0 = Observable::diagonal(&[1.0, 0.0, 0.0]).unwrap();
    let p1 = Observable::diagonal(&[0.0, 1.0, 0.0]).unwrap();
    let dist = sequence_probabilities(
        &pre,
        None,
        &[ScheduleStep::measure("p0", p0), ScheduleStep::measure("p1", p1)],
    )
    .unwrap();
    assert!((dist.probability_of(&[1.0, 0.0]) - 1.0 / 3.0).abs() < 1e-12);
    assert!((dist.probability_of(&[0.0, 1.0]) - 1.0 / 3.0).abs() < 1e-12);
    assert!((dist.probability_of(&[0.0, 0.0]) - 1.0 / 3.0).abs() < 1e-12);
    assert!(dist.probability_of(&[1.0, 1.0]).abs() < 1e-12);
}
