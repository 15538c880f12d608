//! Random-instance generators shared by the integration tests. They build
//! operators from explicitly chosen eigenbases, so the spectrum of every
//! generated observable is known without calling the library's eigensolver.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use tsvf_core::hilbert::{Operator, StateVector};
use tsvf_core::tsvf::{Observable, TwoStateVector};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_complex(rng: &mut ChaCha20Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn random_vec(rng: &mut ChaCha20Rng, dim: usize) -> Vec<Complex64> {
    (0..dim).map(|_| gaussian_complex(rng)).collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) {
    let n = dot(v, v).re.sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// Haar-ish random unit vector.
pub fn random_state(rng: &mut ChaCha20Rng, dim: usize) -> StateVector {
    let mut v = random_vec(rng, dim);
    normalize(&mut v);
    StateVector::new(v).unwrap()
}

/// Remove the components of `v` along each (orthonormal) vector in `basis`.
fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for b in basis {
        let c = dot(b, v);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Columns of a random unitary (Gram–Schmidt on Gaussian vectors).
pub fn random_basis(rng: &mut ChaCha20Rng, dim: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = random_vec(rng, dim);
        // Two passes for numerical orthogonality.
        project_out(&mut v, &basis);
        project_out(&mut v, &basis);
        if dot(&v, &v).re.sqrt() > 1e-6 {
            normalize(&mut v);
            basis.push(v);
        }
    }
    basis
}

/// `Σ_k λ_k |e_k⟩⟨e_k|` for the given basis columns.
pub fn operator_from_eigen(basis: &[Vec<Complex64>], eigenvalues: &[f64]) -> Operator {
    let d = basis.len();
    let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
    for (e, &lam) in basis.iter().zip(eigenvalues) {
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] += lam * e[i] * e[j].conj();
            }
        }
    }
    Operator::new(d, entries).unwrap()
}

/// Projector onto the span of the basis columns selected by `mask`.
pub fn projector_from_eigen(basis: &[Vec<Complex64>], mask: &[bool]) -> Operator {
    let values: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    operator_from_eigen(basis, &values)
}

/// Small-integer eigenvalues, degenerate with decent probability.
pub fn random_spectrum(rng: &mut ChaCha20Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-2i32..=2) as f64).collect()
}

/// Random Hermitian observable with a known spectrum.
pub fn random_observable(rng: &mut ChaCha20Rng, dim: usize) -> (Observable, Vec<Vec<Complex64>>, Vec<f64>) {
    let basis = random_basis(rng, dim);
    let values = random_spectrum(rng, dim);
    let obs = Observable::new(operator_from_eigen(&basis, &values)).unwrap();
    (obs, basis, values)
}

/// Arbitrary (not necessarily Hermitian) operator with Gaussian entries.
pub fn random_operator(rng: &mut ChaCha20Rng, dim: usize) -> Operator {
    Operator::new(dim, random_vec(rng, dim * dim)).unwrap()
}

/// Random pre/post pair whose overlap magnitude is at least `min_overlap`.
pub fn random_tsv(rng: &mut ChaCha20Rng, dim: usize, min_overlap: f64) -> TwoStateVector {
    loop {
        let pre = random_state(rng, dim);
        let post = random_state(rng, dim);
        if pre.inner(&post).unwrap().norm() >= min_overlap {
            return TwoStateVector::new(pre, Some(post)).unwrap();
        }
    }
}

/// A pre/post-selected observable whose ABL distribution is certain.
pub struct CertainCase {
    pub tsv: TwoStateVector,
    pub observable: Observable,
    pub certain_value: f64,
}

/// Build a certain case: the post-selected state is chosen orthogonal to
/// `Π_k|ψ₁⟩` for every eigenvalue except the target, so only the target
/// outcome has a non-zero ABL amplitude.
pub fn random_certain_case(rng: &mut ChaCha20Rng, max_dim: usize) -> CertainCase {
    loop {
        let dim = rng.random_range(2..=max_dim);
        let basis = random_basis(rng, dim);
        let values = random_spectrum(rng, dim);
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            continue;
        }
        let target = distinct[rng.random_range(0..distinct.len())];
        let pre = random_state(rng, dim);

        // Orthonormal basis of span{Π_k ψ₁ : λ_k ≠ target}.
        let mut blocked: Vec<Vec<Complex64>> = Vec::new();
        for &lam in distinct.iter().filter(|&&l| l != target) {
            let mask: Vec<bool> = values.iter().map(|&v| v == lam).collect();
            let p = projector_from_eigen(&basis, &mask);
            let mut v = p.apply(&pre).unwrap().amplitudes().to_vec();
            project_out(&mut v, &blocked);
            project_out(&mut v, &blocked);
            if dot(&v, &v).re.sqrt() > 1e-9 {
                normalize(&mut v);
                blocked.push(v);
            }
        }
        let mut post = random_vec(rng, dim);
        project_out(&mut post, &blocked);
        project_out(&mut post, &blocked);
        if dot(&post, &post).re.sqrt() < 1e-6 {
            continue;
        }
        normalize(&mut post);
        let post = StateVector::new(post).unwrap();
        if pre.inner(&post).unwrap().norm() < 1e-2 {
            continue;
        }
        let observable = Observable::new(operator_from_eigen(&basis, &values)).unwrap();
        return CertainCase {
            tsv: TwoStateVector::new(pre, Some(post)).unwrap(),
            observable,
            certain_value: target,
        };
    }
}

/// `|a - b| ≤ k·se`, with a floor on the error so that exact frequencies
/// (zero variance) are compared against exact targets.
pub fn within_se(a: f64, b: f64, se: f64, k: f64) -> bool {
    (a - b).abs() <= k * se.max(1e-12)
}
