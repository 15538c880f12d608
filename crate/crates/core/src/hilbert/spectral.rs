//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use num_complex::Complex64;

use super::{Operator, StateVector};
use crate::error::Result;

/// Eigenvalues closer than this (absolute) share one spectral projector.
pub const DEGENERACY_TOLERANCE: f64 = 1e-7;

const MAX_SWEEPS: usize = 100;
const INTEGER_SNAP: f64 = 1e-12;

/// Spectral projectors of a Hermitian operator, one per distinct eigenvalue.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    projectors: Vec<Operator>,
}

impl SpectralDecomposition {
    /// Strictly increasing distinct eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Operator)> {
        self.eigenvalues.iter().copied().zip(&self.projectors)
    }

    /// `Σ λ_i Π_i`.
    pub fn reconstruct(&self) -> Operator {
        let dim = self.projectors[0].dim();
        self.iter()
            .fold(Operator::zeros(dim), |acc, (lambda, p)| &acc + &p.scale_real(lambda))
    }
}

/// Decompose a Hermitian operator into eigenvalue/projector pairs.
pub fn spectral(op: &Operator) -> Result<SpectralDecomposition> {
    op.ensure_hermitian()?;
    let (values, vectors) = jacobi_eigh(op);

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    // Group consecutive eigenvalues whose gap is within the degeneracy tolerance.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if values[i] - values[*g.last().unwrap()] <= DEGENERACY_TOLERANCE => g.push(i),
            _ => groups.push(vec![i]),
        }
    }

    let dim = op.dim();
    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64;
        eigenvalues.push(snap(mean));
        let proj = g.iter().fold(Operator::zeros(dim), |acc, &i| {
            &acc + &Operator::outer(&vectors[i], &vectors[i])
        });
        projectors.push(proj);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
    })
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP {
        r + 0.0
    } else {
        x
    }
}

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix, unsorted.
fn jacobi_eigh(op: &Operator) -> (Vec<f64>, Vec<StateVector>) {
    let n = op.dim();
    let mut a: Vec<Complex64> = op.entries().to_vec();
    let mut v = Operator::identity(n).entries().to_vec();
    let zero = Complex64::new(0.0, 0.0);
    let idx = |r: usize, c: usize| r * n + c;

    // Symmetrize the input so roundoff in the lower triangle cannot leak in.
    for i in 0..n {
        a[idx(i, i)] = Complex64::new(a[idx(i, i)].re, 0.0);
        for j in i + 1..n {
            let m = (a[idx(i, j)] + a[idx(j, i)].conj()) * 0.5;
            a[idx(i, j)] = m;
            a[idx(j, i)] = m.conj();
        }
    }

    let scale = a
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[idx(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[idx(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[idx(p, p)].re;
                let aqq = a[idx(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let (akp, akq) = (a[idx(k, p)], a[idx(k, q)]);
                    a[idx(k, p)] = akp * g_pp + akq * g_qp;
                    a[idx(k, q)] = akp * g_pq + akq * g_qq;
                    let (vkp, vkq) = (v[idx(k, p)], v[idx(k, q)]);
                    v[idx(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[idx(k, q)] = vkp * g_pq + vkq * g_qq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[idx(p, k)], a[idx(q, k)]);
                    a[idx(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[idx(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[idx(p, q)] = zero;
                a[idx(q, p)] = zero;
                a[idx(p, p)] = Complex64::new(a[idx(p, p)].re, 0.0);
                a[idx(q, q)] = Complex64::new(a[idx(q, q)].re, 0.0);
            }
        }
    }

    let values = (0..n).map(|i| a[idx(i, i)].re).collect();
    let vectors = (0..n)
        .map(|col| StateVector::new((0..n).map(|row| v[idx(row, col)]).collect()).expect("finite eigenvector"))
        .collect();
    (values, vectors)
}
