//! Seeded random instances: unitaries, effects, sharp observables, states
//! and classical distributions.
//!
//! Everything draws from [`ChaCha8Rng`], so a seed fixes every instance on
//! every platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eig, ComplexMatrix, HermitianMatrix};
use crate::measurement::{Effect, SharpObservable};
use crate::nosignal::{QuadDistribution, TripleDistribution};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unitary: Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// `U diag(values) U†` for Haar-random `U`.
pub fn rotated_diagonal(rng: &mut impl Rng, values: &[f64]) -> HermitianMatrix {
    let u = random_unitary(rng, values.len());
    HermitianMatrix::diag(values)
        .congruence(&u.adjoint())
        .expect("square")
}

/// Effect with uniformly distributed eigenvalues in a random eigenbasis.
pub fn random_effect(rng: &mut impl Rng, d: usize) -> Effect {
    let values: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    clamp_effect(rotated_diagonal(rng, &values))
}

/// Effect whose eigenvalues `sin²(πu/2)` follow the arcsine law, which
/// favours near-projective effects and hence incompatible pairs.
pub fn arcsine_effect(rng: &mut impl Rng, d: usize) -> Effect {
    let values: Vec<f64> = (0..d)
        .map(|_| (rng.random::<f64>() * std::f64::consts::FRAC_PI_2).sin().powi(2))
        .collect();
    clamp_effect(rotated_diagonal(rng, &values))
}

/// Normalized Wishart-style effect `A†A / λ_max(A†A)`.
pub fn wishart_effect(rng: &mut impl Rng, d: usize) -> Effect {
    let a = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let w = HermitianMatrix::hermitize(a.adjoint().matmul(&a).expect("square"));
    let top = hermitian_eig(&w).max();
    clamp_effect(w.scale(1.0 / top))
}

/// Diagonal effect with uniform entries.
pub fn diagonal_effect(rng: &mut impl Rng, d: usize) -> Effect {
    let values: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    Effect::new(HermitianMatrix::diag(&values)).expect("entries in [0,1]")
}

/// `U diag(±1) U†` with independent random signs.
pub fn random_unit_square(rng: &mut impl Rng, d: usize) -> SharpObservable {
    let signs: Vec<f64> = (0..d)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    SharpObservable::new(rotated_diagonal(rng, &signs)).expect("unit square by construction")
}

/// Random density operator from a normalized Wishart matrix.
pub fn random_density(rng: &mut impl Rng, d: usize) -> HermitianMatrix {
    let a = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let w = HermitianMatrix::hermitize(a.adjoint().matmul(&a).expect("square"));
    let tr = w.trace();
    w.scale(1.0 / tr)
}

/// Uniform point on the probability simplex with `n` vertices.
pub fn simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Triples `q(a₁,a₂)·r_k(b_k|a₁,a₂)` sharing the marginal `q`; `dims` are
/// the cardinalities of `(a₁, a₂, b₁, b₂)`.
pub fn no_signaling_pair(rng: &mut impl Rng, dims: [usize; 4]) -> (TripleDistribution, TripleDistribution) {
    let [n1, n2, m1, m2] = dims;
    let q = simplex(rng, n1 * n2);
    let mut triple = |m: usize| {
        let p: Vec<f64> = q.iter().flat_map(|&qa| simplex(rng, m).into_iter().map(move |r| qa * r)).collect();
        TripleDistribution::new(n1, n2, m, p).expect("normalized by construction")
    };
    let t1 = triple(m1);
    let t2 = triple(m2);
    (t1, t2)
}

/// Uniformly random joint distribution.
pub fn quad_distribution(rng: &mut impl Rng, dims: [usize; 4]) -> QuadDistribution {
    QuadDistribution::new(dims, simplex(rng, dims.iter().product())).expect("normalized by construction")
}

/// Projects rounding noise back into `[0, 1]`.
fn clamp_effect(h: HermitianMatrix) -> Effect {
    let spec = hermitian_eig(&h);
    Effect::new(spec.apply(|l| l.clamp(0.0, 1.0))).expect("clamped spectrum")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(7);
        let u = random_unitary(&mut r, 4);
        let g = u.adjoint().matmul(&u).unwrap();
        assert!(g.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn samplers_are_seeded() {
        let a = random_effect(&mut rng(3), 3);
        let b = random_effect(&mut rng(3), 3);
        assert_eq!(a, b);
        let w = wishart_effect(&mut rng(4), 3);
        assert!((hermitian_eig(w.operator()).max() - 1.0).abs() < 1e-12);
        let rho = random_density(&mut rng(5), 3);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }
}
