//! The Bell-operator side of the duality.
//!
//! With the normalization `𝔹 = ½[A₁⊗(B₁+B₂) + A₂⊗(B₁−B₂)]` the local bound is
//! `|⟨𝔹⟩| ≤ 1` and the quantum (Tsirelson) bound is `√2`. For two effects
//! `Q`, `P` the largest value reachable with `A₁ = 1 − 2P`, `A₂ = 2Q − 1` is
//! `1 + 2λ*`, where `λ* = max_φ μ(φ)` and `μ(φ)` is the top eigenvalue of
//!
//! ```text
//! (Q+P−1) ⊗ [[c², cs], [cs, s²]] − Q ⊗ diag(1, 0) − P ⊗ diag(0, 1),   c = cos φ, s = sin φ.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, commutator_norm, hermitian_eig, operator_norm, pauli, ComplexMatrix, HermitianMatrix,
};
use crate::measurement::{
    effect_to_observable, unit_square_residual, Effect, SharpObservable, SignConvention,
};

/// Tolerance on `A² = 1` for the Bell-square identity.
pub const UNIT_SQUARE_TOL: f64 = 1e-9;
/// Agreement required between the closed-form fixed-`B` value and `‖𝔹‖`.
pub const FIXED_B_TOL: f64 = 1e-8;
/// Agreement required between a witness expectation and `1 + 2λ*`.
pub const WITNESS_TOL: f64 = 1e-7;

/// `½[A₁⊗(B₁+B₂) + A₂⊗(B₁−B₂)]` together with its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct BellOperator {
    matrix: HermitianMatrix,
    pub a1: HermitianMatrix,
    pub a2: HermitianMatrix,
    pub b1: HermitianMatrix,
    pub b2: HermitianMatrix,
}

impl BellOperator {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        self.matrix.expectation(psi)
    }
}

pub fn bell_operator(
    a1: &HermitianMatrix,
    a2: &HermitianMatrix,
    b1: &HermitianMatrix,
    b2: &HermitianMatrix,
) -> Result<BellOperator> {
    for (x, y) in [(a1, a2), (b1, b2)] {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                actual: y.dim(),
            });
        }
    }
    let sum = b1 + b2;
    let diff = b1 - b2;
    let matrix = (&a1.kron(&sum) + &a2.kron(&diff)).scale(0.5);
    Ok(BellOperator {
        matrix,
        a1: a1.clone(),
        a2: a2.clone(),
        b1: b1.clone(),
        b2: b2.clone(),
    })
}

/// Frobenius norm of `𝔹² − 1 + ¼[A₁,A₂]⊗[B₁,B₂]`, which vanishes whenever all
/// four factors square to the identity. The commutator term is traceless with
/// a spectrum symmetric about zero, so its sign does not affect `‖𝔹‖`.
pub fn bell_square_residual(bo: &BellOperator) -> Result<f64> {
    for f in [&bo.a1, &bo.a2, &bo.b1, &bo.b2] {
        let residual = unit_square_residual(f);
        if residual > UNIT_SQUARE_TOL {
            return Err(Error::NotUnitSquare { residual });
        }
    }
    let sq = bo.matrix.matmul(&bo.matrix)?;
    let ka = commutator(&bo.a1, &bo.a2)?;
    let kb = commutator(&bo.b1, &bo.b2)?;
    let rhs = ka.kron(&kb).scale(Complex64::new(-0.25, 0.0));
    let n = sq.rows();
    let diff = sq
        .try_sub(&ComplexMatrix::identity(n))?
        .try_sub(&rhs)?;
    Ok(diff.frobenius_norm())
}

/// `√(1 + ‖[A₁,A₂]‖²/4)`: the largest `|⟨𝔹⟩|` with `B_i = A_i`. Cross-checked
/// against the norm of the assembled Bell operator.
pub fn max_violation_fixed_b(a1: &SharpObservable, a2: &SharpObservable) -> Result<f64> {
    let k = commutator_norm(a1.operator(), a2.operator())?;
    let value = (1.0 + k * k / 4.0).sqrt();
    let bo = bell_operator(a1.operator(), a2.operator(), a1.operator(), a2.operator())?;
    let norm = bo.norm();
    if (norm - value).abs() > FIXED_B_TOL {
        return Err(Error::NumericalMismatch(format!(
            "fixed-B value {value} but ‖𝔹‖ = {norm}"
        )));
    }
    Ok(value)
}

/// `√(1 + ‖[A₁,A₂]‖/2)`: the largest `|⟨𝔹⟩|` over states and partner observables.
pub fn max_violation_vn(a1: &SharpObservable, a2: &SharpObservable) -> Result<f64> {
    let k = commutator_norm(a1.operator(), a2.operator())?;
    Ok((1.0 + k / 2.0).sqrt())
}

/// Qubit partner observables with `‖[B₁,B₂]‖ = 2`, attaining [`max_violation_vn`].
pub fn pauli_partners() -> (SharpObservable, SharpObservable) {
    (
        SharpObservable::new(pauli::x()).expect("σx"),
        SharpObservable::new(pauli::z()).expect("σz"),
    )
}

fn rank_one_projector(phi: f64) -> HermitianMatrix {
    let (s, c) = phi.sin_cos();
    HermitianMatrix::from_real_rows(&[vec![c * c, c * s], vec![c * s, s * s]]).expect("2x2")
}

/// The `2d × 2d` matrix whose top eigenvalue is `μ(φ)`.
pub fn scan_matrix(q: &Effect, p: &Effect, phi: f64) -> Result<HermitianMatrix> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            actual: p.dim(),
        });
    }
    let shifted = (q.operator() + p.operator()).affine(1.0, -1.0);
    let m = &(&shifted.kron(&rank_one_projector(phi)) - &q.operator().kron(&HermitianMatrix::diag(&[1.0, 0.0])))
        - &p.operator().kron(&HermitianMatrix::diag(&[0.0, 1.0]));
    Ok(m)
}

/// `μ(φ)` for `φ ∈ [0, π]`.
pub fn mu_of_phi(q: &Effect, p: &Effect, phi: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::AngleOutOfRange(phi));
    }
    Ok(hermitian_eig(&scan_matrix(q, p, phi)?).max())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Number of grid intervals on `[0, π]`.
    pub grid: usize,
    /// Golden-section bracket width at which refinement stops.
    pub refine_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid: 2048,
            refine_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub lambda_star: f64,
    pub phi_star: f64,
    /// Grid samples `(φ, μ(φ))`.
    pub profile: Vec<(f64, f64)>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `λ* = max_{φ∈[0,π]} μ(φ)`: grid evaluation followed by golden-section
/// refinement of every grid-local maximum that can still hold the global one.
pub fn lambda_star_scan(q: &Effect, p: &Effect, opts: &ScanOptions) -> Result<ScanResult> {
    if opts.grid < 2 {
        return Err(Error::InvalidInput(format!("scan grid must have at least 2 intervals, got {}", opts.grid)));
    }
    let shifted = (q.operator() + p.operator()).affine(1.0, -1.0);
    let step = PI / opts.grid as f64;
    let mu = |phi: f64| -> f64 {
        hermitian_eig(&scan_matrix(q, p, phi).expect("dimensions checked")).max()
    };
    scan_matrix(q, p, 0.0)?;

    let profile: Vec<(f64, f64)> = (0..=opts.grid)
        .map(|k| {
            let phi = k as f64 * step;
            (phi, mu(phi))
        })
        .collect();
    let (mut phi_star, mut best) = profile
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |acc, (phi, v)| if v > acc.1 { (phi, v) } else { acc });

    // |dμ/dφ| ≤ ‖Q+P−1‖, so no bracket whose grid value trails the best by
    // more than that slope times the spacing can contain the maximum.
    let slack = 2.0 * operator_norm(&shifted) * step + 1e-12;
    let grid_best = best;
    for k in 0..=opts.grid {
        let v = profile[k].1;
        let left_ok = k == 0 || v > profile[k - 1].1;
        let right_ok = k == opts.grid || v >= profile[k + 1].1;
        if !(left_ok && right_ok) || v < grid_best - slack {
            continue;
        }
        let lo = if k == 0 { 0.0 } else { profile[k - 1].0 };
        let hi = if k == opts.grid { PI } else { profile[k + 1].0 };
        let (phi, val) = golden_section_max(mu, lo, hi, opts.refine_tol);
        if val > best {
            best = val;
            phi_star = phi;
        }
    }
    Ok(ScanResult {
        lambda_star: best,
        phi_star,
        profile,
    })
}

/// `sup |⟨ψ|𝔹|ψ⟩| = 1 + 2λ*`; exceeds 1 iff `Q` and `P` are incompatible.
pub fn max_chsh(q: &Effect, p: &Effect) -> Result<f64> {
    max_chsh_with(q, p, &ScanOptions::default())
}

pub fn max_chsh_with(q: &Effect, p: &Effect, opts: &ScanOptions) -> Result<f64> {
    Ok(1.0 + 2.0 * lambda_star_scan(q, p, opts)?.lambda_star)
}

/// Explicit optimal CHSH configuration on `ℂ^d ⊗ ℂ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshWitness {
    /// Unit vector, first tensor factor is Alice's `ℂ^d`.
    pub psi: Vec<Complex64>,
    /// `1 − 2P`.
    pub a1: HermitianMatrix,
    /// `2Q − 1`.
    pub a2: HermitianMatrix,
    /// `1 − 2 diag(1, 0)`.
    pub b1: HermitianMatrix,
    /// `1 − 2 [[c², cs], [cs, s²]]`.
    pub b2: HermitianMatrix,
    pub phi_star: f64,
    pub lambda_star: f64,
    /// `⟨ψ|𝔹|ψ⟩`.
    pub value: f64,
}

impl ChshWitness {
    pub fn bell_operator(&self) -> BellOperator {
        bell_operator(&self.a1, &self.a2, &self.b1, &self.b2).expect("consistent witness dimensions")
    }

    /// Checks unit norm of `ψ`, `B_i² = 1` and that `value` is the expectation.
    pub fn verify(&self) -> Result<()> {
        let norm = self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NumericalMismatch(format!("‖ψ‖ = {norm}")));
        }
        for b in [&self.b1, &self.b2] {
            let residual = unit_square_residual(b);
            if residual > UNIT_SQUARE_TOL {
                return Err(Error::NotUnitSquare { residual });
            }
        }
        let value = self.bell_operator().expectation(&self.psi);
        if (value - self.value).abs() > 1e-9 {
            return Err(Error::NumericalMismatch(format!(
                "stored value {} but ⟨ψ|𝔹|ψ⟩ = {value}",
                self.value
            )));
        }
        Ok(())
    }
}

pub fn extract_witness(q: &Effect, p: &Effect) -> Result<ChshWitness> {
    extract_witness_with(q, p, &ScanOptions::default())
}

/// Builds `ψ`, `B₁`, `B₂` at the maximizing angle: `ψ` is the top eigenvector
/// of the scan matrix, so `⟨ψ|𝔹|ψ⟩ = 1 + 2μ(φ*)`.
pub fn extract_witness_with(q: &Effect, p: &Effect, opts: &ScanOptions) -> Result<ChshWitness> {
    let scan = lambda_star_scan(q, p, opts)?;
    let spec = hermitian_eig(&scan_matrix(q, p, scan.phi_star)?);
    let psi = spec.eigenvector(0);
    let a1 = effect_to_observable(p, SignConvention::MinusIsOne);
    let a2 = effect_to_observable(q, SignConvention::PlusIsOne);
    let b1 = HermitianMatrix::diag(&[1.0, 0.0]).affine(-2.0, 1.0);
    let b2 = rank_one_projector(scan.phi_star).affine(-2.0, 1.0);
    let value = bell_operator(&a1, &a2, &b1, &b2)?.expectation(&psi);
    let target = 1.0 + 2.0 * scan.lambda_star;
    if (value - target).abs() > WITNESS_TOL {
        return Err(Error::NumericalMismatch(format!(
            "witness value {value} differs from 1 + 2λ* = {target}"
        )));
    }
    Ok(ChshWitness {
        psi,
        a1,
        a2,
        b1,
        b2,
        phi_star: scan.phi_star,
        lambda_star: scan.lambda_star,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn sharp_pair() -> (Effect, Effect) {
        (
            Effect::new(pauli::x().affine(0.5, 0.5)).unwrap(),
            Effect::new(pauli::z().affine(-0.5, 0.5)).unwrap(),
        )
    }

    fn noisy_pair(eta: f64) -> (Effect, Effect) {
        (
            Effect::new(pauli::x().affine(0.5 * eta, 0.5)).unwrap(),
            Effect::new(pauli::z().affine(-0.5 * eta, 0.5)).unwrap(),
        )
    }

    fn sharp(h: HermitianMatrix) -> SharpObservable {
        SharpObservable::new(h).unwrap()
    }

    #[test]
    fn bell_operator_reductions() {
        let a = pauli::x();
        let (b1, b2) = (pauli::z(), pauli::y());
        let bo = bell_operator(&a, &a, &b1, &b2).unwrap();
        assert!(bo.matrix().max_abs_diff(&a.kron(&b1)) < 1e-15);
        let bo = bell_operator(&pauli::z(), &pauli::x(), &b1, &b1).unwrap();
        assert!(bo.matrix().max_abs_diff(&pauli::z().kron(&b1)) < 1e-15);
    }

    #[test]
    fn tsirelson_configuration() {
        let b1 = (&pauli::z() + &pauli::x()).scale(FRAC_1_SQRT_2);
        let b2 = (&pauli::z() - &pauli::x()).scale(FRAC_1_SQRT_2);
        let bo = bell_operator(&pauli::z(), &pauli::x(), &b1, &b2).unwrap();
        assert!((bo.norm() - SQRT_2).abs() < 1e-12);
        assert!(bell_square_residual(&bo).unwrap() <= 1e-12);
    }

    #[test]
    fn bell_square_commuting_case() {
        let z = pauli::z();
        let bo = bell_operator(&z, &z, &z, &z).unwrap();
        assert!(bell_square_residual(&bo).unwrap() <= 1e-12);
        let sq = HermitianMatrix::hermitize(bo.matrix().matmul(bo.matrix()).unwrap());
        assert!(sq.max_abs_diff(&HermitianMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn bell_square_rejects_non_unit_square() {
        let bo = bell_operator(&pauli::z().scale(0.5), &pauli::x(), &pauli::z(), &pauli::x()).unwrap();
        assert!(matches!(bell_square_residual(&bo), Err(Error::NotUnitSquare { .. })));
    }

    #[test]
    fn von_neumann_values() {
        let z = sharp(pauli::z());
        let x = sharp(pauli::x());
        assert!((max_violation_fixed_b(&z, &z).unwrap() - 1.0).abs() < 1e-12);
        assert!((max_violation_vn(&z, &z).unwrap() - 1.0).abs() < 1e-12);
        assert!((max_violation_fixed_b(&x, &z).unwrap() - SQRT_2).abs() < 1e-12);
        assert!((max_violation_vn(&x, &z).unwrap() - SQRT_2).abs() < 1e-12);

        let theta = PI / 6.0;
        let rotated = sharp(&pauli::z().scale(theta.cos()) + &pauli::x().scale(theta.sin()));
        assert!((max_violation_fixed_b(&z, &rotated).unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
        assert!((max_violation_vn(&z, &rotated).unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mu_at_zero_is_block_diagonal() {
        let mut r = crate::sampling::rng(1);
        for _ in 0..10 {
            let q = crate::sampling::random_effect(&mut r, 3);
            let p = crate::sampling::random_effect(&mut r, 3);
            let want = f64::max(
                hermitian_eig(&p.operator().affine(1.0, -1.0)).max(),
                hermitian_eig(&-p.operator()).max(),
            );
            let got = mu_of_phi(&q, &p, 0.0).unwrap();
            assert!((got - want).abs() < 1e-12);
            assert!(got <= 1e-12);
        }
    }

    #[test]
    fn mu_of_half_identity_is_constant() {
        let half = Effect::scalar(2, 0.5).unwrap();
        for phi in [0.0, 0.3, 1.7, PI] {
            assert!((mu_of_phi(&half, &half, phi).unwrap() + 0.5).abs() < 1e-15);
        }
        assert!(matches!(mu_of_phi(&half, &half, 4.0), Err(Error::AngleOutOfRange(_))));
    }

    #[test]
    fn mu_below_lambda_star_for_sharp_pair() {
        let (q, p) = sharp_pair();
        let oracle = (SQRT_2 - 1.0) / 2.0;
        let v = mu_of_phi(&q, &p, 3.0 * PI / 8.0).unwrap();
        assert!(v <= oracle + 1e-12);
        let scan = lambda_star_scan(&q, &p, &ScanOptions::default()).unwrap();
        assert!((mu_of_phi(&q, &p, scan.phi_star).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn scan_examples() {
        let half = Effect::scalar(2, 0.5).unwrap();
        let s = lambda_star_scan(&half, &half, &ScanOptions::default()).unwrap();
        assert!((s.lambda_star + 0.5).abs() < 1e-15);

        let (q, p) = sharp_pair();
        let s = lambda_star_scan(&q, &p, &ScanOptions::default()).unwrap();
        assert!((s.lambda_star - (SQRT_2 - 1.0) / 2.0).abs() < 1e-8);
        assert!(s.profile.iter().all(|&(_, v)| s.lambda_star >= v - 1e-12));

        let (q, p) = noisy_pair(0.9);
        let s = lambda_star_scan(&q, &p, &ScanOptions::default()).unwrap();
        assert!((s.lambda_star - (0.9 * SQRT_2 - 1.0) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn max_chsh_examples() {
        let (q, p) = sharp_pair();
        assert!((max_chsh(&q, &p).unwrap() - SQRT_2).abs() < 1e-7);
        let (q, p) = noisy_pair(FRAC_1_SQRT_2);
        assert!((max_chsh(&q, &p).unwrap() - 1.0).abs() < 1e-4);
        let mut r = crate::sampling::rng(2);
        for _ in 0..5 {
            let q = crate::sampling::random_effect(&mut r, 3);
            assert!(max_chsh(&q, &q).unwrap() <= 1.0 + 1e-7);
        }
    }

    #[test]
    fn witness_examples() {
        let (q, p) = sharp_pair();
        let w = extract_witness(&q, &p).unwrap();
        assert!((w.value - SQRT_2).abs() < 1e-6);
        w.verify().unwrap();

        let half = Effect::scalar(2, 0.5).unwrap();
        let w = extract_witness(&half, &half).unwrap();
        assert!(w.value.abs() < 1e-15);
        assert!(w.bell_operator().matrix().as_complex().max_abs() == 0.0);

        let qd = Effect::new(HermitianMatrix::diag(&[0.9, 0.2, 0.4])).unwrap();
        let pd = Effect::new(HermitianMatrix::diag(&[0.1, 0.6, 0.7])).unwrap();
        let w = extract_witness(&qd, &pd).unwrap();
        assert!(w.value <= 1.0 + 1e-7);
        w.verify().unwrap();
    }
}
