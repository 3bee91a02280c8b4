//! Effects, POVMs, sharp observables and joint observables.

use crate::error::{Error, Result};
use crate::linalg::{self, commutator_norm, hermitian_eig, HermitianMatrix};

/// Default tolerance for effect and POVM validation.
pub const EFFECT_TOL: f64 = 1e-9;
/// Default tolerance when validating a candidate `S` from a numerical solver.
pub const JOINT_TOL: f64 = 1e-9;
/// Eigenvalues closer than this fraction of `‖A‖` share a spectral projector.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// An operator `0 ≤ E ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(HermitianMatrix);

impl Effect {
    pub fn new(operator: HermitianMatrix) -> Result<Self> {
        Self::with_tolerance(operator, EFFECT_TOL)
    }

    pub fn with_tolerance(operator: HermitianMatrix, tol: f64) -> Result<Self> {
        let spec = hermitian_eig(&operator);
        if spec.min() < -tol {
            return Err(Error::NotEffect(format!(
                "E >= 0 violated (min eigenvalue {:e})",
                spec.min()
            )));
        }
        if spec.max() > 1.0 + tol {
            return Err(Error::NotEffect(format!(
                "E <= 1 violated (max eigenvalue {:e})",
                spec.max()
            )));
        }
        Ok(Self(operator))
    }

    pub fn zero(dim: usize) -> Self {
        Self(HermitianMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim))
    }

    /// `t·1` for `t ∈ [0, 1]`.
    pub fn scalar(dim: usize, t: f64) -> Result<Self> {
        Self::new(HermitianMatrix::identity(dim).scale(t))
    }

    pub fn operator(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `1 − E`.
    pub fn complement(&self) -> Self {
        Self(self.0.affine(-1.0, 1.0))
    }
}

impl AsRef<HermitianMatrix> for Effect {
    fn as_ref(&self) -> &HermitianMatrix {
        &self.0
    }
}

/// Two-outcome measurement `{E, 1 − E}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicPOVM {
    pub effect: Effect,
}

impl DichotomicPOVM {
    pub fn new(effect: Effect) -> Self {
        Self { effect }
    }

    pub fn plus(&self) -> &Effect {
        &self.effect
    }

    pub fn minus(&self) -> Effect {
        self.effect.complement()
    }
}

/// Measurement with `N ≥ 2` outcomes whose effects sum to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct NOutcomePOVM {
    effects: Vec<Effect>,
}

impl NOutcomePOVM {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        if effects.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a POVM needs at least two outcomes, got {}",
                effects.len()
            )));
        }
        let d = effects[0].dim();
        let mut total = HermitianMatrix::zeros(d);
        for e in &effects {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: e.dim(),
                });
            }
            total = &total + e.operator();
        }
        let defect = total.max_abs_diff(&HermitianMatrix::identity(d));
        if defect > EFFECT_TOL {
            return Err(Error::InvalidInput(format!(
                "POVM effects must sum to the identity (max deviation {defect:e})"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }
}

/// Four-outcome POVM `{R₊₊, R₊₋, R₋₊, R₋₋}`; first index belongs to `Q`, second to `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointObservable {
    pub r_pp: HermitianMatrix,
    pub r_pm: HermitianMatrix,
    pub r_mp: HermitianMatrix,
    pub r_mm: HermitianMatrix,
}

impl JointObservable {
    pub fn new(
        r_pp: HermitianMatrix,
        r_pm: HermitianMatrix,
        r_mp: HermitianMatrix,
        r_mm: HermitianMatrix,
    ) -> Result<Self> {
        let joint = Self {
            r_pp,
            r_pm,
            r_mp,
            r_mm,
        };
        joint.validate(JOINT_TOL)?;
        Ok(joint)
    }

    pub fn elements(&self) -> [&HermitianMatrix; 4] {
        [&self.r_pp, &self.r_pm, &self.r_mp, &self.r_mm]
    }

    fn validate(&self, tol: f64) -> Result<()> {
        let d = self.r_pp.dim();
        let mut total = HermitianMatrix::zeros(d);
        for r in self.elements() {
            total = total.try_add(r)?;
            let min = linalg::min_eigenvalue(r);
            if min < -tol {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
        }
        let defect = total.max_abs_diff(&HermitianMatrix::identity(d));
        if defect > tol {
            return Err(Error::InvalidInput(format!(
                "joint observable does not sum to the identity (max deviation {defect:e})"
            )));
        }
        Ok(())
    }
}

/// A ±1-valued observable, `A² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpObservable(HermitianMatrix);

impl SharpObservable {
    pub const TOL: f64 = 1e-9;

    pub fn new(operator: HermitianMatrix) -> Result<Self> {
        let residual = unit_square_residual(&operator);
        if residual > Self::TOL {
            return Err(Error::NotUnitSquare { residual });
        }
        Ok(Self(operator))
    }

    pub fn operator(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `‖A² − 1‖_max`.
pub fn unit_square_residual(a: &HermitianMatrix) -> f64 {
    let sq = HermitianMatrix::hermitize(a.matmul(a).expect("square"));
    sq.max_abs_diff(&HermitianMatrix::identity(a.dim()))
}

/// Which outcome of the effect is assigned the value `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// Effect outcome ↦ +1, giving `2P − 1`.
    PlusIsOne,
    /// Effect outcome ↦ −1, giving `1 − 2P`.
    MinusIsOne,
}

pub fn effect_to_observable(p: &Effect, convention: SignConvention) -> HermitianMatrix {
    match convention {
        SignConvention::PlusIsOne => p.operator().affine(2.0, -1.0),
        SignConvention::MinusIsOne => p.operator().affine(-2.0, 1.0),
    }
}

/// Builds the joint observable `{S, Q − S, P − S, 1 − Q − P + S}` and checks
/// that every element is positive within `tol`.
pub fn joint_from_s(q: &Effect, p: &Effect, s: &HermitianMatrix, tol: f64) -> Result<JointObservable> {
    let d = q.dim();
    for dim in [p.dim(), s.dim()] {
        if dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: dim,
            });
        }
    }
    let r_pp = s.clone();
    let r_pm = q.operator() - s;
    let r_mp = p.operator() - s;
    let r_mm = &(&HermitianMatrix::identity(d) - q.operator()) - &(p.operator() - s);
    let checks = [
        ("S >= 0", &r_pp),
        ("S <= Q", &r_pm),
        ("S <= P", &r_mp),
        ("Q + P - 1 <= S", &r_mm),
    ];
    for (constraint, r) in checks {
        let min = linalg::min_eigenvalue(r);
        if min < -tol {
            return Err(Error::InfeasibleS {
                constraint,
                min_eigenvalue: min,
            });
        }
    }
    Ok(JointObservable {
        r_pp,
        r_pm,
        r_mp,
        r_mm,
    })
}

/// `(R₊₊ + R₊₋, R₊₊ + R₋₊)`.
pub fn marginals_of_joint(j: &JointObservable) -> (Effect, Effect) {
    (
        Effect(&j.r_pp + &j.r_pm),
        Effect(&j.r_pp + &j.r_mp),
    )
}

/// `(1 − μ)Q + μE`.
pub fn mix_noise(q: &Effect, e: &Effect, mu: f64) -> Result<Effect> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::NoiseOutOfRange(mu));
    }
    if q.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            actual: e.dim(),
        });
    }
    Ok(Effect(&q.operator().scale(1.0 - mu) + &e.operator().scale(mu)))
}

/// Orthogonal projectors onto the eigenspaces of `a`, merging eigenvalues
/// that differ by at most `1e-8·‖A‖`.
pub fn spectral_projectors(a: &HermitianMatrix) -> Vec<HermitianMatrix> {
    let spec = hermitian_eig(a);
    let norm = spec.max().abs().max(spec.min().abs());
    let gap = DEGENERACY_GAP * norm;
    let d = a.dim();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && spec.eigenvalues[end - 1] - spec.eigenvalues[end] <= gap {
            end += 1;
        }
        let mut proj = HermitianMatrix::zeros(d);
        for k in start..end {
            proj = &proj + &HermitianMatrix::outer(&spec.eigenvector(k));
        }
        projectors.push(proj);
        start = end;
    }
    projectors
}

/// Reduces two Hermitian observables to a non-commuting pair of ±1-valued
/// observables `(2Π − 1, 2Σ − 1)`, choosing the spectral projectors `Π` of
/// `a1` and `Σ` of `a2` with the largest commutator norm.
pub fn dichotomize_vn(
    a1: &HermitianMatrix,
    a2: &HermitianMatrix,
    tol: f64,
) -> Result<(SharpObservable, SharpObservable)> {
    if a1.dim() != a2.dim() {
        return Err(Error::DimensionMismatch {
            expected: a1.dim(),
            actual: a2.dim(),
        });
    }
    let pis = spectral_projectors(a1);
    let sigmas = spectral_projectors(a2);
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, pi) in pis.iter().enumerate() {
        for (j, sigma) in sigmas.iter().enumerate() {
            let n = commutator_norm(pi, sigma)?;
            if best.is_none_or(|(b, _, _)| n > b) {
                best = Some((n, i, j));
            }
        }
    }
    match best {
        Some((n, i, j)) if n > tol => {
            let o1 = HermitianMatrix::hermitize(pis[i].affine(2.0, -1.0).into_complex());
            let o2 = HermitianMatrix::hermitize(sigmas[j].affine(2.0, -1.0).into_complex());
            Ok((SharpObservable::new(o1)?, SharpObservable::new(o2)?))
        }
        _ => Err(Error::ObservablesCompatible),
    }
}
