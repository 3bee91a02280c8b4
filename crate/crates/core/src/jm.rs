//! Joint measurability: `λ₀`, `λ*`, verdicts, noise robustness and joints.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, HermitianMatrix};
use crate::measurement::{joint_from_s, mix_noise, Effect, JointObservable, NOutcomePOVM};
use crate::sampling;
use crate::sdp::{
    assemble, encode_multi_dichotomic, encode_pair_lambda_star, encode_pair_primal,
    encode_two_nvalued, extract_dual_certificate, hermitian_basis, multi_indices, solve_sdp,
    PairCertificate, SdpOptions, SdpProblem, SdpSolution, CERTIFICATE_TOL,
};

/// Half-width of the band around `λ₀ = 1` (and `λ* = 0`) inside which the
/// solver cannot separate the two verdicts.
pub const COMPATIBILITY_BAND: f64 = 1e-7;
/// Slack allowed when turning a solver `S` into a joint observable.
pub const JOINT_EXTRACTION_TOL: f64 = 1e-6;
/// Allowed mismatch between a certificate objective and `λ₀`.
pub const OBJECTIVE_TOL: f64 = 1e-6;
/// Extra noise added on top of `μ` in the sampled diagnostic.
pub const MU_MARGIN: f64 = 1e-3;
/// Seed of the sampled diagnostic.
pub const MU_SEED: u64 = 0x6d75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible,
    /// `|λ₀ − 1| ≤` [`COMPATIBILITY_BAND`].
    Marginal,
}

impl Verdict {
    pub fn from_lambda0(lambda0: f64) -> Self {
        Self::classify(lambda0, COMPATIBILITY_BAND)
    }

    /// Verdict for `λ₀` with a caller-chosen band half-width.
    pub fn classify(lambda0: f64, band: f64) -> Self {
        if (lambda0 - 1.0).abs() <= band {
            Verdict::Marginal
        } else if lambda0 < 1.0 {
            Verdict::Compatible
        } else {
            Verdict::Incompatible
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Compatible => "compatible",
            Verdict::Incompatible => "incompatible",
            Verdict::Marginal => "marginal",
        }
    }
}

/// Dual certificate for the `N`-outcome pair problem, with the last outcome
/// of each POVM eliminated through normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NValuedCertificate {
    pub rho: HermitianMatrix,
    /// `Y_i`, `i < N − 1`.
    pub y: Vec<HermitianMatrix>,
    /// `Z_j`, `j < N − 1`.
    pub z: Vec<HermitianMatrix>,
    pub value: f64,
}

/// Dual certificate for `M` dichotomic observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCertificate {
    pub rho: HermitianMatrix,
    pub x: Vec<HermitianMatrix>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Pair(PairCertificate),
    NValued(NValuedCertificate),
    Multi(MultiCertificate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JmReport {
    pub lambda0: f64,
    /// Only computed for dichotomic pairs.
    pub lambda_star: Option<f64>,
    pub jointly_measurable: bool,
    pub verdict: Verdict,
    pub mu_robustness: f64,
    /// Present iff `jointly_measurable` (pairs only).
    pub joint: Option<JointObservable>,
    /// Present iff not `jointly_measurable`.
    pub certificate: Option<Certificate>,
    /// Largest duality gap among the solves.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JmOptions {
    pub sdp: SdpOptions,
    pub joint_tol: f64,
}

impl Default for JmOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            joint_tol: JOINT_EXTRACTION_TOL,
        }
    }
}

/// `max(0, 1 − 1/λ₀)`, set to zero inside the compatibility band.
pub fn mu_from_lambda0(lambda0: f64) -> f64 {
    mu_with_band(lambda0, COMPATIBILITY_BAND)
}

/// [`mu_from_lambda0`] with a caller-chosen band.
pub fn mu_with_band(lambda0: f64, band: f64) -> f64 {
    if lambda0 <= 1.0 + band {
        0.0
    } else {
        1.0 - 1.0 / lambda0
    }
}

fn solve_optimal(prob: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    solve_sdp(prob, opts)?.require_optimal()
}

fn same_dim(q: &Effect, p: &Effect) -> Result<()> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            actual: p.dim(),
        });
    }
    Ok(())
}

/// `λ₀` from the primal encoding.
pub fn lambda0(q: &Effect, p: &Effect) -> Result<f64> {
    same_dim(q, p)?;
    Ok(solve_optimal(&encode_pair_primal(q, p)?, &SdpOptions::default())?.primal_value)
}

/// `λ*` from the SDP route.
pub fn lambda_star_sdp(q: &Effect, p: &Effect) -> Result<f64> {
    same_dim(q, p)?;
    Ok(solve_optimal(&encode_pair_lambda_star(q, p)?, &SdpOptions::default())?.primal_value)
}

pub fn analyze_pair(q: &Effect, p: &Effect) -> Result<JmReport> {
    analyze_pair_with(q, p, &JmOptions::default())
}

/// Solves both pair encodings. A compatible pair comes with the joint
/// `{S, Q−S, P−S, 1−Q−P+S}` built from the primal `S`; since
/// `Q+P−1 ≤ Q+P−λ₀ ≤ S` whenever `λ₀ ≤ 1`, no second solve is needed.
pub fn analyze_pair_with(q: &Effect, p: &Effect, opts: &JmOptions) -> Result<JmReport> {
    same_dim(q, p)?;
    let primal_prob = encode_pair_primal(q, p)?;
    let primal = solve_optimal(&primal_prob, &opts.sdp)?;
    let star_prob = encode_pair_lambda_star(q, p)?;
    let star = solve_optimal(&star_prob, &opts.sdp)?;

    let lambda0 = primal.primal_value;
    let jointly_measurable = lambda0 <= 1.0 + COMPATIBILITY_BAND;
    let (joint, certificate) = if jointly_measurable {
        let s = assemble(&primal.x[1..], &hermitian_basis(q.dim()));
        (Some(joint_from_s(q, p, &s, opts.joint_tol)?), None)
    } else {
        let cert = extract_dual_certificate(&star_prob, &star)?;
        (None, Some(Certificate::Pair(cert)))
    };
    Ok(JmReport {
        lambda0,
        lambda_star: Some(star.primal_value),
        jointly_measurable,
        verdict: Verdict::from_lambda0(lambda0),
        mu_robustness: mu_from_lambda0(lambda0),
        joint,
        certificate,
        gap: primal.gap.abs().max(star.gap.abs()),
    })
}

/// `μ = max(0, 1 − 1/λ₀)`.
pub fn robustness_mu(q: &Effect, p: &Effect) -> Result<f64> {
    Ok(mu_from_lambda0(lambda0(q, p)?))
}

/// Outcome of mixing a pair with noise effects at `μ + MU_MARGIN`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuDiagnostic {
    pub mu: f64,
    /// Noise weight actually applied.
    pub weight: f64,
    /// `λ₀` of the mixed pair with `E = ½·1`.
    pub half_identity_lambda0: f64,
    /// `λ₀` of the mixed pair for each sampled `E`.
    pub sampled_lambda0: Vec<f64>,
}

impl MuDiagnostic {
    /// Sampled `E` for which the mixed pair is not compatible within `tol`.
    pub fn failures(&self, tol: f64) -> usize {
        self.sampled_lambda0.iter().filter(|&&l| l > 1.0 + tol).count()
    }

    pub fn half_identity_ok(&self, tol: f64) -> bool {
        self.half_identity_lambda0 <= 1.0 + tol
    }
}

/// Spot-checks the noise robustness claim: mixes `Q` and `P` with the same
/// effect `E` at weight `μ + MU_MARGIN`, for `E = ½·1` and `samples` seeded
/// Wishart-style effects, and records `λ₀` of each mixed pair. Failures are
/// reported, not raised.
pub fn mu_diagnostic(q: &Effect, p: &Effect, samples: usize, seed: u64) -> Result<MuDiagnostic> {
    let mu = robustness_mu(q, p)?;
    let weight = (mu + MU_MARGIN).min(1.0);
    let mixed = |e: &Effect| -> Result<f64> {
        lambda0(&mix_noise(q, e, weight)?, &mix_noise(p, e, weight)?)
    };
    let half_identity_lambda0 = mixed(&Effect::scalar(q.dim(), 0.5)?)?;
    let mut rng = sampling::rng(seed);
    let sampled_lambda0 = (0..samples)
        .map(|_| mixed(&sampling::wishart_effect(&mut rng, q.dim())))
        .collect::<Result<Vec<_>>>()?;
    Ok(MuDiagnostic {
        mu,
        weight,
        half_identity_lambda0,
        sampled_lambda0,
    })
}

fn require_psd(what: &str, h: &HermitianMatrix) -> Result<()> {
    let min = min_eigenvalue(h);
    if min < -CERTIFICATE_TOL {
        return Err(Error::InconsistentSolution(format!(
            "{what} has eigenvalue {min:e}"
        )));
    }
    Ok(())
}

fn check_certificate_value(value: f64, lambda0: f64) -> Result<()> {
    if (value - lambda0).abs() > OBJECTIVE_TOL {
        return Err(Error::InconsistentSolution(format!(
            "certificate objective {value} differs from λ₀ = {lambda0}"
        )));
    }
    Ok(())
}

fn check_density(rho: &HermitianMatrix) -> Result<()> {
    require_psd("rho", rho)?;
    let trace = rho.trace();
    if (trace - 1.0).abs() > CERTIFICATE_TOL {
        return Err(Error::InconsistentSolution(format!("tr[rho] = {trace}")));
    }
    Ok(())
}

fn multi_report(lambda0: f64, gap: f64, certificate: Option<Certificate>) -> JmReport {
    let jointly_measurable = lambda0 <= 1.0 + COMPATIBILITY_BAND;
    JmReport {
        lambda0,
        lambda_star: None,
        jointly_measurable,
        verdict: Verdict::from_lambda0(lambda0),
        mu_robustness: mu_from_lambda0(lambda0),
        joint: None,
        certificate: if jointly_measurable { None } else { certificate },
        gap: gap.abs(),
    }
}

/// Two `N`-outcome POVMs. The dual certificate `(ρ, Y_i, Z_j)` is validated
/// on every solve: `ρ ≤ Y_i + Z_j`, `Y_i, Z_j ≥ 0`, `tr ρ = 1` and its
/// objective `Σ tr[Q_i(ρ−Y_i)] + Σ tr[P_j(ρ−Z_j)]` equals `λ₀`.
pub fn analyze_two_nvalued(qa: &NOutcomePOVM, pb: &NOutcomePOVM) -> Result<JmReport> {
    analyze_two_nvalued_with(qa, pb, &SdpOptions::default())
}

pub fn analyze_two_nvalued_with(qa: &NOutcomePOVM, pb: &NOutcomePOVM, opts: &SdpOptions) -> Result<JmReport> {
    let prob = encode_two_nvalued(qa, pb)?;
    let sol = solve_optimal(&prob, opts)?;
    let k = qa.outcomes() - 1;
    let blocks = sol.dual.blocks();
    let rho = blocks[0].clone();
    let y = blocks[1..=k].to_vec();
    let z = blocks[1 + k..=2 * k].to_vec();
    check_density(&rho)?;
    for (i, yi) in y.iter().enumerate() {
        require_psd(&format!("Y_{i}"), yi)?;
    }
    for (j, zj) in z.iter().enumerate() {
        require_psd(&format!("Z_{j}"), zj)?;
    }
    for (i, yi) in y.iter().enumerate() {
        for (j, zj) in z.iter().enumerate() {
            require_psd(&format!("Y_{i} + Z_{j} - rho"), &(&(yi + zj) - &rho))?;
        }
    }
    let value: f64 = (0..k)
        .map(|i| {
            qa.effects()[i].operator().trace_product(&(&rho - &y[i]))
                + pb.effects()[i].operator().trace_product(&(&rho - &z[i]))
        })
        .sum();
    check_certificate_value(value, sol.primal_value)?;
    Ok(multi_report(
        sol.primal_value,
        sol.gap,
        Some(Certificate::NValued(NValuedCertificate { rho, y, z, value })),
    ))
}

/// `M` dichotomic observables given by their `+` effects. The dual
/// certificate `(ρ, X_α)` is validated on every solve:
/// `(|i|−1)ρ ≤ Σ_{α∈i} X_α` for every outcome string `i` with at least two
/// `+` entries, `X_α ≥ 0`, `tr ρ = 1`, objective `Σ tr[T_α(ρ−X_α)] = λ₀`.
pub fn analyze_multi_dichotomic(t: &[Effect]) -> Result<JmReport> {
    analyze_multi_dichotomic_with(t, &SdpOptions::default())
}

pub fn analyze_multi_dichotomic_with(t: &[Effect], opts: &SdpOptions) -> Result<JmReport> {
    let prob = encode_multi_dichotomic(t)?;
    let sol = solve_optimal(&prob, opts)?;
    let m = t.len();
    let blocks = sol.dual.blocks();
    let rho = blocks[0].clone();
    let x = blocks[1..=m].to_vec();
    check_density(&rho)?;
    for (alpha, xa) in x.iter().enumerate() {
        require_psd(&format!("X_{alpha}"), xa)?;
    }
    for mask in multi_indices(m) {
        let mut sum = rho.scale(-f64::from(mask.count_ones() - 1));
        for (alpha, xa) in x.iter().enumerate() {
            if mask & (1 << alpha) != 0 {
                sum = &sum + xa;
            }
        }
        require_psd(&format!("outcome string {mask:#b}"), &sum)?;
    }
    let value: f64 = t
        .iter()
        .zip(&x)
        .map(|(ta, xa)| ta.operator().trace_product(&(&rho - xa)))
        .sum();
    check_certificate_value(value, sol.primal_value)?;
    Ok(multi_report(
        sol.primal_value,
        sol.gap,
        Some(Certificate::Multi(MultiCertificate { rho, x, value })),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::measurement::marginals_of_joint;
    use std::f64::consts::SQRT_2;

    fn sharp_pair() -> (Effect, Effect) {
        (
            Effect::new(pauli::x().affine(0.5, 0.5)).unwrap(),
            Effect::new(pauli::z().affine(-0.5, 0.5)).unwrap(),
        )
    }

    fn diag(v: &[f64]) -> Effect {
        Effect::new(HermitianMatrix::diag(v)).unwrap()
    }

    #[test]
    fn identical_projectors() {
        let pi = diag(&[1.0, 0.0]);
        let r = analyze_pair(&pi, &pi).unwrap();
        assert!(r.jointly_measurable);
        assert_eq!(r.mu_robustness, 0.0);
        assert_eq!(r.verdict, Verdict::Marginal);
        let j = r.joint.unwrap();
        assert!(j.r_pp.max_abs_diff(pi.operator()) < 1e-6);
        assert!(j.r_pm.as_complex().max_abs() < 1e-6);
        assert!(j.r_mp.as_complex().max_abs() < 1e-6);
        assert!(j.r_mm.max_abs_diff(&HermitianMatrix::diag(&[0.0, 1.0])) < 1e-6);
        let (mq, mp) = marginals_of_joint(&j);
        assert!(mq.operator().max_abs_diff(pi.operator()) <= 1e-12);
        assert!(mp.operator().max_abs_diff(pi.operator()) <= 1e-12);
    }

    #[test]
    fn sharp_pair_is_incompatible() {
        let (q, p) = sharp_pair();
        let r = analyze_pair(&q, &p).unwrap();
        assert!(!r.jointly_measurable);
        assert_eq!(r.verdict, Verdict::Incompatible);
        assert!((r.lambda_star.unwrap() - (SQRT_2 - 1.0) / 2.0).abs() < 1e-6);
        assert!(r.joint.is_none());
        let Some(Certificate::Pair(cert)) = r.certificate else {
            panic!("missing certificate");
        };
        assert!((cert.rho.trace() - 1.0).abs() < 1e-7);
        assert!(r.mu_robustness > 0.0 && r.mu_robustness < 1.0);
    }

    #[test]
    fn zero_effects() {
        let z = Effect::zero(2);
        let r = analyze_pair(&z, &z).unwrap();
        assert!(r.lambda0.abs() < 1e-7);
        assert_eq!(r.mu_robustness, 0.0);
        assert!(r.jointly_measurable);
        assert_eq!(r.verdict, Verdict::Compatible);
    }

    #[test]
    fn report_invariants_on_random_pairs() {
        let mut rng = sampling::rng(11);
        for d in [2, 3] {
            for _ in 0..4 {
                let q = sampling::random_effect(&mut rng, d);
                let p = sampling::random_effect(&mut rng, d);
                let r = analyze_pair(&q, &p).unwrap();
                assert_eq!(r.jointly_measurable, r.joint.is_some());
                assert_eq!(r.jointly_measurable, r.certificate.is_none());
                assert_eq!(r.mu_robustness, mu_from_lambda0(r.lambda0));
                let ls = r.lambda_star.unwrap();
                if ls.abs() > 1e-6 {
                    assert_eq!(r.lambda0 > 1.0, ls > 0.0);
                }
            }
        }
    }

    #[test]
    fn mu_examples() {
        let half = Effect::scalar(2, 0.5).unwrap();
        assert_eq!(robustness_mu(&half, &half).unwrap(), 0.0);
        assert_eq!(robustness_mu(&diag(&[0.2, 0.7]), &diag(&[0.5, 0.1])).unwrap(), 0.0);

        let (q, p) = sharp_pair();
        let diag = mu_diagnostic(&q, &p, 0, MU_SEED).unwrap();
        assert!(diag.mu > 0.0 && diag.mu < 1.0);
        assert!(diag.half_identity_ok(1e-6), "{}", diag.half_identity_lambda0);
        // White noise needs less than μ: visibility 1/√2 already suffices.
        assert!(diag.mu > 1.0 - 1.0 / SQRT_2);
    }

    #[test]
    fn mu_is_tight_for_zero_noise_effect() {
        // λ₀ is positively homogeneous, so E = 0 needs exactly μ.
        let (q, p) = sharp_pair();
        let mu = robustness_mu(&q, &p).unwrap();
        let zero = Effect::zero(2);
        let at = |w: f64| lambda0(&mix_noise(&q, &zero, w).unwrap(), &mix_noise(&p, &zero, w).unwrap()).unwrap();
        assert!(at(mu + MU_MARGIN) <= 1.0 + 1e-6);
        assert!(at(mu - MU_MARGIN) > 1.0);
    }

    #[test]
    fn nvalued_examples() {
        let qa = NOutcomePOVM::new(vec![diag(&[0.2, 0.5]), diag(&[0.3, 0.1]), diag(&[0.5, 0.4])]).unwrap();
        let pb = NOutcomePOVM::new(vec![diag(&[0.6, 0.0]), diag(&[0.1, 0.7]), diag(&[0.3, 0.3])]).unwrap();
        let r = analyze_two_nvalued(&qa, &pb).unwrap();
        assert!(r.jointly_measurable);

        let a = NOutcomePOVM::new(vec![diag(&[1.0, 1.0]), diag(&[0.0, 0.0]), diag(&[0.0, 0.0])]).unwrap();
        let b = NOutcomePOVM::new(vec![diag(&[0.0, 0.0]), diag(&[1.0, 1.0]), diag(&[0.0, 0.0])]).unwrap();
        assert!(analyze_two_nvalued(&a, &b).unwrap().jointly_measurable);

        let (q, p) = sharp_pair();
        let qa = NOutcomePOVM::new(vec![q.clone(), q.complement()]).unwrap();
        let pb = NOutcomePOVM::new(vec![p.clone(), p.complement()]).unwrap();
        let n = analyze_two_nvalued(&qa, &pb).unwrap();
        let pair = analyze_pair(&q, &p).unwrap();
        assert!((n.lambda0 - pair.lambda0).abs() < 1e-7);
        assert!(matches!(n.certificate, Some(Certificate::NValued(_))));
    }

    #[test]
    fn multi_examples() {
        let t = [diag(&[0.2, 0.9]), diag(&[0.6, 0.3]), diag(&[0.5, 0.5])];
        assert!(analyze_multi_dichotomic(&t).unwrap().jointly_measurable);

        let half = Effect::scalar(2, 0.5).unwrap();
        let r = analyze_multi_dichotomic(&[half.clone(), half.clone(), half]).unwrap();
        assert!(r.lambda0 <= 1.0 + 1e-7);

        let triple = [pauli::x(), pauli::y(), pauli::z()].map(|s| Effect::new(s.affine(0.5, 0.5)).unwrap());
        let r = analyze_multi_dichotomic(&triple).unwrap();
        assert!(r.lambda0 > 1.0 + 1e-3);
        assert!(!r.jointly_measurable);
        let Some(Certificate::Multi(cert)) = r.certificate else {
            panic!("missing certificate");
        };
        assert!((cert.value - r.lambda0).abs() < 1e-6);

        let many: Vec<Effect> = (0..13).map(|_| Effect::scalar(2, 0.5).unwrap()).collect();
        assert!(matches!(analyze_multi_dichotomic(&many), Err(Error::SizeLimit(_))));
    }
}
