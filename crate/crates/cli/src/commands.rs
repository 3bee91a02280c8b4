//! Subcommand implementations. Each returns an [`Outcome`]; all failures are
//! errors for `main` to turn into exit code 1.

use std::fmt::Write;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use incompat_core::chsh::{self, ChshWitness, ScanOptions};
use incompat_core::jm::{self, JmOptions, Verdict, COMPATIBILITY_BAND};
use incompat_core::linalg::{commutator_norm, ComplexMatrix, HermitianMatrix};
use incompat_core::measurement::{dichotomize_vn, NOutcomePOVM, SharpObservable};
use incompat_core::nosignal::{chsh_value_classical, join_distributions, SIGNALING_TOL};
use incompat_core::sdp::SdpOptions;
use incompat_core::Error;
use num_complex::Complex64;

use crate::matrix_file::{DistributionFile, MatrixFile};
use crate::report::{Exit, Outcome, Report};

/// Default commutator threshold for `vn`.
pub const VN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol_psd: f64,
    pub tol_gap: f64,
    pub grid: usize,
    /// Command-specific decision tolerance; `None` picks the default.
    pub tol: Option<f64>,
}

impl Settings {
    fn sdp(&self) -> SdpOptions {
        SdpOptions {
            gap_tol: self.tol_gap,
            ..SdpOptions::default()
        }
    }

    fn band(&self) -> f64 {
        self.tol.unwrap_or(COMPATIBILITY_BAND)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MultiMode {
    Nvalued,
    Dichotomic,
}

fn format_matrix(out: &mut String, name: &str, m: &HermitianMatrix) {
    writeln!(out, "{name}:").unwrap();
    let c = m.as_complex();
    for i in 0..c.rows() {
        let row: Vec<String> = (0..c.cols())
            .map(|j| {
                let z = c[(i, j)];
                format!("{:+.6}{:+.6}i", z.re, z.im)
            })
            .collect();
        writeln!(out, "  {}", row.join("  ")).unwrap();
    }
}

pub fn check_pair(path: &Path, s: &Settings, samples: usize, seed: u64) -> Result<Outcome> {
    let file = MatrixFile::load(path)?;
    let q = file.effect("Q", s.tol_psd)?;
    let p = file.effect("P", s.tol_psd)?;
    let opts = JmOptions {
        sdp: s.sdp(),
        ..JmOptions::default()
    };
    let r = jm::analyze_pair_with(&q, &p, &opts)?;
    let verdict = Verdict::classify(r.lambda0, s.band());
    let lambda_star = r.lambda_star.expect("pair analysis computes lambda*");

    let mut details = String::new();
    if r.joint.is_some() {
        writeln!(details, "joint observable: extracted, marginals reproduce Q and P").unwrap();
    }
    if r.certificate.is_some() {
        writeln!(details, "dual certificate: validated").unwrap();
    }
    if samples > 0 {
        let diag = jm::mu_diagnostic(&q, &p, samples, seed)?;
        writeln!(
            details,
            "mu diagnostic (seed {seed}): white noise lambda0 {:.9}, {} of {samples} sampled effects exceed 1 + 1e-6",
            diag.half_identity_lambda0,
            diag.failures(1e-6)
        )
        .unwrap();
    }
    Ok(Outcome {
        report: Report {
            lambda0: Some(r.lambda0),
            lambda_star: Some(lambda_star),
            mu: Some(jm::mu_with_band(r.lambda0, s.band())),
            verdict: Some(verdict.as_str().into()),
            value: Some(1.0 + 2.0 * lambda_star),
            gap: Some(r.gap),
            ..Report::default()
        },
        details,
        warning: None,
        exit: Exit::from_verdict(verdict),
    })
}

/// Witness as one matrix file on `ℂ^d ⊗ ℂ²`: Alice's observables enter as
/// `A ⊗ 1`, Bob's as `1 ⊗ B`, so all matrices share one dimension.
pub fn witness_file(w: &ChshWitness) -> MatrixFile {
    let d = w.a1.dim();
    let id_a = ComplexMatrix::identity(d);
    let id_b = ComplexMatrix::identity(2);
    let mut file = MatrixFile::new(2 * d);
    file.insert_matrix("A1", &w.a1.as_complex().kron(&id_b));
    file.insert_matrix("A2", &w.a2.as_complex().kron(&id_b));
    file.insert_matrix("B1", &id_a.kron(w.b1.as_complex()));
    file.insert_matrix("B2", &id_a.kron(w.b2.as_complex()));
    file.insert_vector("psi", &w.psi);
    for (key, v) in [
        ("alice_dim", serde_json::json!(d)),
        ("bob_dim", serde_json::json!(2)),
        ("phi_star", serde_json::json!(w.phi_star)),
        ("lambda_star", serde_json::json!(w.lambda_star)),
        ("value", serde_json::json!(w.value)),
    ] {
        file.metadata.insert(key.into(), v);
    }
    file
}

/// `⟨ψ|½[A₁(B₁+B₂) + A₂(B₁−B₂)]|ψ⟩` recomputed from a witness file alone.
pub fn witness_value(file: &MatrixFile) -> Result<f64> {
    let a1 = file.hermitian("A1")?;
    let a2 = file.hermitian("A2")?;
    let b1 = file.hermitian("B1")?;
    let b2 = file.hermitian("B2")?;
    for (name, m) in [("A1", &a1), ("A2", &a2), ("B1", &b1), ("B2", &b2)] {
        SharpObservable::new(m.clone()).with_context(|| format!("witness matrix `{name}`"))?;
    }
    let psi = file.vector("psi")?;
    let bell = a1
        .matmul(&(&b1 + &b2))?
        .try_add(&a2.matmul(&(&b1 - &b2))?)?
        .scale(Complex64::new(0.5, 0.0));
    Ok(HermitianMatrix::hermitize(bell).expectation(&psi))
}

pub fn chsh(path: &Path, s: &Settings, witness: Option<&Path>) -> Result<Outcome> {
    let file = MatrixFile::load(path)?;
    let q = file.effect("Q", s.tol_psd)?;
    let p = file.effect("P", s.tol_psd)?;
    let opts = ScanOptions {
        grid: s.grid,
        ..ScanOptions::default()
    };
    let w = chsh::extract_witness_with(&q, &p, &opts)?;
    let verdict = Verdict::classify(1.0 + w.lambda_star, s.band());

    let mut details = String::new();
    if let Some(out) = witness {
        let doc = witness_file(&w);
        std::fs::write(out, doc.to_json()).with_context(|| format!("writing {}", out.display()))?;
        let reread = MatrixFile::load(out)?;
        let value = witness_value(&reread)?;
        ensure!(
            (value - w.value).abs() <= 1e-7,
            "witness re-verification gave {value}, expected {}",
            w.value
        );
        writeln!(details, "witness: {} (re-verified value {value})", out.display()).unwrap();
    }
    Ok(Outcome {
        report: Report {
            lambda_star: Some(w.lambda_star),
            verdict: Some(verdict.as_str().into()),
            phi_star: Some(w.phi_star),
            value: Some(1.0 + 2.0 * w.lambda_star),
            ..Report::default()
        },
        details,
        warning: None,
        exit: Exit::from_verdict(verdict),
    })
}

pub fn vn(path: &Path, s: &Settings) -> Result<Outcome> {
    let file = MatrixFile::load(path)?;
    let a1 = file.hermitian("A1")?;
    let a2 = file.hermitian("A2")?;
    let (o1, o2) = match dichotomize_vn(&a1, &a2, s.tol.unwrap_or(VN_TOL)) {
        Ok(pair) => pair,
        Err(Error::ObservablesCompatible) => {
            return Ok(Outcome {
                report: Report {
                    verdict: Some(Verdict::Compatible.as_str().into()),
                    ..Report::default()
                },
                details: String::new(),
                warning: Some("observables commute: no CHSH violation is possible".into()),
                exit: Exit::Flagged,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let k = commutator_norm(o1.operator(), o2.operator())?;
    let fixed = chsh::max_violation_fixed_b(&o1, &o2)?;
    let optimal = chsh::max_violation_vn(&o1, &o2)?;

    let mut details = String::new();
    format_matrix(&mut details, "O1", o1.operator());
    format_matrix(&mut details, "O2", o2.operator());
    writeln!(details, "commutator_norm: {k}").unwrap();
    writeln!(details, "fixed_b_value: {fixed}").unwrap();
    writeln!(details, "optimal_value: {optimal}").unwrap();
    Ok(Outcome {
        report: Report {
            lambda_star: Some((optimal - 1.0) / 2.0),
            verdict: Some(Verdict::Incompatible.as_str().into()),
            value: Some(optimal),
            ..Report::default()
        },
        details,
        warning: None,
        exit: Exit::Clear,
    })
}

pub fn multi(path: &Path, s: &Settings, mode: MultiMode) -> Result<Outcome> {
    let file = MatrixFile::load(path)?;
    let effects = |prefix: &str| -> Result<Vec<_>> {
        let names = file.numbered(prefix);
        ensure!(!names.is_empty(), "no matrices named {prefix}1, {prefix}2, ...");
        names.iter().map(|n| file.effect(n, s.tol_psd)).collect()
    };
    let r = match mode {
        MultiMode::Nvalued => {
            let qa = NOutcomePOVM::new(effects("Q")?).context("POVM Q")?;
            let pb = NOutcomePOVM::new(effects("P")?).context("POVM P")?;
            jm::analyze_two_nvalued_with(&qa, &pb, &s.sdp())?
        }
        MultiMode::Dichotomic => jm::analyze_multi_dichotomic_with(&effects("T")?, &s.sdp())?,
    };
    let verdict = Verdict::classify(r.lambda0, s.band());
    let details = if r.certificate.is_some() {
        "dual certificate: validated\n".to_string()
    } else {
        String::new()
    };
    Ok(Outcome {
        report: Report {
            lambda0: Some(r.lambda0),
            mu: Some(jm::mu_with_band(r.lambda0, s.band())),
            verdict: Some(verdict.as_str().into()),
            gap: Some(r.gap),
            ..Report::default()
        },
        details,
        warning: None,
        exit: Exit::from_verdict(verdict),
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn nosignal(path: &Path, s: &Settings) -> Result<Outcome> {
    let file = DistributionFile::load(path)?;
    let (t1, t2) = file.triples()?;
    let quad = match join_distributions(&t1, &t2, s.tol.unwrap_or(SIGNALING_TOL)) {
        Ok(quad) => quad,
        Err(Error::SignalingDetected { max_deviation }) => {
            return Ok(Outcome {
                report: Report {
                    verdict: Some("signaling".into()),
                    ..Report::default()
                },
                details: String::new(),
                warning: Some(format!("signaling detected: a-marginals differ by up to {max_deviation:e}")),
                exit: Exit::Flagged,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let value = match chsh_value_classical(&quad) {
        Ok(v) => Some(v),
        Err(Error::NonBinaryOutcomes(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let [n1, n2, m1, m2] = quad.dims();
    let mut details = String::new();
    for a1 in 0..n1 {
        for a2 in 0..n2 {
            for b1 in 0..m1 {
                for b2 in 0..m2 {
                    writeln!(details, "p({a1},{a2},{b1},{b2}) = {}", quad.get(a1, a2, b1, b2)).unwrap();
                }
            }
        }
    }
    writeln!(
        details,
        "marginal residuals: b1 {:e}, b2 {:e}, a {:e}",
        max_diff(quad.marginal_b1().probabilities(), t1.probabilities()),
        max_diff(quad.marginal_b2().probabilities(), t2.probabilities()),
        max_diff(&quad.marginal_a(), &t1.marginal_a()),
    )
    .unwrap();
    if value.is_none() {
        writeln!(details, "classical CHSH: not defined for non-binary outcomes").unwrap();
    }
    Ok(Outcome {
        report: Report {
            verdict: Some(Verdict::Compatible.as_str().into()),
            value,
            ..Report::default()
        },
        details,
        warning: None,
        exit: Exit::Clear,
    })
}
