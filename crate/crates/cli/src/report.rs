//! Machine-readable report and exit codes.

use std::fmt::Write;
use std::process::ExitCode;

use clap::ValueEnum;
use incompat_core::jm::Verdict;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Process outcome: `0` clear, `1` error, `3` flagged (incompatible, CHSH
/// violation, signaling, or no non-commuting reduction), `4` inside the
/// tolerance band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Clear,
    Error,
    Flagged,
    Marginal,
}

impl Exit {
    pub fn code(self) -> u8 {
        match self {
            Exit::Clear => 0,
            Exit::Error => 1,
            Exit::Flagged => 3,
            Exit::Marginal => 4,
        }
    }

    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Compatible => Exit::Clear,
            Verdict::Incompatible => Exit::Flagged,
            Verdict::Marginal => Exit::Marginal,
        }
    }
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e.code())
    }
}

/// The JSON document every subcommand prints; keys that do not apply are
/// `null`, so the key set never changes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub lambda0: Option<f64>,
    pub lambda_star: Option<f64>,
    pub mu: Option<f64>,
    pub verdict: Option<String>,
    pub phi_star: Option<f64>,
    pub value: Option<f64>,
    pub gap: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// `key: value` lines for the fields that are set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                writeln!(out, "{key}: {v}").unwrap();
            }
        };
        line("lambda0", self.lambda0);
        line("lambda_star", self.lambda_star);
        line("mu", self.mu);
        line("phi_star", self.phi_star);
        line("value", self.value);
        line("gap", self.gap);
        if let Some(v) = &self.verdict {
            writeln!(out, "verdict: {v}").unwrap();
        }
        out
    }
}

/// A finished command: the report, extra human-readable detail for text
/// mode, an optional diagnostic for standard error, and the exit status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub details: String,
    pub warning: Option<String>,
    pub exit: Exit,
}

impl Outcome {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => format!("{}\n", self.report.to_json()),
            Format::Text => format!("{}{}", self.report.to_text(), self.details),
        }
    }
}
