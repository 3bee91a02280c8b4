//! Input and output documents.
//!
//! A matrix file is one JSON document:
//!
//! ```json
//! {
//!   "dim": 2,
//!   "matrices": { "Q": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]] },
//!   "vectors": { "psi": [[1, 0], [0, 0]] },
//!   "metadata": { "comment": "free-form" }
//! }
//! ```
//!
//! Every complex entry is an `[re, im]` pair, every matrix is `dim × dim`
//! and every vector has `dim` entries. Syntax errors and non-numeric entries
//! are reported with line and column by the JSON parser.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use incompat_core::linalg::{hermitian_eig, ComplexMatrix, HermitianMatrix};
use incompat_core::measurement::Effect;
use incompat_core::nosignal::TripleDistribution;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

type Entry = [f64; 2];

/// Compact JSON of one value.
fn js<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("finite values serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vectors: BTreeMap<String, Vec<Entry>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Reads `path`, or standard input when `path` is `-`.
pub fn read_source(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        anyhow::anyhow!("malformed {what} at line {}, column {}: {e}", e.line(), e.column())
    })
}

fn to_complex(e: &Entry) -> Complex64 {
    Complex64::new(e[0], e[1])
}

fn to_entry(z: Complex64) -> Entry {
    [z.re, z.im]
}

impl MatrixFile {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            matrices: BTreeMap::new(),
            vectors: BTreeMap::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = parse_json(text, "matrix file")?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_source(path)?)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        ensure!(d > 0, "dim must be positive");
        for (name, rows) in &self.matrices {
            ensure!(rows.len() == d, "matrix `{name}` has {} rows, expected {d}", rows.len());
            for (i, row) in rows.iter().enumerate() {
                ensure!(
                    row.len() == d,
                    "matrix `{name}` row {} has {} entries, expected {d}",
                    i + 1,
                    row.len()
                );
                if let Some(j) = row.iter().position(|e| !e.iter().all(|v| v.is_finite())) {
                    bail!("matrix `{name}` entry ({}, {}) is not finite", i + 1, j + 1);
                }
            }
        }
        for (name, v) in &self.vectors {
            ensure!(v.len() == d, "vector `{name}` has {} entries, expected {d}", v.len());
        }
        Ok(())
    }

    pub fn complex(&self, name: &str) -> Result<ComplexMatrix> {
        let rows = self
            .matrices
            .get(name)
            .with_context(|| format!("matrix `{name}` is missing"))?;
        let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(to_complex).collect()).collect();
        Ok(ComplexMatrix::from_rows(&rows)?)
    }

    pub fn hermitian(&self, name: &str) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.complex(name)?).with_context(|| format!("matrix `{name}`"))
    }

    /// Effect accepted within `tol`, then with its spectrum clamped to
    /// `[0, 1]` so that the solvers see an exact effect.
    pub fn effect(&self, name: &str, tol: f64) -> Result<Effect> {
        let h = self.hermitian(name)?;
        Effect::with_tolerance(h.clone(), tol).with_context(|| format!("matrix `{name}`"))?;
        let spec = hermitian_eig(&h);
        if spec.min() >= 0.0 && spec.max() <= 1.0 {
            return Ok(Effect::with_tolerance(h, 0.0)?);
        }
        Ok(Effect::with_tolerance(spec.apply(|l| l.clamp(0.0, 1.0)), tol)?)
    }

    /// Matrices `{prefix}1, {prefix}2, …` in order; the numbering must be
    /// contiguous.
    pub fn numbered(&self, prefix: &str) -> Vec<String> {
        (1..)
            .map(|k| format!("{prefix}{k}"))
            .take_while(|name| self.matrices.contains_key(name))
            .collect()
    }

    pub fn vector(&self, name: &str) -> Result<Vec<Complex64>> {
        let v = self
            .vectors
            .get(name)
            .with_context(|| format!("vector `{name}` is missing"))?;
        Ok(v.iter().map(to_complex).collect())
    }

    pub fn insert_matrix(&mut self, name: &str, m: &ComplexMatrix) {
        let rows = (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| to_entry(m[(i, j)])).collect())
            .collect();
        self.matrices.insert(name.to_string(), rows);
    }

    pub fn insert_vector(&mut self, name: &str, v: &[Complex64]) {
        self.vectors
            .insert(name.to_string(), v.iter().copied().map(to_entry).collect());
    }

    /// Pretty JSON with one matrix row, or one vector, per line.
    pub fn to_json(&self) -> String {
        let mut out = format!("{{\n  \"dim\": {}", self.dim);
        let mut section = |key: &str, items: Vec<(String, String)>| {
            if items.is_empty() {
                return;
            }
            out.push_str(&format!(",\n  \"{key}\": {{\n"));
            let body: Vec<String> = items.into_iter().map(|(k, v)| format!("    {k}: {v}")).collect();
            out.push_str(&body.join(",\n"));
            out.push_str("\n  }");
        };
        section(
            "matrices",
            self.matrices
                .iter()
                .map(|(name, rows)| {
                    let rows: Vec<String> = rows.iter().map(|r| format!("      {}", js(r))).collect();
                    (js(name), format!("[\n{}\n    ]", rows.join(",\n")))
                })
                .collect(),
        );
        section("vectors", self.vectors.iter().map(|(k, v)| (js(k), js(v))).collect());
        section("metadata", self.metadata.iter().map(|(k, v)| (js(k), js(v))).collect());
        out.push_str("\n}\n");
        out
    }
}

/// Two triple distributions `p(a₁,a₂,b₁|B₁)` and `p(a₁,a₂,b₂|B₂)`, flattened
/// row-major; `dims` are the outcome counts of `(a₁, a₂, b₁, b₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub dims: [usize; 4],
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl DistributionFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "distribution file")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_source(path)?)
    }

    pub fn triples(&self) -> Result<(TripleDistribution, TripleDistribution)> {
        let [n1, n2, m1, m2] = self.dims;
        let t1 = TripleDistribution::new(n1, n2, m1, self.t1.clone()).context("t1")?;
        let t2 = TripleDistribution::new(n1, n2, m2, self.t2.clone()).context("t2")?;
        Ok((t1, t2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHARP: &str = r#"{
        "dim": 2,
        "matrices": {
            "Q": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]],
            "P": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]
        },
        "metadata": { "comment": "sharp pair" }
    }"#;

    #[test]
    fn parses_effects() {
        let f = MatrixFile::parse(SHARP).unwrap();
        assert_eq!(f.dim, 2);
        let q = f.effect("Q", 1e-9).unwrap();
        assert_eq!(q.operator().real_part(0, 1), 0.5);
        assert!(f.effect("R", 1e-9).is_err());
    }

    #[test]
    fn reports_position_of_bad_entries() {
        let bad = SHARP.replace("[0.5, 0], [0.5, 0]]]", "[0.5, 0], [\"x\", 0]]]");
        let msg = MatrixFile::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }

    #[test]
    fn rejects_bad_shapes() {
        let short = r#"{"dim": 2, "matrices": {"Q": [[[1, 0], [0, 0]]]}}"#;
        assert!(MatrixFile::parse(short).unwrap_err().to_string().contains("rows"));
        let zero = r#"{"dim": 0}"#;
        assert!(MatrixFile::parse(zero).is_err());
        let vector = r#"{"dim": 2, "vectors": {"v": [[1, 0]]}}"#;
        assert!(MatrixFile::parse(vector).is_err());
    }

    #[test]
    fn numbered_names() {
        let mut f = MatrixFile::new(1);
        for name in ["T1", "T2", "T4"] {
            f.insert_matrix(name, &ComplexMatrix::identity(1));
        }
        assert_eq!(f.numbered("T"), ["T1", "T2"]);
    }

    #[test]
    fn round_trip_is_exact() {
        let mut f = MatrixFile::new(2);
        let m = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(0.1 * (i + 1) as f64 / 3.0, (j as f64).sqrt() / 7.0));
        f.insert_matrix("M", &m);
        f.insert_vector("v", &[Complex64::new(1.0 / 3.0, -2.0f64.sqrt()), Complex64::new(1e-300, 5e300)]);
        let back = MatrixFile::parse(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.complex("M").unwrap(), m);
    }
}
