//! Classical side of the argument: two no-signaling triple distributions
//! glue into one joint distribution, and joint distributions never violate
//! CHSH.

use serde::Serialize;

use crate::error::{Error, Result};

/// Normalization tolerance for distributions.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Default no-signaling tolerance for [`join_distributions`].
pub const SIGNALING_TOL: f64 = 1e-9;

fn validate(p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: p.len(),
        });
    }
    if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidInput(format!("probability {bad} is not a nonnegative number")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidInput(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidInput(format!("outcome cardinalities {dims:?} must be positive")));
    }
    Ok(())
}

/// `p(a₁, a₂, b | B)` stored row-major in `(a₁, a₂, b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleDistribution {
    dims: [usize; 3],
    p: Vec<f64>,
}

impl TripleDistribution {
    pub fn new(n_a1: usize, n_a2: usize, n_b: usize, p: Vec<f64>) -> Result<Self> {
        let dims = [n_a1, n_a2, n_b];
        check_dims(&dims)?;
        validate(&p, n_a1 * n_a2 * n_b)?;
        Ok(Self { dims, p })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, a1: usize, a2: usize, b: usize) -> f64 {
        let [_, n2, nb] = self.dims;
        self.p[(a1 * n2 + a2) * nb + b]
    }

    /// `p(a₁, a₂)` row-major.
    pub fn marginal_a(&self) -> Vec<f64> {
        self.p.chunks(self.dims[2]).map(|c| c.iter().sum()).collect()
    }
}

/// `p(a₁, a₂, b₁, b₂)` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadDistribution {
    dims: [usize; 4],
    p: Vec<f64>,
}

impl QuadDistribution {
    pub fn new(dims: [usize; 4], p: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        validate(&p, dims.iter().product())?;
        Ok(Self { dims, p })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    fn index(&self, a1: usize, a2: usize, b1: usize, b2: usize) -> usize {
        let [_, n2, m1, m2] = self.dims;
        ((a1 * n2 + a2) * m1 + b1) * m2 + b2
    }

    pub fn get(&self, a1: usize, a2: usize, b1: usize, b2: usize) -> f64 {
        self.p[self.index(a1, a2, b1, b2)]
    }

    /// `p(a₁, a₂, b₁)`, summing out `b₂`.
    pub fn marginal_b1(&self) -> TripleDistribution {
        let [n1, n2, m1, m2] = self.dims;
        let p = self.p.chunks(m2).map(|c| c.iter().sum()).collect();
        TripleDistribution { dims: [n1, n2, m1], p }
    }

    /// `p(a₁, a₂, b₂)`, summing out `b₁`.
    pub fn marginal_b2(&self) -> TripleDistribution {
        let [n1, n2, m1, m2] = self.dims;
        let mut p = vec![0.0; n1 * n2 * m2];
        for (a, block) in self.p.chunks(m1 * m2).enumerate() {
            for (k, v) in block.iter().enumerate() {
                p[a * m2 + k % m2] += v;
            }
        }
        TripleDistribution { dims: [n1, n2, m2], p }
    }

    /// `p(a₁, a₂)`.
    pub fn marginal_a(&self) -> Vec<f64> {
        let [_, _, m1, m2] = self.dims;
        self.p.chunks(m1 * m2).map(|c| c.iter().sum()).collect()
    }
}

/// `p(a₁,a₂,b₁,b₂) = p(a₁,a₂,b₁|B₁)·p(a₁,a₂,b₂|B₂) / p(a₁,a₂)`, with entries
/// over a vanishing `p(a₁,a₂)` set to zero. The two `a`-marginals must agree
/// within `tol`; their mean is used as `p(a₁,a₂)`.
pub fn join_distributions(
    t1: &TripleDistribution,
    t2: &TripleDistribution,
    tol: f64,
) -> Result<QuadDistribution> {
    let [n1, n2, m1] = t1.dims;
    let [k1, k2, m2] = t2.dims;
    if (n1, n2) != (k1, k2) {
        return Err(Error::DimensionMismatch {
            expected: n1 * n2,
            actual: k1 * k2,
        });
    }
    let q1 = t1.marginal_a();
    let q2 = t2.marginal_a();
    let max_deviation = q1
        .iter()
        .zip(&q2)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if max_deviation > tol {
        return Err(Error::SignalingDetected { max_deviation });
    }
    let mut p = Vec::with_capacity(n1 * n2 * m1 * m2);
    for (a, (x, y)) in q1.iter().zip(&q2).enumerate() {
        let marginal = 0.5 * (x + y);
        for b1 in 0..m1 {
            for b2 in 0..m2 {
                p.push(if marginal > 0.0 {
                    t1.p[a * m1 + b1] * t2.p[a * m2 + b2] / marginal
                } else {
                    0.0
                });
            }
        }
    }
    Ok(QuadDistribution {
        dims: [n1, n2, m1, m2],
        p,
    })
}

/// `½|E[a₁(b₁+b₂)] + E[a₂(b₁−b₂)]|` with outcome `0 ↦ +1`, `1 ↦ −1`.
pub fn chsh_value_classical(q: &QuadDistribution) -> Result<f64> {
    if q.dims != [2; 4] {
        return Err(Error::NonBinaryOutcomes(q.dims.to_vec()));
    }
    let sign = |k: usize| if k == 0 { 1.0 } else { -1.0 };
    let mut total = 0.0;
    for a1 in 0..2 {
        for a2 in 0..2 {
            for b1 in 0..2 {
                for b2 in 0..2 {
                    let (x1, x2, y1, y2) = (sign(a1), sign(a2), sign(b1), sign(b2));
                    total += q.get(a1, a2, b1, b2) * (x1 * (y1 + y2) + x2 * (y1 - y2));
                }
            }
        }
    }
    Ok(0.5 * total.abs())
}
