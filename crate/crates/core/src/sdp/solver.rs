//! Infeasible-start primal–dual interior-point method.
//!
//! Search direction: HKM (`dX = σμZ⁻¹ − X − sym(X dZ Z⁻¹)`), Mehrotra
//! predictor–corrector, separate step lengths for `(x, Z)` and `X`. All
//! Hermitian blocks are handled through their real symmetric embedding; the
//! returned dual variable is mapped back with [`compress_embedding`].

use crate::error::Result;
use crate::linalg::{compress_embedding, hermitian_eig, real_embedding, RealMatrix};

use super::{BlockDiagonal, SdpOptions, SdpProblem, SdpSolution, SdpStatus, CONTRACT_TOL};

/// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.95;
/// Iterates larger than this (Frobenius) are considered diverging when
/// testing for infeasibility rays.
const DIVERGENCE_NORM: f64 = 1e8;

/// The projected `dX` is used when its step is at least this fraction of the
/// unprojected one.
const PROJECTION_STEP_RATIO: f64 = 0.5;
/// Once the best merit is below `NEAR_OPTIMAL`, an iterate whose merit
/// exceeds both `DIVERGENCE_MERIT` and `DIVERGENCE_FACTOR` times the best
/// ends the run.
const NEAR_OPTIMAL: f64 = 1e-6;
const DIVERGENCE_MERIT: f64 = 1e-5;
const DIVERGENCE_FACTOR: f64 = 1e3;
/// Relative diagonal shifts tried when the Schur complement fails Cholesky.
const SCHUR_SHIFTS: [f64; 4] = [1e-14, 1e-12, 1e-10, 1e-8];
/// Iterations without a new best merit before the run is abandoned.
const STALL_ITERATIONS: usize = 20;
/// Halvings tried before a step that leaves the cone ends the run.
const BACKTRACK_STEPS: usize = 30;
/// Iterative-refinement sweeps on each Schur solve.
const REFINEMENT_STEPS: usize = 2;

type Blocks = Vec<RealMatrix>;

struct Embedded {
    c: Vec<f64>,
    constant: Blocks,
    /// `constraints[i][k]` is `None` when block `k` of `F_i` vanishes.
    constraints: Vec<Vec<Option<RealMatrix>>>,
    dims: Vec<usize>,
}

impl Embedded {
    fn new(prob: &SdpProblem) -> Self {
        let constant: Blocks = prob.constant.blocks().iter().map(real_embedding).collect();
        let constraints = prob
            .constraints
            .iter()
            .map(|f| {
                f.blocks()
                    .iter()
                    .map(|b| (b.as_complex().max_abs() != 0.0).then(|| real_embedding(b)))
                    .collect()
            })
            .collect();
        let dims = constant.iter().map(RealMatrix::rows).collect();
        Self {
            c: prob.c.clone(),
            constant,
            constraints,
            dims,
        }
    }

    fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// `(tr[F_i M])_i`.
    fn apply(&self, m: &Blocks) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|f| {
                f.iter()
                    .zip(m)
                    .filter_map(|(fb, mb)| fb.as_ref().map(|fb| fb.dot(mb)))
                    .sum()
            })
            .collect()
    }

    /// `Σ_i y_i F_i`.
    fn combine(&self, y: &[f64]) -> Blocks {
        let mut out: Blocks = self.dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect();
        for (yi, f) in y.iter().zip(&self.constraints) {
            if *yi == 0.0 {
                continue;
            }
            for (ob, fb) in out.iter_mut().zip(f) {
                if let Some(fb) = fb {
                    ob.axpy(*yi, fb);
                }
            }
        }
        out
    }

    fn constraint_norms(&self) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|f| {
                f.iter()
                    .flatten()
                    .map(|b| b.dot(b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

fn blocks_norm(b: &Blocks) -> f64 {
    b.iter().map(|m| m.dot(m)).sum::<f64>().sqrt()
}

fn blocks_dot(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn blocks_axpy(a: &Blocks, factor: f64, b: &Blocks) -> Blocks {
    a.iter().zip(b).map(|(x, y)| x.add_scaled(y, factor)).collect()
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cholesky_blocks(b: &Blocks) -> Option<Blocks> {
    b.iter().map(RealMatrix::cholesky).collect()
}

/// Largest `α` with `M + α·dM ⪰ 0`, given the Cholesky factors of `M`.
fn max_step(chol: &Blocks, dm: &Blocks) -> f64 {
    let mut alpha = f64::INFINITY;
    for (l, d) in chol.iter().zip(dm) {
        let half = RealMatrix::forward_substitute(l, d);
        let w = RealMatrix::forward_substitute(l, &half.transpose()).symmetrize();
        let lmin = hermitian_eig(&w.to_hermitian()).min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

/// Cholesky factor of `m`, adding an escalating multiple of its largest
/// diagonal entry when rounding has cost it definiteness.
fn regularized_cholesky(m: &RealMatrix) -> Option<RealMatrix> {
    if let Some(l) = m.cholesky() {
        return Some(l);
    }
    let n = m.rows();
    let top = (0..n).map(|i| m[(i, i)].abs()).fold(f64::MIN_POSITIVE, f64::max);
    SCHUR_SHIFTS.iter().find_map(|&shift| {
        let mut reg = m.clone();
        for i in 0..n {
            reg[(i, i)] += shift * top;
        }
        reg.cholesky()
    })
}

/// Cholesky solve followed by iterative refinement against the unfactored
/// matrix; near the optimum the Schur complement is badly conditioned and a
/// plain solve leaks into the equality residual.
fn refined_solve(m: &RealMatrix, chol: &RealMatrix, rhs: &[f64]) -> Vec<f64> {
    let mut x = RealMatrix::cholesky_solve(chol, rhs);
    for _ in 0..REFINEMENT_STEPS {
        let residual: Vec<f64> = (0..rhs.len())
            .map(|i| rhs[i] - (0..x.len()).map(|j| m[(i, j)] * x[j]).sum::<f64>())
            .collect();
        let correction = RealMatrix::cholesky_solve(chol, &residual);
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
    }
    x
}

/// `dX + X·A*(y)·X` with `y` chosen so that `A` of the result picks up
/// `defect`; `None` when the scaled Gram matrix is numerically singular.
fn scaled_projection(emb: &Embedded, xm: &Blocks, dxm: &Blocks, defect: &[f64]) -> Option<Blocks> {
    let n = defect.len();
    let scaled: Vec<Vec<Option<RealMatrix>>> = emb
        .constraints
        .iter()
        .map(|f| {
            f.iter()
                .zip(xm)
                .map(|(fb, xb)| fb.as_ref().map(|fb| xb.matmul(fb).matmul(xb).symmetrize()))
                .collect()
        })
        .collect();
    let mut gram = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = emb.constraints[i]
                .iter()
                .zip(&scaled[j])
                .filter_map(|(a, b)| Some(a.as_ref()?.dot(b.as_ref()?)))
                .sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let chol = regularized_cholesky(&gram)?;
    let y = refined_solve(&gram, &chol, defect);
    let mut out = dxm.clone();
    for (yi, s) in y.iter().zip(&scaled) {
        for (ob, sb) in out.iter_mut().zip(s) {
            if let Some(sb) = sb {
                ob.axpy(*yi, sb);
            }
        }
    }
    Some(out)
}

/// `M + α·dM` with `α` halved until the result admits a Cholesky factor;
/// step bounds come from the previous factor and rounding can overshoot.
/// The result is re-symmetrized: Cholesky reads one triangle only, so any
/// drift would otherwise go unseen.
fn interior_step(m: &Blocks, alpha: f64, dm: &Blocks) -> Option<(Blocks, f64)> {
    let mut alpha = alpha;
    for _ in 0..BACKTRACK_STEPS {
        let next: Blocks = blocks_axpy(m, alpha, dm).iter().map(RealMatrix::symmetrize).collect();
        if cholesky_blocks(&next).is_some() {
            return Some((next, alpha));
        }
        alpha *= 0.5;
    }
    None
}

struct Iterate {
    x: Vec<f64>,
    xm: Blocks,
    merit: f64,
}

/// Solves `min ⟨c|x⟩ s.t. Σ x_i F_i ⪰ C` together with its dual.
pub fn solve_sdp(prob: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    prob.validate()?;
    let emb = Embedded::new(prob);
    let n = emb.c.len();
    let big_n = emb.total_dim() as f64;

    let c_norm = vec_norm(&emb.c);
    let cmat_norm = blocks_norm(&emb.constant);
    let f_norms = emb.constraint_norms();
    let xi = emb
        .c
        .iter()
        .zip(&f_norms)
        .map(|(ci, fi)| big_n * (1.0 + ci.abs()) / (1.0 + fi))
        .fold(10f64.max(big_n.sqrt()), f64::max);
    let eta = f_norms
        .iter()
        .copied()
        .fold(10f64.max(big_n.sqrt()).max(cmat_norm), f64::max);

    let mut x = vec![0.0; n];
    let mut xm: Blocks = emb.dims.iter().map(|&d| RealMatrix::identity(d).scale(xi)).collect();
    let mut zm: Blocks = emb.dims.iter().map(|&d| RealMatrix::identity(d).scale(eta)).collect();

    let mut best: Option<Iterate> = None;
    let mut stalled = 0;
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = emb.apply(&xm);
        let r: Vec<f64> = emb.c.iter().zip(&ax).map(|(c, a)| c - a).collect();
        let fx = emb.combine(&x);
        let rd: Blocks = emb
            .constant
            .iter()
            .zip(&zm)
            .zip(&fx)
            .map(|((cm, z), f)| cm.add_scaled(z, 1.0).add_scaled(f, -1.0))
            .collect();

        let pobj: f64 = emb.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        let dobj = blocks_dot(&emb.constant, &xm);
        let compl = blocks_dot(&xm, &zm);
        let pinf = vec_norm(&r) / (1.0 + c_norm);
        let dinf = blocks_norm(&rd) / (1.0 + cmat_norm);
        let scale = 1.0 + pobj.abs();
        let rel_gap = (pobj - dobj).abs() / scale;
        let rel_compl = compl / scale;

        let merit = pinf.max(dinf).max(rel_gap).max(rel_compl);
        // Past the accuracy the Schur system supports, iterates can jump away
        // from an already excellent point; stop and fall back to it.
        if best.as_ref().is_some_and(|b| b.merit < NEAR_OPTIMAL && merit > DIVERGENCE_MERIT && merit > DIVERGENCE_FACTOR * b.merit) {
            break;
        }
        if best.as_ref().is_none_or(|b| merit < b.merit) {
            stalled = 0;
            best = Some(Iterate {
                x: x.clone(),
                xm: xm.clone(),
                merit,
            });
        } else {
            stalled += 1;
        }

        if pinf <= opts.feas_tol
            && dinf <= opts.feas_tol
            && rel_gap <= opts.gap_tol
            && rel_compl <= opts.gap_tol
        {
            status = SdpStatus::Optimal;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        // Rays: a growing X with tr[F_i X] ≈ 0 and tr[C X] > 0 certifies primal
        // infeasibility; a growing x with Σ x_i F_i ⪰ 0 and ⟨c|x⟩ < 0 certifies
        // unboundedness.
        let xnorm = blocks_norm(&xm);
        if xnorm > DIVERGENCE_NORM && dobj > 0.0 && vec_norm(&ax) / dobj < 1e-8 {
            status = SdpStatus::Infeasible;
            break;
        }
        let xvec_norm = vec_norm(&x);
        if xvec_norm > DIVERGENCE_NORM && pobj < 0.0 {
            let lmin = fx
                .iter()
                .map(|b| hermitian_eig(&b.to_hermitian()).min())
                .fold(f64::INFINITY, f64::min);
            if lmin / (-pobj) > -1e-8 {
                status = SdpStatus::Unbounded;
                break;
            }
        }

        if stalled > STALL_ITERATIONS {
            break;
        }

        let Some(zchol) = cholesky_blocks(&zm) else { break };
        let Some(xchol) = cholesky_blocks(&xm) else { break };
        let zinv: Blocks = zchol.iter().map(RealMatrix::spd_inverse).collect();
        let mu = compl / big_n;

        // Schur complement M_ij = tr[F_i X F_j Z⁻¹].
        let mut schur = RealMatrix::zeros(n, n);
        for j in 0..n {
            let g: Vec<Option<RealMatrix>> = emb.constraints[j]
                .iter()
                .zip(xm.iter().zip(&zinv))
                .map(|(fb, (xb, zi))| fb.as_ref().map(|fb| xb.matmul(fb).matmul(zi)))
                .collect();
            for i in 0..=j {
                let mut acc = 0.0;
                for (fi, gj) in emb.constraints[i].iter().zip(&g) {
                    if let (Some(fi), Some(gj)) = (fi, gj) {
                        acc += fi.trace_product(gj);
                    }
                }
                schur[(i, j)] = acc;
                schur[(j, i)] = acc;
            }
        }
        let Some(schur_chol) = regularized_cholesky(&schur) else { break };

        let xrz: Blocks = xm
            .iter()
            .zip(&rd)
            .zip(&zinv)
            .map(|((xb, rb), zi)| xb.matmul(rb).matmul(zi))
            .collect();
        let base_rhs: Vec<f64> = emb
            .apply(&xrz)
            .iter()
            .zip(&emb.c)
            .map(|(a, c)| a - c)
            .collect();

        // Direction for complementarity target T (dX = sym(T Z⁻¹) − X − sym(X dZ Z⁻¹)).
        let direction = |target: Option<&Blocks>| {
            let tz: Option<Blocks> =
                target.map(|t| t.iter().zip(&zinv).map(|(tb, zi)| tb.matmul(zi)).collect());
            let mut rhs = base_rhs.clone();
            if let Some(tz) = &tz {
                for (r, a) in rhs.iter_mut().zip(emb.apply(tz)) {
                    *r += a;
                }
            }
            let dx = refined_solve(&schur, &schur_chol, &rhs);
            let dz: Blocks = emb
                .combine(&dx)
                .iter()
                .zip(&rd)
                .map(|(f, rb)| f.add_scaled(rb, -1.0))
                .collect();
            let dxm: Blocks = (0..xm.len())
                .map(|k| {
                    let mut m = xm[k].matmul(&dz[k]).matmul(&zinv[k]).scale(-1.0);
                    m.axpy(-1.0, &xm[k]);
                    if let Some(tz) = &tz {
                        m.axpy(1.0, &tz[k]);
                    }
                    m.symmetrize()
                })
                .collect();
            (dx, dz, dxm)
        };

        // Predictor.
        let (_, dz_a, dxm_a) = direction(None);
        let ap = max_step(&xchol, &dxm_a).min(1.0);
        let ad = max_step(&zchol, &dz_a).min(1.0);
        let mu_aff = blocks_dot(&blocks_axpy(&xm, ap, &dxm_a), &blocks_axpy(&zm, ad, &dz_a)) / big_n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let target: Blocks = (0..xm.len())
            .map(|k| {
                let mut t = dxm_a[k].matmul(&dz_a[k]).scale(-1.0);
                for i in 0..t.rows() {
                    t[(i, i)] += sigma * mu;
                }
                t
            })
            .collect();
        let (dx, dz, mut dxm) = direction(Some(&target));
        let mut ap = (STEP_FRACTION * max_step(&xchol, &dxm)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&zchol, &dz)).min(1.0);

        // In exact arithmetic A(dX) = r. Once the Schur system loses accuracy
        // the computed dX leaks into the equality residual, so project the
        // defect out along X·A*(y)·X, which stays inside the range of X,
        // unless that costs most of the step toward the cone boundary.
        let defect: Vec<f64> = r.iter().zip(emb.apply(&dxm)).map(|(ri, a)| ri - a).collect();
        if let Some(projected) = scaled_projection(&emb, &xm, &dxm, &defect) {
            let ap_projected = (STEP_FRACTION * max_step(&xchol, &projected)).min(1.0);
            if ap_projected >= PROJECTION_STEP_RATIO * ap {
                dxm = projected;
                ap = ap_projected;
            }
        }

        let (Some(next_x), Some(next_z)) = (interior_step(&xm, ap, &dxm), interior_step(&zm, ad, &dz)) else {
            break;
        };
        xm = next_x.0;
        zm = next_z.0;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += next_z.1 * di;
        }
    }

    if status == SdpStatus::MaxIterations {
        if let Some(b) = best {
            x = b.x;
            xm = b.xm;
        }
        // Final X-scaled projection onto A(X) = c, kept only if it helps and
        // stays inside the cone.
        let residual = |m: &Blocks| -> Vec<f64> { emb.c.iter().zip(emb.apply(m)).map(|(c, a)| c - a).collect() };
        let zero: Blocks = emb.dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect();
        let r = residual(&xm);
        if let Some(step) = scaled_projection(&emb, &xm, &zero, &r) {
            let polished = blocks_axpy(&xm, 1.0, &step);
            if vec_norm(&residual(&polished)) < vec_norm(&r) && cholesky_blocks(&polished).is_some() {
                xm = polished;
            }
        }
        // Any residual left shifts the gap by ⟨x, r⟩, so the dual value is no
        // bound at all. The unscaled least-squares correction X + A*(y) is
        // well conditioned and moves X by about ‖r‖; keep it while X stays
        // inside the contract tolerance of the cone.
        let r = residual(&xm);
        let identity: Blocks = emb.dims.iter().map(|&d| RealMatrix::identity(d)).collect();
        if let Some(step) = scaled_projection(&emb, &identity, &zero, &r) {
            let corrected = blocks_axpy(&xm, 1.0, &step);
            let lmin = corrected
                .iter()
                .map(|b| hermitian_eig(&compress_embedding(b)).min())
                .fold(f64::INFINITY, f64::min);
            if vec_norm(&residual(&corrected)) < vec_norm(&r) && lmin >= -CONTRACT_TOL {
                xm = corrected;
            }
        }
    }
    let mut sol = finish(prob, status, x, &xm, iterations);
    if sol.status == SdpStatus::MaxIterations && sol.meets_optimal_contract() {
        sol.status = SdpStatus::Optimal;
    }
    Ok(sol)
}

fn finish(prob: &SdpProblem, status: SdpStatus, x: Vec<f64>, xm: &Blocks, iterations: usize) -> SdpSolution {
    let dual = BlockDiagonal::new(xm.iter().map(compress_embedding).collect())
        .expect("at least one block");
    let primal_value: f64 = prob.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let dual_value = prob.constant.trace_product(&dual);
    let residual: Vec<f64> = prob
        .c
        .iter()
        .zip(prob.dual_constraint_values(&dual))
        .map(|(c, a)| c - a)
        .collect();
    let slack_violation = (-prob.slack(&x).min_eigenvalue()).max(0.0);
    SdpSolution {
        status,
        x,
        dual,
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        iterations,
        primal_residual: vec_norm(&residual),
        slack_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, HermitianMatrix};

    #[test]
    fn interior_steps_stay_symmetric() {
        let m = vec![RealMatrix::from_fn(3, 3, |i, j| if i == j { 1e5 } else { 1.0 })];
        // A lopsided direction, as rounding in X·F·X produces at large ‖X‖.
        let dm = vec![RealMatrix::from_fn(3, 3, |i, j| if i < j { 1e-3 } else { 0.0 })];
        let (next, alpha) = interior_step(&m, 1.0, &dm).unwrap();
        assert_eq!(alpha, 1.0);
        assert_eq!(next[0], next[0].transpose());
    }

    fn single(constant: HermitianMatrix, constraints: Vec<HermitianMatrix>, c: Vec<f64>) -> SdpProblem {
        SdpProblem::new(
            c,
            BlockDiagonal::new(vec![constant]).unwrap(),
            constraints
                .into_iter()
                .map(|f| BlockDiagonal::new(vec![f]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_bound_by_diagonal() {
        let p = single(HermitianMatrix::diag(&[1.0, 2.0]), vec![HermitianMatrix::identity(2)], vec![1.0]);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_value - 2.0).abs() < 1e-7, "{}", s.primal_value);
        assert!((s.dual_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn scalar_bound_by_sigma_x() {
        let p = single(pauli::x(), vec![HermitianMatrix::identity(2)], vec![1.0]);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_value - 1.0).abs() < 1e-7);
        assert!(s.gap >= -1e-7 && s.gap <= 1e-6);
    }

    #[test]
    fn complex_constraint_matrix() {
        // min x s.t. x·1 ⪰ σy has optimum 1 and needs the imaginary part.
        let p = single(pauli::y(), vec![HermitianMatrix::identity(2)], vec![1.0]);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert!((s.primal_value - 1.0).abs() < 1e-7);
        // Optimal dual is the projector onto the +1 eigenvector of σy.
        let want = pauli::y().affine(0.5, 0.5);
        assert!(s.dual.block(0).max_abs_diff(&want) < 1e-4);
    }

    #[test]
    fn detects_infeasibility() {
        // x ≥ 1 and −x ≥ 1 cannot both hold.
        let p = single(HermitianMatrix::identity(2), vec![HermitianMatrix::diag(&[1.0, -1.0])], vec![1.0]);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let p = single(HermitianMatrix::zeros(2), vec![HermitianMatrix::identity(2)], vec![-1.0]);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Unbounded);
    }

    #[test]
    fn deterministic_iterates() {
        let p = single(pauli::x(), vec![HermitianMatrix::identity(2), pauli::z()], vec![1.0, 0.3]);
        let a = solve_sdp(&p, &SdpOptions::default()).unwrap();
        let b = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
