use num_complex::Complex64;

use crate::linalg::{ComplexMatrix, HermitianMatrix};

/// Generalized Gell-Mann basis of `d × d` Hermitian matrices, orthonormal
/// under `tr[G_i G_j] = δ_ij`.
///
/// Order: `1/√d`, the `d − 1` traceless diagonal elements, then for each
/// `j < k` the symmetric and antisymmetric off-diagonal pair.
pub fn hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    basis.push(HermitianMatrix::identity(d).scale(1.0 / (d as f64).sqrt()));
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let diag: Vec<f64> = (0..d)
            .map(|k| match k.cmp(&l) {
                std::cmp::Ordering::Less => norm,
                std::cmp::Ordering::Equal => -(l as f64) * norm,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        basis.push(HermitianMatrix::diag(&diag));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = Complex64::new(r, 0.0);
            sym[(k, j)] = Complex64::new(r, 0.0);
            basis.push(HermitianMatrix::hermitize(sym));

            let mut anti = ComplexMatrix::zeros(d, d);
            anti[(j, k)] = Complex64::new(0.0, -r);
            anti[(k, j)] = Complex64::new(0.0, r);
            basis.push(HermitianMatrix::hermitize(anti));
        }
    }
    basis
}

/// Coordinates `tr[G_i H]` of `h` in an orthonormal basis.
pub fn expand(h: &HermitianMatrix, basis: &[HermitianMatrix]) -> Vec<f64> {
    basis.iter().map(|g| g.trace_product(h)).collect()
}

/// `Σ_i coeffs_i G_i`.
pub fn assemble(coeffs: &[f64], basis: &[HermitianMatrix]) -> HermitianMatrix {
    let d = basis[0].dim();
    let mut acc = HermitianMatrix::zeros(d);
    for (c, g) in coeffs.iter().zip(basis) {
        if *c != 0.0 {
            acc = &acc + &g.scale(*c);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;

    #[test]
    fn basis_is_orthonormal() {
        for d in 1..=4 {
            let b = hermitian_basis(d);
            assert_eq!(b.len(), d * d);
            for (i, gi) in b.iter().enumerate() {
                for (j, gj) in b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gi.trace_product(gj) - want).abs() < 1e-14, "d={d} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn expand_assemble_round_trip() {
        let b = hermitian_basis(2);
        let h = &pauli::y().scale(0.3) + &pauli::z().affine(0.7, 0.1);
        let back = assemble(&expand(&h, &b), &b);
        assert!(back.max_abs_diff(&h) < 1e-15);
    }
}
