//! Small dense linear-algebra helpers shared by the solvers.
//!
//! Everything here operates on `f64` dynamic matrices. The pseudo-inverse and
//! the symmetric solves are the only numerically delicate pieces; both go
//! through SVD / symmetric eigendecompositions so that rank decisions are
//! explicit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative singular-value cutoff used for pseudo-inverses: singular values
/// below `sigma_max * PINV_RCOND` are treated as zero.
pub const PINV_RCOND: f64 = 1e-12;

/// Condition-number ceiling above which a symmetric solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Entrywise maximum absolute value.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
}

/// Operator infinity norm (maximum absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute entry of a vector.
pub fn vec_inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
}

/// (m + mᵀ) / 2
pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Stack matrices left to right. All inputs must share a row count.
pub fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    assert!(!blocks.is_empty());
    let nrows = blocks[0].nrows();
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows, "hcat: row count mismatch");
        out.view_mut((0, c), (nrows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Stack matrices top to bottom. All inputs must share a column count.
pub fn vcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    assert!(!blocks.is_empty());
    let ncols = blocks[0].ncols();
    let nrows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), ncols, "vcat: column count mismatch");
        out.view_mut((r, 0), (b.nrows(), ncols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Moore-Penrose pseudo-inverse by SVD, together with the numerical rank.
///
/// Singular values below `sigma_max * rcond` are zeroed. A zero matrix has
/// rank 0 and pseudo-inverse 0.
pub fn pinv_with_rank(m: &DMatrix<f64>, rcond: f64) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd requested u");
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let thresh = sigma_max * rcond;
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > 0.0 && s >= thresh {
            rank += 1;
            let vi = vt.row(i).transpose();
            let ui = u.column(i);
            out += vi * ui.transpose() / s;
        }
    }
    (out, rank)
}

/// Pseudo-inverse with the default cutoff [`PINV_RCOND`].
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    pinv_with_rank(m, PINV_RCOND).0
}

/// Orthonormal basis of the column range, as matrix columns.
pub fn range_basis(m: &DMatrix<f64>, rcond: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd requested u");
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let thresh = sigma_max * rcond;
    let cols: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0 && s >= thresh)
        .map(|(i, _)| i)
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

/// Why a symmetric positive-definite solve was refused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymSolveIssue {
    pub min_eigenvalue: f64,
    pub condition: f64,
}

/// Solve `S X = Rhs` for symmetric positive-definite `S` through its
/// eigendecomposition. Refuses when `S` is not numerically positive definite
/// or its condition number exceeds `max_cond`.
pub fn solve_spd(
    s: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    max_cond: f64,
) -> Result<DMatrix<f64>, SymSolveIssue> {
    let eig = SymmetricEigen::new(symmetric_part(s));
    let lmax = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &l| a.max(l));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l));
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if lmin <= 0.0 || condition > max_cond {
        return Err(SymSolveIssue {
            min_eigenvalue: lmin,
            condition,
        });
    }
    let mut qt_rhs = eig.eigenvectors.transpose() * rhs;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let mut row = qt_rhs.row_mut(i);
        row /= l;
    }
    Ok(&eig.eigenvectors * qt_rhs)
}

/// Smallest eigenvalue and spectral norm of a symmetric matrix.
pub fn sym_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetric_part(m));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l));
    let two_norm = eig.eigenvalues.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    (lmin, two_norm)
}

/// Factor `F` with `F Fᵀ = Σ⁺`, where `Σ⁺` is `Σ` with negative eigenvalues
/// clamped to zero. Accepts singular covariances.
pub fn psd_factor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetric_part(sigma));
    let mut f = eig.eigenvectors;
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    f
}

/// Project a symmetric matrix onto the PSD cone (eigenvalue floor at zero).
pub fn psd_floor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetric_part(sigma));
    let mut scaled = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.max(0.0));
    }
    let out = scaled * eig.eigenvectors.transpose();
    symmetric_part(&out)
}

/// Spectral radius (largest eigenvalue modulus) of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |a, l| a.max(l.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seeded_matrix(nrows: usize, ncols: usize, seed: u64) -> DMatrix<f64> {
        let mut stream = crate::rng::NoiseStream::new(seed, 0, crate::rng::StreamKind::InitialState, 0);
        DMatrix::from_fn(nrows, ncols, |_, _| stream.next_standard_normal())
    }

    #[test]
    fn pinv_satisfies_moore_penrose_identities() {
        for seed in [1u64, 2, 3] {
            let a = seeded_matrix(5, 3, seed);
            let (p, rank) = pinv_with_rank(&a, PINV_RCOND);
            assert_eq!(rank, 3);
            let apa = &a * &p * &a;
            let pap = &p * &a * &p;
            assert!(max_abs(&(&apa - &a)) < 1e-10);
            assert!(max_abs(&(&pap - &p)) < 1e-10);
            // A·A⁺ and A⁺·A symmetric
            let aap = &a * &p;
            assert!(max_abs(&(&aap - aap.transpose())) < 1e-10);
        }
    }

    #[test]
    fn pinv_handles_rank_deficiency() {
        // third column = sum of the first two
        let mut a = seeded_matrix(5, 3, 9);
        let col = a.column(0) + a.column(1);
        a.set_column(2, &col);
        let (p, rank) = pinv_with_rank(&a, PINV_RCOND);
        assert_eq!(rank, 2);
        let apa = &a * &p * &a;
        assert!(max_abs(&(&apa - &a)) < 1e-9);
    }

    #[test]
    fn pinv_of_zero_is_zero() {
        let a = DMatrix::zeros(3, 2);
        let (p, rank) = pinv_with_rank(&a, PINV_RCOND);
        assert_eq!(rank, 0);
        assert_eq!(max_abs(&p), 0.0);
    }

    #[test]
    fn solve_spd_matches_direct_inverse() {
        let g = seeded_matrix(4, 4, 11);
        let s = &g * g.transpose() + DMatrix::identity(4, 4);
        let rhs = seeded_matrix(4, 2, 12);
        let x = solve_spd(&s, &rhs, MAX_CONDITION).unwrap();
        assert!(max_abs(&(&s * &x - &rhs)) < 1e-10);
    }

    #[test]
    fn solve_spd_refuses_singular() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let rhs = DMatrix::identity(2, 2);
        let err = solve_spd(&s, &rhs, MAX_CONDITION).unwrap_err();
        assert!(err.min_eigenvalue <= 0.0);
    }

    #[test]
    fn psd_factor_reconstructs_covariance() {
        let g = seeded_matrix(3, 3, 21);
        let sigma = &g * g.transpose();
        let f = psd_factor(&sigma);
        assert!(max_abs(&(&f * f.transpose() - &sigma)) < 1e-10);
        // singular covariance stays exact
        let zero = DMatrix::zeros(3, 3);
        assert_eq!(max_abs(&psd_factor(&zero)), 0.0);
    }

    #[test]
    fn range_basis_spans_columns() {
        let a = seeded_matrix(5, 2, 31);
        let q = range_basis(&a, PINV_RCOND);
        assert_eq!(q.ncols(), 2);
        // Q Qᵀ a = a
        let proj = &q * q.transpose() * &a;
        assert!(max_abs(&(&proj - &a)) < 1e-10);
        assert!(max_abs(&(q.transpose() * &q - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn spectral_radius_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -2.0, 1.0]));
        assert_relative_eq!(spectral_radius(&m), 2.0, max_relative = 1e-12);
    }
}
