//! Small dense complex linear algebra helpers shared by the fiber modules.
//!
//! Everything is backed by nalgebra's Hermitian eigensolver and SVD; matrices
//! here are tiny (|W| ≤ 64, a handful of generators), so no structured or
//! sparse paths are needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) type CMatrix = DMatrix<Complex64>;
pub(crate) type CVector = DVector<Complex64>;

/// (M + M*)/2: exact Hermitian representative of a numerically
/// almost-Hermitian matrix.
pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn max_hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Eigenvalues (real, ascending) and matching eigenvectors of a Hermitian
/// matrix, by cyclic Jacobi rotations.
///
/// Jacobi keeps near-null eigenvectors accurate when tiny off-diagonal
/// couplings sit next to a near-zero diagonal entry — the configuration
/// every pseudo-inverse square root of a rank-deficient Gramian produces.
/// Tridiagonalization-based solvers can rotate such eigenvectors into the
/// dominant cluster by ~1e-2, which the λ^{-1/2} map then amplifies.
pub(crate) fn hermitian_eigen_ascending(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let mut a = hermitize(m);
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm();
    let tol = f64::EPSILON * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = a[(p, q)];
                let abs_b = beta.norm();
                if abs_b == 0.0 {
                    continue;
                }
                let phase = beta / Complex64::new(abs_b, 0.0);
                let alpha = a[(p, p)].re;
                let gamma = a[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * abs_b);
                // Small-magnitude root of t² − 2τt − 1 = 0.
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary rotation R in the (p,q) plane:
                //   R[p][p] = c, R[p][q] = -s·e^{iφ}, R[q][p] = s·e^{-iφ}, R[q][q] = c,
                // chosen so that (R* A R)[p][q] = 0.
                let cs = Complex64::new(c, 0.0);
                let sp = Complex64::new(s, 0.0) * phase;
                let sp_conj = sp.conj();
                // A ← A R (columns p and q).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp + sp_conj * akq;
                    a[(k, q)] = -sp * akp + cs * akq;
                }
                // A ← R* A (rows p and q).
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk + sp * aqk;
                    a[(q, k)] = -sp_conj * apk + cs * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // V ← V R.
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cs * vkp + sp_conj * vkq;
                    v[(k, q)] = -sp * vkp + cs * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Operator norm σ_max; 0 for empty shapes.
pub(crate) fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Number of singular values above rel_tol × σ_max (σ_max replaced by 1 when
/// the matrix vanishes).
pub(crate) fn numeric_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let largest = sv.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * if largest > 0.0 { largest } else { 1.0 };
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Orthonormal basis of the column space: the left singular vectors whose
/// singular values clear the relative threshold.
pub(crate) fn orthonormal_range(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u");
    let mut cols: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));
    let largest = cols.first().map(|c| c.0).unwrap_or(0.0);
    let threshold = rel_tol * if largest > 0.0 { largest } else { 1.0 };
    let kept: Vec<usize> = cols.iter().filter(|c| c.0 > threshold).map(|c| c.1).collect();
    let mut basis = CMatrix::zeros(rows, kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

/// Orthonormal basis of the column space with an absolute singular-value
/// cutoff, for matrices whose nonzero singular values have a known scale
/// (projector products: 0 or 1). A relative cutoff would keep pure roundoff
/// when every singular value is noise.
pub(crate) fn orthonormal_range_above(m: &CMatrix, abs_threshold: f64) -> CMatrix {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u");
    let mut cols: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));
    let kept: Vec<usize> = cols.iter().filter(|c| c.0 > abs_threshold).map(|c| c.1).collect();
    let mut basis = CMatrix::zeros(rows, kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

/// Orthogonal projector onto the column space of m.
pub(crate) fn projector_onto_range(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let q = orthonormal_range(m, rel_tol);
    if q.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), m.nrows());
    }
    hermitize(&(&q * q.adjoint()))
}

/// Hermitian f(M) = U f(Λ) U* from an eigendecomposition; f acts on the real
/// eigenvalues.
pub(crate) fn hermitian_apply(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen_ascending(m);
    let diag = CVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(f(v), 0.0)));
    hermitize(&(&vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_ascending_on_hermitian_2x2() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen_ascending(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        // Reconstruction.
        let d = CVector::from_iterator(2, vals.iter().map(|&v| c(v, 0.0)));
        let rebuilt = &vecs * CMatrix::from_diagonal(&d) * vecs.adjoint();
        assert!((rebuilt - m).norm() < 1e-12);
    }

    #[test]
    fn rank_and_range_thresholding() {
        let m = CMatrix::from_row_slice(
            3,
            2,
            &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1e-14, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert_eq!(numeric_rank(&m, 1e-10), 1);
        let q = orthonormal_range(&m, 1e-10);
        assert_eq!(q.ncols(), 1);
        assert!((q.adjoint() * &q - CMatrix::identity(1, 1)).norm() < 1e-12);
        let zero = CMatrix::zeros(3, 2);
        assert_eq!(numeric_rank(&zero, 1e-10), 0);
        assert_eq!(orthonormal_range(&zero, 1e-10).ncols(), 0);
    }

    #[test]
    fn eigen_keeps_null_vectors_clean_next_to_a_unit_cluster() {
        // Gramian of a projected frame with one dependent column: couplings
        // ~1e-16 against a ~1e-31 diagonal. The null eigenvector must stay
        // within roundoff of e3.
        let g = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0000000000000004, 0.0),
                c(9.533311383871612e-31, 0.0),
                c(2.449884685636846e-16, 0.0),
                c(9.533311383871612e-31, 0.0),
                c(1.0, 0.0),
                c(2.1852729919623851e-16, 0.0),
                c(2.449884685636846e-16, 0.0),
                c(2.1852729919623851e-16, 0.0),
                c(1.0777353022318182e-31, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen_ascending(&g);
        assert!(vals[0].abs() < 1e-15);
        let null = vecs.column(0);
        assert!(null[0].norm() < 1e-12);
        assert!(null[1].norm() < 1e-12);
        assert!((null[2].norm() - 1.0).abs() < 1e-12);
        // f(G) with the pseudo-inverse square-root map stays near diag(1,1,0).
        let t = hermitian_apply(&g, |v| if v > 1e-10 { 1.0 / v.sqrt() } else { 0.0 });
        let expected = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        assert!((t - expected).norm() < 1e-12);
    }

    #[test]
    fn eigen_random_hermitian_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let n = rng.gen_range(1..=10);
            let base = CMatrix::from_fn(n, n, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let h = hermitize(&base);
            let (vals, vecs) = hermitian_eigen_ascending(&h);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let d = CVector::from_iterator(n, vals.iter().map(|&v| c(v, 0.0)));
            let rebuilt = &vecs * CMatrix::from_diagonal(&d) * vecs.adjoint();
            assert!((rebuilt - &h).norm() < 1e-12 * (1.0 + h.norm()));
            assert!((vecs.adjoint() * &vecs - CMatrix::identity(n, n)).norm() < 1e-13);
        }
    }

    #[test]
    fn projector_is_idempotent_hermitian() {
        let m = CMatrix::from_row_slice(
            3,
            2,
            &[c(1.0, 0.5), c(2.0, 0.0), c(0.0, 1.0), c(1.0, -1.0), c(0.5, 0.0), c(3.0, 0.25)],
        );
        let p = projector_onto_range(&m, 1e-10);
        assert!((&p * &p - &p).norm() < 1e-12);
        assert!(max_hermitian_defect(&p) < 1e-13);
        assert!((&p * &m - m).norm() < 1e-10);
    }
}
