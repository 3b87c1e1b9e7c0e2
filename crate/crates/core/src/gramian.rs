//! Gramian and cross-correlation fibers and the per-fiber frame machinery.
//!
//! For a generator set Φ with fiber matrix F(ω), the Gramian fiber is
//! G(ω) = F(ω)*F(ω) with entries ⟨τφⱼ(ω), τφᵢ(ω)⟩; the spectrum of G over
//! the grid carries the Bessel constant, the frame bounds and the Riesz
//! verdict. The pseudo-inverse square root (G†)^{1/2} turns any spanning set
//! into a canonical Parseval frame fiber by fiber.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::GeneratorSpec;
use crate::fibers::{
    dimension_function, fiber_window, fiberize, DimensionFunction, FiberError, FiberMatrix,
    FrequencyGrid,
};
use crate::linalg;
use crate::sweep;

/// Eigenvalues in (−NEG_EIG_TOL, 0) are roundoff and clamp to 0; anything
/// lower indicates an upstream bug and aborts the analysis.
const NEG_EIG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GramianError {
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error("matrix is not Hermitian (defect {defect:e} exceeds {tol:e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("Gramian at node {node} has eigenvalue {value:e} below -1e-12; diagnostics: {diagnostics}")]
    NegativeEigenvalue { node: usize, value: f64, diagnostics: String },
    #[error("cross-correlation inputs disagree: {0}")]
    FiberMismatch(String),
}

/// d×d Hermitian PSD matrix of fiber inner products at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianFiber {
    pub node_index: usize,
    pub matrix: DMatrix<Complex64>,
}

/// G = F*F, mirrored across the diagonal so it is Hermitian by construction.
pub fn gramian_fiber(fiber: &FiberMatrix) -> GramianFiber {
    let d = fiber.matrix.ncols();
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            // ⟨column j, column i⟩ with the convention ⟨a,b⟩ = Σ aₖ conj(bₖ).
            let v: Complex64 = fiber
                .matrix
                .column(j)
                .iter()
                .zip(fiber.matrix.column(i).iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    for i in 0..d {
        g[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
    }
    GramianFiber { node_index: fiber.node_index, matrix: g }
}

/// (#Ψ)×d matrix of cross inner products at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossGramianFiber {
    pub node_index: usize,
    pub matrix: DMatrix<Complex64>,
}

/// 𝓖(ω) = F_Ψ(ω)* F_Φ(ω): entry (i,j) is ⟨τφⱼ(ω), τψᵢ(ω)⟩. Both fiber
/// matrices must live on the same window and node.
pub fn cross_gramian_fiber(
    f_phi: &FiberMatrix,
    f_psi: &FiberMatrix,
) -> Result<CrossGramianFiber, GramianError> {
    if f_phi.node_index != f_psi.node_index {
        return Err(GramianError::FiberMismatch(format!(
            "node {} vs node {}",
            f_phi.node_index, f_psi.node_index
        )));
    }
    if f_phi.window.indices() != f_psi.window.indices() {
        return Err(GramianError::FiberMismatch("fiber windows differ".into()));
    }
    Ok(CrossGramianFiber {
        node_index: f_phi.node_index,
        matrix: f_psi.matrix.adjoint() * &f_phi.matrix,
    })
}

/// Real eigenvalues of a Hermitian matrix, ascending. Inputs with Hermitian
/// defect above 1e−10 are rejected.
pub fn hermitian_spectrum(matrix: &DMatrix<Complex64>) -> Result<Vec<f64>, GramianError> {
    let defect = linalg::max_hermitian_defect(matrix);
    if defect > 1e-10 {
        return Err(GramianError::NotHermitian { defect, tol: 1e-10 });
    }
    Ok(linalg::hermitian_eigen_ascending(matrix).0)
}

/// PSD spectrum of a Gramian fiber with the clamp policy applied.
fn psd_spectrum(g: &GramianFiber) -> Result<Vec<f64>, GramianError> {
    let mut values = hermitian_spectrum(&g.matrix)?;
    for v in &mut values {
        if *v < 0.0 {
            if *v < -NEG_EIG_TOL {
                return Err(GramianError::NegativeEigenvalue {
                    node: g.node_index,
                    value: *v,
                    diagnostics: format!("{:?}", g.matrix),
                });
            }
            *v = 0.0;
        }
    }
    Ok(values)
}

/// Grid-level frame verdicts for a generator set.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    /// Bessel constant: grid max of the largest Gramian eigenvalue.
    pub bessel_bound: f64,
    /// Grid min of the smallest eigenvalue above spec_tol·β; None when no
    /// positive eigenvalue clears the threshold anywhere.
    pub frame_lower: Option<f64>,
    pub is_frame_sequence: bool,
    pub is_riesz: bool,
    pub dim_fn: DimensionFunction,
    /// Grid surrogate for len(S): the max of the dimension function.
    pub length_estimate: usize,
    /// α/β, recorded alongside the frame verdict.
    pub gap_ratio: Option<f64>,
}

/// Sweeps the Gramian spectra over the grid. β is the global largest
/// eigenvalue; α the smallest eigenvalue exceeding spec_tol·β (global
/// threshold, so a genuinely vanishing lower bound reports as "no positive α"
/// rather than a spurious tiny one); the nonzero spectra lie in [α, β] by
/// construction. Riesz needs a constant dimension function and exactly d
/// nonzero eigenvalues at every node.
pub fn frame_analysis(
    generators: &[GeneratorSpec],
    grid: &FrequencyGrid,
    rank_tol: f64,
    spec_tol: f64,
) -> Result<FrameAnalysis, GramianError> {
    let window = Arc::new(fiber_window(generators)?);
    let d = generators.len();
    let spectra: Vec<Vec<f64>> = sweep(grid.len(), |i| {
        let fiber = fiberize(generators, grid, i, &window)?;
        psd_spectrum(&gramian_fiber(&fiber))
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let beta = spectra
        .iter()
        .flat_map(|s| s.iter().copied())
        .fold(0.0f64, f64::max);
    let threshold = spec_tol * beta;
    let alpha = spectra
        .iter()
        .flat_map(|s| s.iter().copied())
        .filter(|&v| v > threshold)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));

    let dim_fn = dimension_function(generators, grid, rank_tol)?;
    let full_rank_everywhere =
        spectra.iter().all(|s| s.iter().filter(|&&v| v > threshold).count() == d);
    let is_riesz = d > 0 && dim_fn.is_constant() && full_rank_everywhere;

    Ok(FrameAnalysis {
        bessel_bound: beta,
        frame_lower: alpha,
        is_frame_sequence: alpha.is_some(),
        is_riesz,
        length_estimate: dim_fn.max(),
        gap_ratio: alpha.map(|a| a / beta),
        dim_fn,
    })
}

/// (G†)^{1/2}: eigenvalues at or below cut_tol·λ_max are treated as exact
/// zeros, the rest map to λ^{−1/2}.
pub fn pinv_sqrt(g: &GramianFiber, cut_tol: f64) -> Result<DMatrix<Complex64>, GramianError> {
    let values = psd_spectrum(g)?;
    let lambda_max = values.last().copied().unwrap_or(0.0);
    let threshold = cut_tol * lambda_max;
    Ok(linalg::hermitian_apply(&g.matrix, |v| {
        if v > threshold && v > 0.0 {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    }))
}

/// Canonical Parseval transform at every node: F̃(ω) = F(ω)·(G(ω)†)^{1/2}.
/// The Gramian of F̃ is the orthogonal projection onto the coefficient range,
/// so the transformed columns are a Parseval frame for J_S(ω); the column
/// count is preserved.
pub fn canonical_parseval(
    generators: &[GeneratorSpec],
    grid: &FrequencyGrid,
    cut_tol: f64,
) -> Result<Vec<FiberMatrix>, GramianError> {
    let window = Arc::new(fiber_window(generators)?);
    sweep(grid.len(), |i| {
        let fiber = fiberize(generators, grid, i, &window)?;
        parsevalize_fiber(&fiber, cut_tol)
    })
    .into_iter()
    .collect()
}

/// Single-node canonical Parseval transform.
pub fn parsevalize_fiber(fiber: &FiberMatrix, cut_tol: f64) -> Result<FiberMatrix, GramianError> {
    let t = pinv_sqrt(&gramian_fiber(fiber), cut_tol)?;
    Ok(FiberMatrix {
        node_index: fiber.node_index,
        window: Arc::clone(&fiber.window),
        matrix: &fiber.matrix * t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{fixtures, SampledFibers};
    use crate::fibers::midpoint_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn fibers_at(gens: &[GeneratorSpec], grid: &FrequencyGrid, node: usize) -> FiberMatrix {
        let window = Arc::new(fiber_window(gens).unwrap());
        fiberize(gens, grid, node, &window).unwrap()
    }

    #[test]
    fn gramian_of_hand_built_ominus_frames_is_identity() {
        let gens = vec![fixtures::phi1(), fixtures::phi5()];
        let grid = midpoint_grid(1, 16);
        for i in 0..grid.len() {
            let g = gramian_fiber(&fibers_at(&gens, &grid, i));
            assert!((g.matrix - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
        let phi_prime = vec![fixtures::phi0()];
        let g = gramian_fiber(&fibers_at(&phi_prime, &grid, 3));
        assert!((g.matrix[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gramian_zero_column_gives_zero_row_and_column() {
        let gens = vec![fixtures::phi2(), fixtures::chi_half()];
        let grid = midpoint_grid(1, 8);
        // On [1/2,1) the chi_half fiber vanishes.
        let g = gramian_fiber(&fibers_at(&gens, &grid, 6));
        assert_eq!(g.matrix[(1, 1)], c(0.0, 0.0));
        assert_eq!(g.matrix[(0, 1)], c(0.0, 0.0));
        assert_eq!(g.matrix[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn cross_gramian_of_hand_built_frames_is_a_cosine_row() {
        // 𝓖_{Φ,Φ'}(ω) = (cos 2πω, 0) for Φ = {φ1, φ5}, Φ' = {φ0}.
        let phi = vec![fixtures::phi1(), fixtures::phi5()];
        let phi_prime = vec![fixtures::phi0()];
        let all = vec![fixtures::phi1(), fixtures::phi5(), fixtures::phi0()];
        let grid = midpoint_grid(1, 16);
        let window = Arc::new(fiber_window(&all).unwrap());
        for i in 0..grid.len() {
            let f_phi = fiberize(&phi, &grid, i, &window).unwrap();
            let f_prime = fiberize(&phi_prime, &grid, i, &window).unwrap();
            let cross = cross_gramian_fiber(&f_phi, &f_prime).unwrap();
            let w = crate::rational::to_f64(&grid.node(i).coords[0]);
            let expected = (2.0 * std::f64::consts::PI * w).cos();
            assert!((cross.matrix[(0, 0)] - c(expected, 0.0)).norm() < 1e-12);
            assert!(cross.matrix[(0, 1)].norm() < 1e-14);
        }
    }

    #[test]
    fn cross_gramian_diagonal_equals_gramian() {
        let gens = vec![fixtures::phi1(), fixtures::phi2()];
        let grid = midpoint_grid(1, 4);
        let f = fibers_at(&gens, &grid, 1);
        let cross = cross_gramian_fiber(&f, &f).unwrap();
        let gram = gramian_fiber(&f);
        assert!((cross.matrix - gram.matrix).norm() < 1e-13);
    }

    #[test]
    fn cross_gramian_random_inner_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let window = Arc::new(
            crate::fibers::FiberWindow::from_indices(1, (0..5).map(|k| vec![k]).collect()).unwrap(),
        );
        for _ in 0..30 {
            let f_phi = FiberMatrix {
                node_index: 0,
                window: Arc::clone(&window),
                matrix: random_matrix(&mut rng, 5, 3),
            };
            let f_psi = FiberMatrix {
                node_index: 0,
                window: Arc::clone(&window),
                matrix: random_matrix(&mut rng, 5, 2),
            };
            let cross = cross_gramian_fiber(&f_phi, &f_psi).unwrap();
            for i in 0..2 {
                for j in 0..3 {
                    let direct: Complex64 = (0..5)
                        .map(|k| f_phi.matrix[(k, j)] * f_psi.matrix[(k, i)].conj())
                        .sum();
                    assert!((cross.matrix[(i, j)] - direct).norm() < 1e-12);
                }
            }
            let rank_cross = crate::linalg::numeric_rank(&cross.matrix, 1e-10);
            let rank_phi = crate::linalg::numeric_rank(&f_phi.matrix, 1e-10);
            let rank_psi = crate::linalg::numeric_rank(&f_psi.matrix, 1e-10);
            assert!(rank_cross <= rank_phi.min(rank_psi));
        }
    }

    #[test]
    fn cross_gramian_rejects_mismatched_fibers() {
        let gens = vec![fixtures::phi0()];
        let grid = midpoint_grid(1, 4);
        let window = Arc::new(fiber_window(&gens).unwrap());
        let a = fiberize(&gens, &grid, 0, &window).unwrap();
        let b = fiberize(&gens, &grid, 1, &window).unwrap();
        assert!(matches!(cross_gramian_fiber(&a, &b), Err(GramianError::FiberMismatch(_))));
    }

    #[test]
    fn hermitian_spectrum_golden_cases() {
        let id = DMatrix::identity(2, 2);
        assert_eq!(hermitian_spectrum(&id).unwrap(), vec![1.0, 1.0]);

        // (cos θ, 0)ᵀ(cos θ, 0): eigenvalues (0, cos²θ).
        let theta = 0.7f64;
        let row = DMatrix::from_row_slice(1, 2, &[c(theta.cos(), 0.0), c(0.0, 0.0)]);
        let outer = row.adjoint() * &row;
        let spec = hermitian_spectrum(&outer).unwrap();
        assert!(spec[0].abs() < 1e-14);
        assert!((spec[1] - theta.cos().powi(2)).abs() < 1e-14);

        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, 0.0),
            c(0.25, 0.0),
            c(4.0, 0.0),
        ]));
        assert_eq!(hermitian_spectrum(&diag).unwrap(), vec![0.0, 0.25, 4.0]);

        let skew = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(hermitian_spectrum(&skew), Err(GramianError::NotHermitian { .. })));
    }

    #[test]
    fn frame_analysis_no_riesz_generator() {
        let gens = vec![fixtures::chi_half()];
        let grid = midpoint_grid(1, 8);
        let fa = frame_analysis(&gens, &grid, 1e-10, 1e-10).unwrap();
        assert!((fa.bessel_bound - 1.0).abs() < 1e-12);
        assert!((fa.frame_lower.unwrap() - 1.0).abs() < 1e-12);
        assert!(fa.is_frame_sequence);
        assert!(!fa.is_riesz);
        assert_eq!(fa.length_estimate, 1);
    }

    #[test]
    fn frame_analysis_example6_u_is_riesz() {
        let gens = vec![fixtures::phi1(), fixtures::phi2(), fixtures::phi3()];
        let grid = midpoint_grid(1, 32);
        let fa = frame_analysis(&gens, &grid, 1e-10, 1e-10).unwrap();
        assert!((fa.bessel_bound - 1.0).abs() < 1e-12);
        assert!((fa.frame_lower.unwrap() - 1.0).abs() < 1e-12);
        assert!(fa.is_riesz);
        assert!(fa.dim_fn.is_constant());
        assert_eq!(fa.length_estimate, 3);
    }

    #[test]
    fn frame_analysis_empty_set_is_degenerate() {
        let grid = midpoint_grid(1, 4);
        let fa = frame_analysis(&[], &grid, 1e-10, 1e-10).unwrap();
        assert_eq!(fa.bessel_bound, 0.0);
        assert_eq!(fa.frame_lower, None);
        assert!(!fa.is_frame_sequence);
        assert!(!fa.is_riesz);
        assert_eq!(fa.length_estimate, 0);
    }

    #[test]
    fn pinv_sqrt_golden_and_property() {
        let id = GramianFiber { node_index: 0, matrix: DMatrix::identity(3, 3) };
        assert!((pinv_sqrt(&id, 1e-10).unwrap() - DMatrix::identity(3, 3)).norm() < 1e-13);

        let diag = GramianFiber {
            node_index: 0,
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(4.0, 0.0), c(0.0, 0.0)])),
        };
        let t = pinv_sqrt(&diag, 1e-10).unwrap();
        assert!((t[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        assert!(t[(1, 1)].norm() < 1e-14);

        // (G†)^{1/2} G (G†)^{1/2} is the projector onto range(G).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let cols = rng.gen_range(1..=4);
            let base = random_matrix(&mut rng, 4, cols);
            let g = GramianFiber { node_index: 0, matrix: base.adjoint() * &base };
            let t = pinv_sqrt(&g, 1e-10).unwrap();
            let projector = crate::linalg::projector_onto_range(&g.matrix, 1e-10);
            assert!((&t * &g.matrix * &t - projector).norm() < 1e-10);
        }
    }

    #[test]
    fn pinv_sqrt_rejects_indefinite_input() {
        let g = GramianFiber {
            node_index: 5,
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-1e-6, 0.0)])),
        };
        assert!(matches!(pinv_sqrt(&g, 1e-10), Err(GramianError::NegativeEigenvalue { node: 5, .. })));
    }

    #[test]
    fn canonical_parseval_fixed_points_and_chi() {
        // Orthonormal fiber columns are unchanged.
        let gens = vec![fixtures::phi1(), fixtures::phi2(), fixtures::phi3()];
        let grid = midpoint_grid(1, 8);
        let window = Arc::new(fiber_window(&gens).unwrap());
        let transformed = canonical_parseval(&gens, &grid, 1e-10).unwrap();
        for (i, ft) in transformed.iter().enumerate() {
            let f = fiberize(&gens, &grid, i, &window).unwrap();
            assert!((&ft.matrix - &f.matrix).norm() < 1e-12);
            assert_eq!(ft.generator_count(), 3);
        }

        // χ_[0,1/2): unchanged on [0,1/2), zero fiber on [1/2,1).
        let chi = vec![fixtures::chi_half()];
        let transformed = canonical_parseval(&chi, &grid, 1e-10).unwrap();
        for (i, ft) in transformed.iter().enumerate() {
            if i < 4 {
                assert!((ft.matrix[(0, 0)] - c(1.0, 0.0)).norm() < 1e-13);
            } else {
                assert_eq!(ft.matrix[(0, 0)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn canonical_parseval_random_projection_property() {
        // Transformed Gramians are idempotent and the fiber span is kept.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = 8;
        let grid = midpoint_grid(1, m);
        let window: Vec<Vec<i64>> = (0..4).map(|k| vec![k]).collect();
        for _ in 0..10 {
            let gens: Vec<GeneratorSpec> = (0..2)
                .map(|j| {
                    let entries: Vec<(usize, Vec<i64>, Complex64)> = (0..m)
                        .flat_map(|node| {
                            let mut rows = Vec::new();
                            for k in 0..4i64 {
                                rows.push((node, vec![k], c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                            }
                            rows
                        })
                        .collect();
                    GeneratorSpec::sampled(
                        format!("g{j}"),
                        SampledFibers::new(1, m, window.clone(), entries).unwrap(),
                    )
                })
                .collect();
            let arc_window = Arc::new(fiber_window(&gens).unwrap());
            let transformed = canonical_parseval(&gens, &grid, 1e-10).unwrap();
            for (i, ft) in transformed.iter().enumerate() {
                let gt = gramian_fiber(ft).matrix;
                assert!((&gt * &gt - &gt).norm() < 1e-10);
                let f = fiberize(&gens, &grid, i, &arc_window).unwrap();
                let p_before = crate::fibers::fiber_projection(&f, 1e-10);
                let p_after = crate::fibers::fiber_projection(ft, 1e-10);
                assert!((p_before - p_after).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_transfer_identity() {
        // Nonzero eigenvalues of 𝓖𝓖* and 𝓖*𝓖 coincide.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = rng.gen_range(1..=6);
            let d = rng.gen_range(1..=6);
            let g = random_matrix(&mut rng, m, d);
            let left = hermitian_spectrum(&crate::linalg::hermitize(&(&g * g.adjoint()))).unwrap();
            let right = hermitian_spectrum(&crate::linalg::hermitize(&(g.adjoint() * &g))).unwrap();
            let k = m.min(d);
            let top_left: Vec<f64> = left.iter().rev().take(k).copied().collect();
            let top_right: Vec<f64> = right.iter().rev().take(k).copied().collect();
            for (a, b) in top_left.iter().zip(&top_right) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn frame_flags_invariant_under_mixing() {
        // Replacing fibers by F·T (T invertible) keeps the dimension function
        // and the Riesz dimension-constancy verdict.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = 6;
        let grid = midpoint_grid(1, m);
        let window: Vec<Vec<i64>> = (0..3).map(|k| vec![k]).collect();
        let d = 2;
        let data: Vec<DMatrix<Complex64>> =
            (0..m).map(|_| random_matrix(&mut rng, 3, d)).collect();
        let mut t = random_matrix(&mut rng, d, d);
        for j in 0..d {
            t[(j, j)] += c(2.0, 0.0);
        }
        let build = |prefix: &str, fibers: &[DMatrix<Complex64>]| -> Vec<GeneratorSpec> {
            (0..d)
                .map(|j| {
                    let entries: Vec<(usize, Vec<i64>, Complex64)> = fibers
                        .iter()
                        .enumerate()
                        .flat_map(|(node, f)| (0..3usize).map(move |k| (node, vec![k as i64], f[(k, j)])))
                        .collect();
                    GeneratorSpec::sampled(
                        format!("{prefix}{j}"),
                        SampledFibers::new(1, m, window.clone(), entries).unwrap(),
                    )
                })
                .collect()
        };
        let mixed: Vec<DMatrix<Complex64>> = data.iter().map(|f| f * &t).collect();
        let fa = frame_analysis(&build("a", &data), &grid, 1e-10, 1e-10).unwrap();
        let fb = frame_analysis(&build("b", &mixed), &grid, 1e-10, 1e-10).unwrap();
        assert_eq!(fa.dim_fn, fb.dim_fn);
        assert_eq!(fa.is_riesz, fb.is_riesz);
    }
}
