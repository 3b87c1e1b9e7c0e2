//! Injectivity and stability certification of the sampling operator, on a
//! single subspace and on unions, in the finite-dimensional setting and for
//! finitely generated shift-invariant spaces.
//!
//! Everything reduces to the pair of conditions on the cross-correlation of
//! the analyzed subspace against the sampling set: the rank condition
//! rank(G_{Φ,Ψ}) = dim S decides injectivity, and with Φ a Parseval frame the
//! squared singular values σ²(G_{Φ,Ψ}) lying in {0} ∪ [α,β] decide stability
//! with those bounds. A union is handled through the sums of every two of
//! its subspaces (the diagonal included, so single-space questions are the
//! γ=θ case). For non-closed sums the rank condition is sufficient only;
//! the report upgrades a pair to necessary-and-sufficient exactly when the
//! closedness of the sum is certified through the Friedrichs angle.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::GeneratorSpec;
use crate::fibers::{fiber_window, fiberize, FiberError, FrequencyGrid};
use crate::gramian::{
    cross_gramian_fiber, frame_analysis, parsevalize_fiber, pinv_sqrt, FrameAnalysis,
    GramianError, GramianFiber,
};
use crate::linalg;
use crate::subspaces::{
    friedrichs_angle, sum_closure_generators, SubspaceError, SubspacePair, Verdict,
};
use crate::{sweep, Tolerances};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error("Φ is not a Parseval frame (projection defect {defect:e}) and auto-canonicalization is disabled")]
    NonParseval { defect: f64 },
    #[error("a union model needs at least one subspace")]
    EmptyUnion,
    #[error("union model mixes representations; expected {expected} subspaces")]
    WrongMode { expected: &'static str },
    #[error("ambient dimensions disagree: subspace `{name}` has {got} rows, expected {expected}")]
    AmbientMismatch { name: String, got: usize, expected: usize },
}

/// One subspace of a union: generator functions (FSIS mode) or an ambient
/// basis matrix (finite-dimensional mode).
#[derive(Debug, Clone)]
pub enum SubspaceData {
    Generators(Vec<GeneratorSpec>),
    Basis(DMatrix<Complex64>),
}

/// χ = ⋃ S_γ. Pairwise analysis runs over all unordered pairs including
/// γ=θ, so the union report subsumes single-subspace analysis.
#[derive(Debug, Clone)]
pub struct UnionModel {
    pub subspaces: Vec<(String, SubspaceData)>,
}

impl UnionModel {
    pub fn new(subspaces: Vec<(String, SubspaceData)>) -> Result<Self, SamplingError> {
        if subspaces.is_empty() {
            return Err(SamplingError::EmptyUnion);
        }
        Ok(UnionModel { subspaces })
    }
}

/// The sampling set Ψ in FSIS mode, Bessel-validated on the grid (the Bessel
/// constant is the grid max of the largest Gramian eigenvalue of its fibers).
#[derive(Debug, Clone)]
pub struct SamplingSet {
    pub generators: Vec<GeneratorSpec>,
    pub bessel: FrameAnalysis,
}

impl SamplingSet {
    pub fn validate(
        generators: Vec<GeneratorSpec>,
        grid: &FrequencyGrid,
        tol: &Tolerances,
    ) -> Result<Self, SamplingError> {
        let bessel = frame_analysis(&generators, grid, tol.rank_tol, tol.spec_tol)?;
        Ok(SamplingSet { generators, bessel })
    }

    /// #I: the number of sampling generators.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBounds {
    pub alpha: f64,
    pub beta: f64,
}

/// Stability of the sampling operator on one (pair) subspace.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilityOutcome {
    Stable(StabilityBounds),
    /// The subspace is zero-dimensional (everywhere on the grid): the
    /// restriction of A is vacuously stable and carries no bounds.
    Vacuous,
    /// The rank condition failed; witness nodes listed (empty in the
    /// finite-dimensional mode, which has no grid).
    RankFailure { witness_nodes: Vec<usize> },
}

impl StabilityOutcome {
    pub fn is_stable(&self) -> bool {
        !matches!(self, StabilityOutcome::RankFailure { .. })
    }

    pub fn bounds(&self) -> Option<StabilityBounds> {
        match self {
            StabilityOutcome::Stable(b) => Some(*b),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-dimensional mode (ambient space ℂ^N)
// ---------------------------------------------------------------------------

/// A is one-to-one on S = range(Φ) iff rank(Ψ*Φ) = rank(Φ): the kernel of
/// the cross-correlation equals the kernel of the synthesis operator.
pub fn fd_injectivity(phi: &DMatrix<Complex64>, psi: &DMatrix<Complex64>, rank_tol: f64) -> bool {
    let cross = psi.adjoint() * phi;
    linalg::numeric_rank(&cross, rank_tol) == linalg::numeric_rank(phi, rank_tol)
}

/// Canonical Parseval frame matrix for range(Φ): Φ·((Φ*Φ)†)^{1/2}.
pub fn fd_canonical_parseval(
    phi: &DMatrix<Complex64>,
    cut_tol: f64,
) -> Result<DMatrix<Complex64>, SamplingError> {
    let g = GramianFiber { node_index: 0, matrix: linalg::hermitize(&(phi.adjoint() * phi)) };
    Ok(phi * pinv_sqrt(&g, cut_tol)?)
}

fn parseval_defect(phi: &DMatrix<Complex64>) -> f64 {
    let p = phi * phi.adjoint();
    (&p * &p - &p).norm()
}

/// Stability bounds on S from a Parseval frame matrix Φ: σ² of the cross
/// matrix Ψ*Φ, with α the smallest and β the largest value above the
/// spec_tol threshold. Non-Parseval input is canonicalized when allowed,
/// rejected otherwise; a failed rank condition reports as RankFailure.
pub fn fd_stability(
    phi: &DMatrix<Complex64>,
    psi: &DMatrix<Complex64>,
    tol: &Tolerances,
    auto_canonicalize: bool,
) -> Result<StabilityOutcome, SamplingError> {
    let defect = parseval_defect(phi);
    let parseval;
    let phi = if defect <= 1e-10 {
        phi
    } else if auto_canonicalize {
        parseval = fd_canonical_parseval(phi, tol.rank_tol)?;
        &parseval
    } else {
        return Err(SamplingError::NonParseval { defect });
    };
    let dim = linalg::numeric_rank(phi, tol.rank_tol);
    let cross = psi.adjoint() * phi;
    if linalg::numeric_rank(&cross, tol.rank_tol) != dim {
        return Ok(StabilityOutcome::RankFailure { witness_nodes: Vec::new() });
    }
    if dim == 0 {
        return Ok(StabilityOutcome::Vacuous);
    }
    let sigma_sq: Vec<f64> = linalg::singular_values(&cross).iter().map(|s| s * s).collect();
    let largest = sigma_sq.first().copied().unwrap_or(0.0);
    let threshold = tol.spec_tol * largest;
    let nonzero: Vec<f64> = sigma_sq.into_iter().filter(|&v| v > threshold).collect();
    match (nonzero.last(), nonzero.first()) {
        (Some(&alpha), Some(&beta)) => Ok(StabilityOutcome::Stable(StabilityBounds { alpha, beta })),
        _ => Ok(StabilityOutcome::Vacuous),
    }
}

// ---------------------------------------------------------------------------
// Shared report structure
// ---------------------------------------------------------------------------

/// How the pair injectivity claim must be read: rank equality on the closure
/// of a non-closed sum is only sufficient for injectivity on the sum itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectivityLabel {
    SufficientOnly,
    NecessaryAndSufficient,
}

impl std::fmt::Display for InjectivityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InjectivityLabel::SufficientOnly => "SUFFICIENT-ONLY",
            InjectivityLabel::NecessaryAndSufficient => "NECESSARY-AND-SUFFICIENT",
        })
    }
}

/// Per-node data for one pair (FSIS mode only).
#[derive(Debug, Clone, PartialEq)]
pub struct PairNodeData {
    pub node_index: usize,
    pub dim: usize,
    pub cross_rank: usize,
    pub rank_ok: bool,
    /// Smallest σ² above the pair-global threshold at this node; None when
    /// the fiber is zero-dimensional.
    pub sigma2_min_nonzero: Option<f64>,
    pub sigma2_max: Option<f64>,
}

/// Verdicts for one pair (γ, θ) of the union.
#[derive(Debug, Clone)]
pub struct PairReport {
    pub gamma: String,
    pub theta: String,
    pub closure_generator_names: Vec<String>,
    /// Pair dimension: rank in finite-dim mode, length estimate (grid max of
    /// the closure dimension function) in FSIS mode.
    pub dim: usize,
    pub injective: bool,
    pub witness_nodes: Vec<usize>,
    pub label: InjectivityLabel,
    pub stability: StabilityOutcome,
    /// Closedness verdict of S_γ + S_θ (FSIS mode only).
    pub angle_verdict: Option<Verdict>,
    pub per_node: Vec<PairNodeData>,
}

/// Union-level aggregation of the pairwise records.
#[derive(Debug, Clone)]
pub struct SamplingReport {
    pub pairs: Vec<PairReport>,
    pub injective: bool,
    pub stable: bool,
    /// min over pairs of α / max over pairs of β; None unless every pair is
    /// stable and at least one carries bounds.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// #I and the lower bound sup over pairs of the pair dimension.
    pub sample_count: usize,
    pub required_samples: usize,
    pub meets_sample_bound: bool,
}

fn aggregate_report(pairs: Vec<PairReport>, sample_count: usize) -> SamplingReport {
    let injective = pairs.iter().all(|p| p.injective);
    let stable = pairs.iter().all(|p| p.stability.is_stable());
    let bounds: Vec<StabilityBounds> = pairs.iter().filter_map(|p| p.stability.bounds()).collect();
    let (alpha, beta) = if stable && !bounds.is_empty() {
        (
            Some(bounds.iter().map(|b| b.alpha).fold(f64::INFINITY, f64::min)),
            Some(bounds.iter().map(|b| b.beta).fold(0.0f64, f64::max)),
        )
    } else {
        (None, None)
    };
    let required_samples = pairs.iter().map(|p| p.dim).max().unwrap_or(0);
    SamplingReport {
        injective,
        stable,
        alpha,
        beta,
        sample_count,
        required_samples,
        meets_sample_bound: sample_count >= required_samples,
        pairs,
    }
}

/// Pairwise injectivity and stability over a finite-dimensional union model.
/// Each pair sum Φ_{γ,θ} = [Φ_γ | Φ_θ] is canonically Parsevalized before the
/// spectral conditions; finite-dimensional sums are closed, so every pair
/// verdict is necessary and sufficient.
pub fn fd_union_report(
    model: &UnionModel,
    psi: &DMatrix<Complex64>,
    tol: &Tolerances,
) -> Result<SamplingReport, SamplingError> {
    let mut bases: Vec<(&str, &DMatrix<Complex64>)> = Vec::with_capacity(model.subspaces.len());
    for (name, data) in &model.subspaces {
        match data {
            SubspaceData::Basis(b) => {
                if b.nrows() != psi.nrows() {
                    return Err(SamplingError::AmbientMismatch {
                        name: name.clone(),
                        got: b.nrows(),
                        expected: psi.nrows(),
                    });
                }
                bases.push((name, b));
            }
            SubspaceData::Generators(_) => {
                return Err(SamplingError::WrongMode { expected: "basis-matrix" })
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..bases.len() {
        for j in i..bases.len() {
            let (gamma, phi_g) = bases[i];
            let (theta, phi_t) = bases[j];
            let phi_pair = if i == j {
                (*phi_g).clone()
            } else {
                let mut m = DMatrix::zeros(phi_g.nrows(), phi_g.ncols() + phi_t.ncols());
                m.view_mut((0, 0), (phi_g.nrows(), phi_g.ncols())).copy_from(phi_g);
                m.view_mut((0, phi_g.ncols()), (phi_t.nrows(), phi_t.ncols())).copy_from(phi_t);
                m
            };
            let dim = linalg::numeric_rank(&phi_pair, tol.rank_tol);
            let injective = fd_injectivity(&phi_pair, psi, tol.rank_tol);
            let stability = fd_stability(&phi_pair, psi, tol, true)?;
            pairs.push(PairReport {
                gamma: gamma.to_string(),
                theta: theta.to_string(),
                closure_generator_names: Vec::new(),
                dim,
                injective,
                witness_nodes: Vec::new(),
                label: InjectivityLabel::NecessaryAndSufficient,
                stability,
                angle_verdict: None,
                per_node: Vec::new(),
            });
        }
    }
    Ok(aggregate_report(pairs, psi.ncols()))
}

// ---------------------------------------------------------------------------
// FSIS mode
// ---------------------------------------------------------------------------

/// Per-node cross-correlation data of one subspace against the sampling set.
struct NodeSpectrum {
    dim: usize,
    cross_rank: usize,
    /// Descending σ² of the cross matrix against the canonically
    /// Parsevalized subspace fibers.
    sigma_sq: Vec<f64>,
}

/// One sweep serving injectivity (raw ranks) and stability (Parseval σ²).
fn sweep_pair_spectra(
    s_gens: &[GeneratorSpec],
    psi: &SamplingSet,
    grid: &FrequencyGrid,
    tol: &Tolerances,
) -> Result<Vec<NodeSpectrum>, SamplingError> {
    let mut all = s_gens.to_vec();
    all.extend(psi.generators.iter().cloned());
    let window = Arc::new(fiber_window(&all)?);
    sweep(grid.len(), |i| -> Result<NodeSpectrum, SamplingError> {
        let f_s = fiberize(s_gens, grid, i, &window)?;
        let f_psi = fiberize(&psi.generators, grid, i, &window)?;
        let dim = linalg::numeric_rank(&f_s.matrix, tol.rank_tol);
        let raw_cross = cross_gramian_fiber(&f_s, &f_psi)?;
        let cross_rank = linalg::numeric_rank(&raw_cross.matrix, tol.rank_tol);
        let f_tilde = parsevalize_fiber(&f_s, tol.rank_tol)?;
        let cross = cross_gramian_fiber(&f_tilde, &f_psi)?;
        let sigma_sq = linalg::singular_values(&cross.matrix).iter().map(|s| s * s).collect();
        Ok(NodeSpectrum { dim, cross_rank, sigma_sq })
    })
    .into_iter()
    .collect()
}

fn per_node_data(
    spectra: &[NodeSpectrum],
    spec_tol: f64,
) -> (Vec<PairNodeData>, Option<StabilityBounds>) {
    let global_max = spectra
        .iter()
        .flat_map(|n| n.sigma_sq.first().copied())
        .fold(0.0f64, f64::max);
    let threshold = spec_tol * global_max;
    let mut alpha: Option<f64> = None;
    let mut beta: Option<f64> = None;
    let rows = spectra
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let nonzero: Vec<f64> = n.sigma_sq.iter().copied().filter(|&v| v > threshold).collect();
            let node_max = nonzero.first().copied();
            let node_min = nonzero.last().copied();
            if let Some(v) = node_min {
                alpha = Some(alpha.map_or(v, |a| a.min(v)));
            }
            if let Some(v) = node_max {
                beta = Some(beta.map_or(v, |b| b.max(v)));
            }
            PairNodeData {
                node_index: i,
                dim: n.dim,
                cross_rank: n.cross_rank,
                rank_ok: n.cross_rank == n.dim,
                sigma2_min_nonzero: node_min,
                sigma2_max: node_max,
            }
        })
        .collect();
    let bounds = match (alpha, beta) {
        (Some(alpha), Some(beta)) => Some(StabilityBounds { alpha, beta }),
        _ => None,
    };
    (rows, bounds)
}

/// Per-node injectivity check of an FSIS against the sampling set:
/// rank(𝓖_{Φ,Ψ}(ω)) must equal dim_S(ω) at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectivityCheck {
    pub injective: bool,
    pub witness_nodes: Vec<usize>,
}

pub fn sis_injectivity(
    s_gens: &[GeneratorSpec],
    psi: &SamplingSet,
    grid: &FrequencyGrid,
    tol: &Tolerances,
) -> Result<InjectivityCheck, SamplingError> {
    let spectra = sweep_pair_spectra(s_gens, psi, grid, tol)?;
    let witness_nodes: Vec<usize> = spectra
        .iter()
        .enumerate()
        .filter(|(_, n)| n.cross_rank != n.dim)
        .map(|(i, _)| i)
        .collect();
    Ok(InjectivityCheck { injective: witness_nodes.is_empty(), witness_nodes })
}

/// Stability of the sampling operator on S(Φ): the generators are replaced
/// by their canonical Parseval transform fiberwise, then α and β are the
/// grid extremes of the nonzero σ² of the cross matrices. Any node failing
/// the rank condition fails stability.
pub fn sis_stability(
    s_gens: &[GeneratorSpec],
    psi: &SamplingSet,
    grid: &FrequencyGrid,
    tol: &Tolerances,
) -> Result<StabilityOutcome, SamplingError> {
    let spectra = sweep_pair_spectra(s_gens, psi, grid, tol)?;
    let witness_nodes: Vec<usize> = spectra
        .iter()
        .enumerate()
        .filter(|(_, n)| n.cross_rank != n.dim)
        .map(|(i, _)| i)
        .collect();
    if !witness_nodes.is_empty() {
        return Ok(StabilityOutcome::RankFailure { witness_nodes });
    }
    let (_, bounds) = per_node_data(&spectra, tol.spec_tol);
    Ok(match bounds {
        Some(b) => StabilityOutcome::Stable(b),
        None => StabilityOutcome::Vacuous,
    })
}

/// One row of the spectrum curve: the stability conditions rendered per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub node_index: usize,
    pub sigma2_min_nonzero: Option<f64>,
    pub sigma2_max: Option<f64>,
    pub rank: usize,
    pub dim: usize,
}

/// Per-node σ² extremes, cross rank and dimension of S against Ψ, in grid
/// node order (lexicographic for n ≥ 2).
pub fn spectrum_curve(
    s_gens: &[GeneratorSpec],
    psi: &SamplingSet,
    grid: &FrequencyGrid,
    tol: &Tolerances,
) -> Result<Vec<SpectrumRow>, SamplingError> {
    let spectra = sweep_pair_spectra(s_gens, psi, grid, tol)?;
    let (rows, _) = per_node_data(&spectra, tol.spec_tol);
    Ok(rows
        .into_iter()
        .map(|r| SpectrumRow {
            node_index: r.node_index,
            sigma2_min_nonzero: r.sigma2_min_nonzero,
            sigma2_max: r.sigma2_max,
            rank: r.cross_rank,
            dim: r.dim,
        })
        .collect())
}

/// Pairwise report over a union of FSISs. For each unordered pair the
/// closure of the sum is generated by the union of the generator sets
/// (diagonal pairs reuse the single set), canonically Parsevalized, and
/// checked per node. Injectivity is labeled SUFFICIENT-ONLY unless the
/// pair's Friedrichs verdict certifies the sum closed; the sample-count
/// lower bound is #I ≥ max pair length estimate.
pub fn sis_union_report(
    model: &UnionModel,
    psi: &SamplingSet,
    grid: &FrequencyGrid,
    tol: &Tolerances,
) -> Result<SamplingReport, SamplingError> {
    let mut sets: Vec<(&str, &[GeneratorSpec])> = Vec::with_capacity(model.subspaces.len());
    for (name, data) in &model.subspaces {
        match data {
            SubspaceData::Generators(g) => sets.push((name, g)),
            SubspaceData::Basis(_) => {
                return Err(SamplingError::WrongMode { expected: "generator-list" })
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..sets.len() {
        for j in i..sets.len() {
            let (gamma, gens_g) = sets[i];
            let (theta, gens_t) = sets[j];
            // S_{γ,γ} = S_γ: the diagonal reuses the single generator set.
            let closure = if i == j {
                gens_g.to_vec()
            } else {
                sum_closure_generators(gens_g, gens_t)?
            };
            let spectra = sweep_pair_spectra(&closure, psi, grid, tol)?;
            let (per_node, bounds) = per_node_data(&spectra, tol.spec_tol);
            let witness_nodes: Vec<usize> =
                per_node.iter().filter(|n| !n.rank_ok).map(|n| n.node_index).collect();
            let injective = witness_nodes.is_empty();
            let stability = if !injective {
                StabilityOutcome::RankFailure { witness_nodes: witness_nodes.clone() }
            } else {
                match bounds {
                    Some(b) => StabilityOutcome::Stable(b),
                    None => StabilityOutcome::Vacuous,
                }
            };
            let angle =
                friedrichs_angle(&SubspacePair::new(gens_g.to_vec(), gens_t.to_vec()), grid, tol)?;
            let label = if angle.verdict == Verdict::Closed {
                InjectivityLabel::NecessaryAndSufficient
            } else {
                InjectivityLabel::SufficientOnly
            };
            let dim = per_node.iter().map(|n| n.dim).max().unwrap_or(0);
            pairs.push(PairReport {
                gamma: gamma.to_string(),
                theta: theta.to_string(),
                closure_generator_names: closure.iter().map(|g| g.name.clone()).collect(),
                dim,
                injective,
                witness_nodes,
                label,
                stability,
                angle_verdict: Some(angle.verdict),
                per_node,
            });
        }
    }
    Ok(aggregate_report(pairs, psi.len()))
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

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Brute-force kernel-equality oracle: nullspace of Ψ*Φ equals nullspace
    /// of Φ, compared through nullspace projectors.
    fn kernel_equality_oracle(
        phi: &DMatrix<Complex64>,
        psi: &DMatrix<Complex64>,
        rank_tol: f64,
    ) -> bool {
        let nullspace_projector = |m: &DMatrix<Complex64>| {
            let d = m.ncols();
            let q = crate::linalg::orthonormal_range(
                &crate::linalg::hermitize(&(m.adjoint() * m)),
                rank_tol,
            );
            DMatrix::identity(d, d) - &q * q.adjoint()
        };
        let cross = psi.adjoint() * phi;
        let n_cross = nullspace_projector(&cross);
        let n_phi = nullspace_projector(phi);
        (n_cross - n_phi).norm() < 1e-8
    }

    /// Direct projected-frame oracle: the Gramian of {P_S ψ_i}.
    fn projected_frame_bounds(
        phi: &DMatrix<Complex64>,
        psi: &DMatrix<Complex64>,
        rank_tol: f64,
        spec_tol: f64,
    ) -> Option<StabilityBounds> {
        let p = crate::linalg::projector_onto_range(phi, rank_tol);
        let projected = &p * psi;
        let gram = crate::linalg::hermitize(&(projected.adjoint() * &projected));
        let eigs = crate::gramian::hermitian_spectrum(&gram).unwrap();
        let largest = eigs.last().copied().unwrap_or(0.0);
        let threshold = spec_tol * largest.max(0.0);
        let nonzero: Vec<f64> = eigs.into_iter().filter(|&v| v > threshold).collect();
        match (nonzero.first(), nonzero.last()) {
            (Some(&alpha), Some(&beta)) => Some(StabilityBounds { alpha, beta }),
            _ => None,
        }
    }

    #[test]
    fn fd_injectivity_golden_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // Ψ = orthonormal basis of the ambient space: always injective.
        let phi = random_matrix(&mut rng, 5, 3);
        let psi = DMatrix::identity(5, 5);
        assert!(fd_injectivity(&phi, &psi, 1e-10));
        // Fewer samples than dim S can never be injective.
        let small_psi = random_matrix(&mut rng, 5, 2);
        let full_phi = random_matrix(&mut rng, 5, 3);
        assert_eq!(crate::linalg::numeric_rank(&full_phi, 1e-10), 3);
        assert!(!fd_injectivity(&full_phi, &small_psi, 1e-10));
    }

    #[test]
    fn fd_injectivity_matches_kernel_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.gen_range(1..=12);
            let d = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=8);
            let phi = random_matrix(&mut rng, n, d);
            let psi = random_matrix(&mut rng, n, m);
            assert_eq!(
                fd_injectivity(&phi, &psi, 1e-10),
                kernel_equality_oracle(&phi, &psi, 1e-10)
            );
        }
    }

    #[test]
    fn fd_stability_parseval_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = random_matrix(&mut rng, 6, 3);
        let phi = fd_canonical_parseval(&raw, 1e-10).unwrap();
        // Ψ = Φ: the cross Gramian of a Parseval frame is a projection.
        match fd_stability(&phi, &phi, &tols(), false).unwrap() {
            StabilityOutcome::Stable(b) => {
                assert!((b.alpha - 1.0).abs() < 1e-10);
                assert!((b.beta - 1.0).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
        // Ψ = 2Φ scales σ² by 4.
        let double = &phi * c(2.0, 0.0);
        match fd_stability(&phi, &double, &tols(), false).unwrap() {
            StabilityOutcome::Stable(b) => {
                assert!((b.alpha - 4.0).abs() < 1e-9);
                assert!((b.beta - 4.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fd_stability_rejects_non_parseval_without_canonicalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = random_matrix(&mut rng, 5, 2) * c(3.0, 0.0);
        let psi = random_matrix(&mut rng, 5, 4);
        assert!(matches!(
            fd_stability(&phi, &psi, &tols(), false),
            Err(SamplingError::NonParseval { .. })
        ));
        assert!(fd_stability(&phi, &psi, &tols(), true).is_ok());
    }

    #[test]
    fn fd_stability_matches_projected_frame_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut stable_seen = 0;
        let mut failure_seen = 0;
        for _ in 0..60 {
            let n = rng.gen_range(2..=12);
            let d = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=8);
            let phi = random_matrix(&mut rng, n, d);
            let psi = random_matrix(&mut rng, n, m);
            let outcome = fd_stability(&phi, &psi, &tols(), true).unwrap();
            let oracle = projected_frame_bounds(&phi, &psi, 1e-10, 1e-10);
            match outcome {
                StabilityOutcome::Stable(b) => {
                    stable_seen += 1;
                    let o = oracle.expect("oracle bounds");
                    assert!((b.alpha - o.alpha).abs() < 1e-9, "{} vs {}", b.alpha, o.alpha);
                    assert!((b.beta - o.beta).abs() < 1e-9, "{} vs {}", b.beta, o.beta);
                }
                StabilityOutcome::RankFailure { .. } => {
                    failure_seen += 1;
                    // Oracle agreement: the projected samples span less than S.
                    let p = crate::linalg::projector_onto_range(&phi, 1e-10);
                    let projected = &p * &psi;
                    let span = crate::linalg::numeric_rank(&projected, 1e-10);
                    let dim = crate::linalg::numeric_rank(&phi, 1e-10);
                    assert!(span < dim);
                }
                StabilityOutcome::Vacuous => {}
            }
        }
        assert!(stable_seen > 0 && failure_seen > 0, "both branches must be exercised");
    }

    #[test]
    fn fd_union_orthogonal_planes_with_standard_basis() {
        let plane = |a: usize, b: usize| {
            let mut m = DMatrix::zeros(4, 2);
            m[(a, 0)] = c(1.0, 0.0);
            m[(b, 1)] = c(1.0, 0.0);
            m
        };
        let model = UnionModel::new(vec![
            ("P01".to_string(), SubspaceData::Basis(plane(0, 1))),
            ("P23".to_string(), SubspaceData::Basis(plane(2, 3))),
        ])
        .unwrap();
        let psi = DMatrix::identity(4, 4);
        let report = fd_union_report(&model, &psi, &tols()).unwrap();
        assert!(report.injective);
        assert!(report.stable);
        assert!((report.alpha.unwrap() - 1.0).abs() < 1e-10);
        assert!((report.beta.unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(report.required_samples, 4);
        assert!(report.meets_sample_bound);
        assert_eq!(report.pairs.len(), 3);
    }

    fn sparse_model(n: usize) -> UnionModel {
        let mut subspaces = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let mut m = DMatrix::zeros(n, 2);
                m[(a, 0)] = c(1.0, 0.0);
                m[(b, 1)] = c(1.0, 0.0);
                subspaces.push((format!("S{a}{b}"), SubspaceData::Basis(m)));
            }
        }
        UnionModel::new(subspaces).unwrap()
    }

    #[test]
    fn fd_union_sparse_model_cardinality() {
        let model = sparse_model(6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // 3 samples < pair dimension 4: never injective.
        let psi3 = random_matrix(&mut rng, 6, 3);
        let report = fd_union_report(&model, &psi3, &tols()).unwrap();
        assert!(!report.injective);
        assert_eq!(report.required_samples, 4);
        assert!(!report.meets_sample_bound);

        // 4 generic samples: injective, each pair matching the brute-force
        // kernel oracle.
        let psi4 = random_matrix(&mut rng, 6, 4);
        let report = fd_union_report(&model, &psi4, &tols()).unwrap();
        assert!(report.injective);
        assert!(report.meets_sample_bound);
        for (i, (_, data_i)) in model.subspaces.iter().enumerate() {
            for (k, (_, data_j)) in model.subspaces.iter().enumerate().skip(i) {
                let (SubspaceData::Basis(a), SubspaceData::Basis(b)) = (data_i, data_j) else {
                    unreachable!()
                };
                let pair = if i == k {
                    a.clone()
                } else {
                    let mut m = DMatrix::zeros(6, 4);
                    m.view_mut((0, 0), (6, 2)).copy_from(a);
                    m.view_mut((0, 2), (6, 2)).copy_from(b);
                    m
                };
                assert!(kernel_equality_oracle(&pair, &psi4, 1e-10));
            }
        }
    }

    #[test]
    fn fd_union_monotone_in_model_size() {
        // Adding a subspace never improves any aggregate.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = 6;
            let psi = random_matrix(&mut rng, n, 5);
            let mut subspaces: Vec<(String, SubspaceData)> = (0..3)
                .map(|k| (format!("S{k}"), SubspaceData::Basis(random_matrix(&mut rng, n, 2))))
                .collect();
            let small =
                fd_union_report(&UnionModel::new(subspaces.clone()).unwrap(), &psi, &tols())
                    .unwrap();
            subspaces
                .push(("extra".to_string(), SubspaceData::Basis(random_matrix(&mut rng, n, 2))));
            let large =
                fd_union_report(&UnionModel::new(subspaces).unwrap(), &psi, &tols()).unwrap();
            assert!(large.injective <= small.injective);
            assert!(large.stable <= small.stable);
            // Union stability forces the per-pair rank condition.
            for report in [&small, &large] {
                if report.stable {
                    assert!(report.injective);
                }
            }
            if let (Some(a_small), Some(a_large)) = (small.alpha, large.alpha) {
                assert!(a_large <= a_small + 1e-12);
            }
            if let (Some(b_small), Some(b_large)) = (small.beta, large.beta) {
                assert!(b_large + 1e-12 >= b_small);
            }
        }
    }

    fn sampling_set(gens: Vec<GeneratorSpec>, grid: &FrequencyGrid) -> SamplingSet {
        SamplingSet::validate(gens, grid, &tols()).unwrap()
    }

    #[test]
    fn sis_injectivity_diagonal_case() {
        let grid = midpoint_grid(1, 16);
        let s = vec![fixtures::phi1(), fixtures::phi2()];
        let psi_gens: Vec<GeneratorSpec> = s
            .iter()
            .map(|g| GeneratorSpec { name: format!("{}_psi", g.name), body: g.body.clone() })
            .collect();
        let psi = sampling_set(psi_gens, &grid);
        let check = sis_injectivity(&s, &psi, &grid, &tols()).unwrap();
        assert!(check.injective);
        assert!(check.witness_nodes.is_empty());
    }

    #[test]
    fn sis_injectivity_blind_sampling_set_has_witnesses() {
        // Ψ lives on [1/2,1) while S needs [0,1/2): every node below 1/2
        // fails the rank condition.
        let grid = midpoint_grid(1, 8);
        let s = vec![fixtures::chi_half()];
        let psi = sampling_set(vec![fixtures::gen("blind", &[("1/2", "1", "1")])], &grid);
        let check = sis_injectivity(&s, &psi, &grid, &tols()).unwrap();
        assert!(!check.injective);
        assert_eq!(check.witness_nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn sis_injectivity_covering_box() {
        // χ_[0,1) sees everything of S(χ_[0,1/2)): rank 1 vs dim 1 on
        // [0,1/2), 0 vs 0 on [1/2,1).
        let grid = midpoint_grid(1, 8);
        let s = vec![fixtures::chi_half()];
        let psi = sampling_set(vec![fixtures::phi0()], &grid);
        let check = sis_injectivity(&s, &psi, &grid, &tols()).unwrap();
        assert!(check.injective);
    }

    #[test]
    fn sis_stability_parseval_diagonal_and_scaling() {
        let grid = midpoint_grid(1, 8);
        let s = vec![fixtures::chi_half()];
        let psi_same = sampling_set(vec![fixtures::gen("psi", &[("0", "1/2", "1")])], &grid);
        match sis_stability(&s, &psi_same, &grid, &tols()).unwrap() {
            StabilityOutcome::Stable(b) => {
                assert!((b.alpha - 1.0).abs() < 1e-12);
                assert!((b.beta - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let psi_scaled = sampling_set(vec![fixtures::gen("psi3", &[("0", "1/2", "3")])], &grid);
        match sis_stability(&s, &psi_scaled, &grid, &tols()).unwrap() {
            StabilityOutcome::Stable(b) => {
                assert!((b.alpha - 9.0).abs() < 1e-12);
                assert!((b.beta - 9.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    fn random_sampled_set(
        rng: &mut ChaCha8Rng,
        prefix: &str,
        grid_size: usize,
        window_len: usize,
        count: usize,
    ) -> Vec<GeneratorSpec> {
        let window: Vec<Vec<i64>> = (0..window_len as i64).map(|k| vec![k]).collect();
        (0..count)
            .map(|j| {
                let entries: Vec<(usize, Vec<i64>, Complex64)> = (0..grid_size)
                    .flat_map(|node| {
                        (0..window_len as i64)
                            .map(|k| {
                                (
                                    node,
                                    vec![k],
                                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                                )
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect();
                GeneratorSpec::sampled(
                    format!("{prefix}{j}"),
                    SampledFibers::new(1, grid_size, window.clone(), entries).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn sis_stability_matches_projected_fiber_oracle() {
        // Random sampled-fiber S and Ψ: bounds equal the per-node projected
        // Gramian spectrum extremes (the spectrum-transfer identity), and
        // stability implies injectivity.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = 6;
        let grid = midpoint_grid(1, m);
        for _ in 0..10 {
            let s = random_sampled_set(&mut rng, "s", m, 4, 2);
            let psi_gens = random_sampled_set(&mut rng, "p", m, 4, 3);
            let psi = sampling_set(psi_gens.clone(), &grid);
            let outcome = sis_stability(&s, &psi, &grid, &tols()).unwrap();
            let StabilityOutcome::Stable(b) = &outcome else {
                panic!("generic random fibers should be stable: {outcome:?}")
            };
            assert!(sis_injectivity(&s, &psi, &grid, &tols()).unwrap().injective);

            // Oracle over nodes: eigenvalues of the Gramian of P_{J_S(ω)}τψ.
            let mut all = s.clone();
            all.extend(psi_gens.iter().cloned());
            let window = Arc::new(fiber_window(&all).unwrap());
            let mut alpha = f64::INFINITY;
            let mut beta = 0.0f64;
            for i in 0..grid.len() {
                let f_s = fiberize(&s, &grid, i, &window).unwrap();
                let f_psi = fiberize(&psi.generators, &grid, i, &window).unwrap();
                let oracle =
                    projected_frame_bounds(&f_s.matrix, &f_psi.matrix, 1e-10, 1e-10).unwrap();
                alpha = alpha.min(oracle.alpha);
                beta = beta.max(oracle.beta);
            }
            assert!((b.alpha - alpha).abs() < 1e-9, "{} vs {alpha}", b.alpha);
            assert!((b.beta - beta).abs() < 1e-9, "{} vs {beta}", b.beta);
        }
    }

    #[test]
    fn sis_verdicts_invariant_under_frame_change() {
        // Mixing the generators by an invertible matrix changes neither the
        // injectivity verdict nor the stability bounds (the latter because
        // canonical Parsevalization absorbs the mix).
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 6;
        let grid = midpoint_grid(1, m);
        let s = random_sampled_set(&mut rng, "s", m, 4, 2);
        let psi = sampling_set(random_sampled_set(&mut rng, "p", m, 4, 3), &grid);

        // Rebuild mixed generators from the fibers of s.
        let window: Vec<Vec<i64>> = (0..4i64).map(|k| vec![k]).collect();
        let arc_window = Arc::new(fiber_window(&s).unwrap());
        let mut t = random_matrix(&mut rng, 2, 2);
        t[(0, 0)] += c(2.0, 0.0);
        t[(1, 1)] += c(2.0, 0.0);
        let mixed: Vec<GeneratorSpec> = (0..2)
            .map(|j| {
                let entries: Vec<(usize, Vec<i64>, Complex64)> = (0..grid.len())
                    .flat_map(|node| {
                        let f = fiberize(&s, &grid, node, &arc_window).unwrap();
                        let mixed_fiber = &f.matrix * &t;
                        (0..4usize)
                            .map(move |k| (node, vec![k as i64], mixed_fiber[(k, j)]))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                GeneratorSpec::sampled(
                    format!("mix{j}"),
                    SampledFibers::new(1, m, window.clone(), entries).unwrap(),
                )
            })
            .collect();

        let a = sis_injectivity(&s, &psi, &grid, &tols()).unwrap();
        let b = sis_injectivity(&mixed, &psi, &grid, &tols()).unwrap();
        assert_eq!(a, b);
        let sa = sis_stability(&s, &psi, &grid, &tols()).unwrap();
        let sb = sis_stability(&mixed, &psi, &grid, &tols()).unwrap();
        match (sa, sb) {
            (StabilityOutcome::Stable(x), StabilityOutcome::Stable(y)) => {
                assert!((x.alpha - y.alpha).abs() < 1e-9);
                assert!((x.beta - y.beta).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sis_union_disjoint_cells() {
        let grid = midpoint_grid(1, 8);
        let model = UnionModel::new(vec![
            ("S2".to_string(), SubspaceData::Generators(vec![fixtures::phi2()])),
            ("S3".to_string(), SubspaceData::Generators(vec![fixtures::phi3()])),
        ])
        .unwrap();
        let psi = sampling_set(
            vec![
                GeneratorSpec { name: "psi2".to_string(), body: fixtures::phi2().body },
                GeneratorSpec { name: "psi3".to_string(), body: fixtures::phi3().body },
            ],
            &grid,
        );
        let report = sis_union_report(&model, &psi, &grid, &tols()).unwrap();
        assert!(report.injective);
        assert!(report.stable);
        assert!((report.alpha.unwrap() - 1.0).abs() < 1e-12);
        assert!((report.beta.unwrap() - 1.0).abs() < 1e-12);
        assert!(report.meets_sample_bound);
        for pair in &report.pairs {
            assert_eq!(pair.label, InjectivityLabel::NecessaryAndSufficient);
            assert_eq!(pair.angle_verdict, Some(Verdict::Closed));
        }
    }

    #[test]
    fn sis_union_example6_lower_bound_violation() {
        // The closure of U+V has length 4; three sampling generators cannot
        // reach it. M = 512 so that the non-closedness of U+V is visible:
        // the angle sweep goes Indeterminate near the |cos| = 1 nodes and
        // the pair stays sufficient-only.
        let grid = midpoint_grid(1, 512);
        let model = UnionModel::new(vec![
            (
                "U".to_string(),
                SubspaceData::Generators(vec![
                    fixtures::phi1(),
                    fixtures::phi2(),
                    fixtures::phi3(),
                ]),
            ),
            ("V".to_string(), SubspaceData::Generators(vec![fixtures::phi0(), fixtures::phi4()])),
        ])
        .unwrap();
        let box_psi = fixtures::gen("box", &[("0", "4", "1")]);
        let psi = sampling_set(
            vec![
                box_psi,
                GeneratorSpec { name: "psi2".to_string(), body: fixtures::phi2().body },
                GeneratorSpec { name: "psi3".to_string(), body: fixtures::phi3().body },
            ],
            &grid,
        );
        let report = sis_union_report(&model, &psi, &grid, &tols()).unwrap();
        assert_eq!(report.sample_count, 3);
        assert_eq!(report.required_samples, 4);
        assert!(!report.meets_sample_bound);
        assert!(!report.injective);
        // The U-V pair cannot be certified closed, so its injectivity rank
        // check stays sufficient-only.
        let uv = report.pairs.iter().find(|p| p.gamma == "U" && p.theta == "V").unwrap();
        assert_eq!(uv.label, InjectivityLabel::SufficientOnly);
        assert_eq!(uv.dim, 4);
    }

    #[test]
    fn sis_union_single_subspace_reduces_to_diagonal() {
        let grid = midpoint_grid(1, 8);
        let s = vec![fixtures::chi_half()];
        let model =
            UnionModel::new(vec![("S".to_string(), SubspaceData::Generators(s.clone()))]).unwrap();
        let psi = sampling_set(vec![fixtures::phi0()], &grid);
        let report = sis_union_report(&model, &psi, &grid, &tols()).unwrap();
        assert_eq!(report.pairs.len(), 1);
        let direct_inj = sis_injectivity(&s, &psi, &grid, &tols()).unwrap();
        let direct_stab = sis_stability(&s, &psi, &grid, &tols()).unwrap();
        assert_eq!(report.injective, direct_inj.injective);
        assert_eq!(report.pairs[0].stability, direct_stab);
    }

    #[test]
    fn spectrum_curve_rows() {
        let grid = midpoint_grid(1, 8);
        // Diagonal Parseval case: σ² ≡ 1 where dim > 0.
        let s = vec![fixtures::chi_half()];
        let psi = sampling_set(vec![fixtures::gen("psi", &[("0", "1/2", "1")])], &grid);
        let rows = spectrum_curve(&s, &psi, &grid, &tols()).unwrap();
        for (i, row) in rows.iter().enumerate() {
            if i < 4 {
                assert_eq!(row.dim, 1);
                assert_eq!(row.rank, 1);
                assert!((row.sigma2_max.unwrap() - 1.0).abs() < 1e-12);
                assert!((row.sigma2_min_nonzero.unwrap() - 1.0).abs() < 1e-12);
            } else {
                assert_eq!(row.dim, 0);
                assert_eq!(row.rank, 0);
                assert!(row.sigma2_max.is_none());
            }
        }
        // Empty subspace: all-zero columns.
        let empty_rows = spectrum_curve(&[], &psi, &grid, &tols()).unwrap();
        for row in &empty_rows {
            assert_eq!(row.dim, 0);
            assert_eq!(row.rank, 0);
            assert!(row.sigma2_max.is_none());
        }
    }

    #[test]
    fn stability_implies_injectivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = 4;
        let grid = midpoint_grid(1, m);
        for _ in 0..10 {
            let s = random_sampled_set(&mut rng, "s", m, 3, 2);
            let count = rng.gen_range(1..=3);
            let psi = sampling_set(random_sampled_set(&mut rng, "p", m, 3, count), &grid);
            if sis_stability(&s, &psi, &grid, &tols()).unwrap().is_stable() {
                assert!(sis_injectivity(&s, &psi, &grid, &tols()).unwrap().injective);
            }
        }
    }

    #[test]
    fn union_model_requires_subspaces() {
        assert!(matches!(UnionModel::new(vec![]), Err(SamplingError::EmptyUnion)));
    }
}
