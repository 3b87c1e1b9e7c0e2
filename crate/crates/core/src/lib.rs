//! Numerical analysis of sampling operators on unions of shift-invariant
//! subspaces of L²(ℝⁿ).
//!
//! Everything reduces to finite Hermitian linear algebra on frequency fibers:
//! a generator is known through its Fourier transform, the fiber of f at
//! ω ∈ [0,1)ⁿ is the sequence (f̂(ω+k))_{k∈ℤⁿ}, and injectivity, stability,
//! frame bounds and angles between subspaces all become per-fiber statements
//! about Gramian and cross-correlation matrices, evaluated on a finite grid
//! of frequency nodes.
//!
//! Module map:
//! - [`dsl`] — piecewise closed-form Fourier transforms (1-D) and sampled
//!   fiber data (any dimension).
//! - [`fibers`] — frequency grids, fiber windows, fiber matrices, dimension
//!   functions, fiber projections.
//! - [`gramian`] — Gramian/cross-correlation fibers, Hermitian spectra,
//!   pseudo-inverse square roots, frame analysis, canonical Parseval frames.
//! - [`subspaces`] — sums, intersections by alternating projections, relative
//!   complements, Dixmier and Friedrichs angles, closedness certificates.
//! - [`sampling`] — injectivity and stability of the sampling operator on a
//!   single subspace and on unions, in finite dimensions and for
//!   shift-invariant spaces.
//!
//! All grid verdicts are numerical certificates: a finite grid cannot witness
//! an essential supremum, so "a.e." statements are checked at the grid nodes
//! only.

pub mod dsl;
pub mod fibers;
pub mod gramian;
mod linalg;
pub mod rational;
pub mod sampling;
pub mod subspaces;

pub use rational::Rational;

use rayon::prelude::*;

/// Tolerance and iteration settings shared across the analysis modules.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for numerical ranks.
    pub rank_tol: f64,
    /// Relative eigenvalue cutoff separating "zero" from "nonzero" spectrum.
    pub spec_tol: f64,
    /// Frobenius-norm stopping threshold for alternating projections.
    pub conv_eps: f64,
    /// Iteration cap for alternating projections.
    pub max_iter: usize,
    /// Closedness margin: a grid-max cosine below 1 − close_eps certifies Closed.
    pub close_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-10,
            spec_tol: 1e-10,
            conv_eps: 1e-10,
            max_iter: 10_000,
            close_eps: 1e-4,
        }
    }
}

/// Maps `f` over `0..len` with a parallel sweep, preserving index order.
///
/// Per-node computations are pure, so the result is identical to the
/// sequential map; parallelism only reorders the work, never the output.
pub(crate) fn sweep<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}
