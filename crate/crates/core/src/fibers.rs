//! Fiberization: finite fiber vectors and matrices on a frequency grid over
//! [0,1)ⁿ.
//!
//! The fiber of f at ω is the sequence (f̂(ω+k))_{k∈ℤⁿ}. For compactly
//! supported f̂ the sequence vanishes outside a finite window W ⊂ ℤⁿ, so the
//! truncation to W is exact and every statement about the unbounded operators
//! can be evaluated through |W|×d matrices. "a.e. ω" statements are
//! approximated on a grid of midpoint nodes, which never sit on rational
//! breakpoints for power-of-two grids.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::{EvalError, GeneratorBody, GeneratorSpec};
use crate::linalg;
use crate::rational::{to_f64, Rational};
use crate::sweep;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiberError {
    #[error("generators mix frequency dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("generator `{name}` is sampled on an n={dim}, M={grid} grid, but the analysis grid is n={want_dim}, M={want_grid}")]
    SampledGridMismatch { name: String, dim: usize, grid: usize, want_dim: usize, want_grid: usize },
    #[error("window index arity {got} does not match grid dimension {expected}")]
    WindowArity { got: usize, expected: usize },
    #[error("evaluating `{name}`: {source}")]
    Eval {
        name: String,
        #[source]
        source: EvalError,
    },
}

/// One grid node: exact coordinates in [0,1)ⁿ, flagged when it was nudged
/// off a generator breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub coords: Vec<Rational>,
    pub perturbed: bool,
}

impl GridNode {
    pub fn coords_f64(&self) -> Vec<f64> {
        self.coords.iter().map(to_f64).collect()
    }
}

/// The Mⁿ midpoints ω_m = (m + ½)/M, m ∈ {0..M−1}ⁿ, in lexicographic order
/// of the multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    dimension: usize,
    nodes_per_axis: usize,
    nodes: Vec<GridNode>,
}

/// Builds the midpoint grid; `nodes_per_axis` ≥ 1.
pub fn midpoint_grid(dimension: usize, nodes_per_axis: usize) -> FrequencyGrid {
    assert!(nodes_per_axis >= 1, "grid needs at least one node per axis");
    assert!(dimension >= 1, "grid dimension must be positive");
    let m = nodes_per_axis;
    let total = m.pow(dimension as u32);
    let mut nodes = Vec::with_capacity(total);
    for flat in 0..total {
        let mut coords = vec![Rational::from_integer(0); dimension];
        let mut rest = flat;
        // Last axis varies fastest.
        for axis in (0..dimension).rev() {
            let idx = rest % m;
            rest /= m;
            coords[axis] = Rational::new(2 * idx as i128 + 1, 2 * m as i128);
        }
        nodes.push(GridNode { coords, perturbed: false });
    }
    FrequencyGrid { dimension, nodes_per_axis, nodes }
}

impl FrequencyGrid {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, index: usize) -> &GridNode {
        &self.nodes[index]
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    /// Checks every node against the rational breakpoints of the piecewise
    /// generators; a collision nudges the node by +1e−9 (kept exact) and is
    /// reported as a warning. Midpoint grids with power-of-two M never
    /// collide with odd-denominator breakpoints, so this is a safety net for
    /// unusual grid sizes.
    pub fn avoid_breakpoints(&mut self, generators: &[GeneratorSpec]) -> Vec<String> {
        if self.dimension != 1 {
            return Vec::new();
        }
        let mut breakpoints: Vec<Rational> = Vec::new();
        for g in generators {
            if let GeneratorBody::Piecewise(p) = &g.body {
                breakpoints.extend(p.breakpoints());
            }
        }
        breakpoints.sort();
        breakpoints.dedup();
        let nudge = Rational::new(1, 1_000_000_000);
        let mut warnings = Vec::new();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            // Breakpoints live in the supports, nodes in [0,1); compare the
            // fractional lattice of each breakpoint.
            let coord = node.coords[0];
            if breakpoints.iter().any(|b| (b - coord).is_integer()) {
                node.coords[0] = coord + nudge;
                node.perturbed = true;
                warnings.push(format!(
                    "grid node {i} (omega = {coord}) coincides with a generator breakpoint; perturbed by +1e-9"
                ));
            }
        }
        warnings
    }
}

/// Finite set W ⊂ ℤⁿ of translation indices, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberWindow {
    dimension: usize,
    indices: Vec<Vec<i64>>,
}

impl FiberWindow {
    pub fn empty(dimension: usize) -> Self {
        FiberWindow { dimension, indices: Vec::new() }
    }

    pub fn from_indices(dimension: usize, mut indices: Vec<Vec<i64>>) -> Result<Self, FiberError> {
        for k in &indices {
            if k.len() != dimension {
                return Err(FiberError::WindowArity { got: k.len(), expected: dimension });
            }
        }
        indices.sort();
        indices.dedup();
        Ok(FiberWindow { dimension, indices })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<i64>] {
        &self.indices
    }

    pub fn contains_all(&self, other: &FiberWindow) -> bool {
        other.indices.iter().all(|k| self.indices.binary_search(k).is_ok())
    }

    fn merge(&mut self, other: FiberWindow) {
        self.indices.extend(other.indices);
        self.indices.sort();
        self.indices.dedup();
    }
}

/// Minimal window covering every generator's Fourier support (union across
/// generators). For piecewise bodies these are all k whose cell k+[0,1)
/// meets a piece; sampled bodies contribute their declared window. The
/// truncation of fibers to this window is exact.
pub fn fiber_window(generators: &[GeneratorSpec]) -> Result<FiberWindow, FiberError> {
    let dimension = check_dimension(generators)?;
    let mut window = FiberWindow::empty(dimension);
    for g in generators {
        match &g.body {
            GeneratorBody::Piecewise(p) => {
                let mut ks = Vec::new();
                for piece in p.pieces() {
                    let lo = piece.lower.floor().to_integer() as i64;
                    let hi = (piece.upper.ceil().to_integer() as i64) - 1;
                    for k in lo..=hi {
                        ks.push(vec![k]);
                    }
                }
                window.merge(FiberWindow::from_indices(1, ks)?);
            }
            GeneratorBody::Sampled(s) => {
                window.merge(FiberWindow::from_indices(s.dimension(), s.window().to_vec())?);
            }
        }
    }
    Ok(window)
}

fn check_dimension(generators: &[GeneratorSpec]) -> Result<usize, FiberError> {
    let mut dims = generators.iter().map(GeneratorSpec::dimension);
    let first = match dims.next() {
        Some(d) => d,
        None => return Ok(0),
    };
    for d in dims {
        if d != first {
            return Err(FiberError::DimensionMismatch(first, d));
        }
    }
    Ok(first)
}

/// The |W|×d matrix whose columns are the generators' fibers at one node:
/// column j, row k holds φ̂ⱼ(ω+k). Applying it to a coefficient vector is
/// the fiber synthesis operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMatrix {
    pub node_index: usize,
    pub window: Arc<FiberWindow>,
    pub matrix: DMatrix<Complex64>,
}

impl FiberMatrix {
    /// Fiber synthesis: Σⱼ cⱼ τφⱼ(ω).
    pub fn synthesize(&self, coefficients: &nalgebra::DVector<Complex64>) -> nalgebra::DVector<Complex64> {
        &self.matrix * coefficients
    }

    pub fn generator_count(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Builds the fiber matrix of a generator set at one grid node on the given
/// window (which must cover the set's own fiber window for the truncation to
/// stay exact).
pub fn fiberize(
    generators: &[GeneratorSpec],
    grid: &FrequencyGrid,
    node_index: usize,
    window: &Arc<FiberWindow>,
) -> Result<FiberMatrix, FiberError> {
    let node = grid.node(node_index);
    let mut matrix = DMatrix::zeros(window.len(), generators.len());
    for (j, g) in generators.iter().enumerate() {
        match &g.body {
            GeneratorBody::Piecewise(p) => {
                for (row, k) in window.indices().iter().enumerate() {
                    let xi = node.coords[0] + Rational::from_integer(k[0] as i128);
                    let value = p
                        .eval_exact(&xi)
                        .map_err(|source| FiberError::Eval { name: g.name.clone(), source })?;
                    matrix[(row, j)] = value;
                }
            }
            GeneratorBody::Sampled(s) => {
                if s.dimension() != grid.dimension() || s.grid_size() != grid.nodes_per_axis() {
                    return Err(FiberError::SampledGridMismatch {
                        name: g.name.clone(),
                        dim: s.dimension(),
                        grid: s.grid_size(),
                        want_dim: grid.dimension(),
                        want_grid: grid.nodes_per_axis(),
                    });
                }
                for (row, k) in window.indices().iter().enumerate() {
                    matrix[(row, j)] = s.fiber_entry(node_index, k);
                }
            }
        }
    }
    Ok(FiberMatrix { node_index, window: Arc::clone(window), matrix })
}

/// Fiber matrices at every grid node (parallel sweep, node order preserved).
pub fn fiberize_grid(
    generators: &[GeneratorSpec],
    grid: &FrequencyGrid,
    window: &Arc<FiberWindow>,
) -> Result<Vec<FiberMatrix>, FiberError> {
    sweep(grid.len(), |i| fiberize(generators, grid, i, window))
        .into_iter()
        .collect()
}

/// Per-node rank of the fiber matrices: dim J_S(ω) at each grid node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionFunction {
    pub values: Vec<usize>,
}

impl DimensionFunction {
    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    /// Essential supremum surrogate on the grid; the length estimate of the
    /// generated space.
    pub fn max(&self) -> usize {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// Numerical rank of the fiber matrix at every node: singular values above
/// rank_tol × σ_max (σ_max replaced by 1 when the fiber vanishes).
pub fn dimension_function(
    generators: &[GeneratorSpec],
    grid: &FrequencyGrid,
    rank_tol: f64,
) -> Result<DimensionFunction, FiberError> {
    let window = Arc::new(fiber_window(generators)?);
    let values = sweep(grid.len(), |i| {
        fiberize(generators, grid, i, &window).map(|f| linalg::numeric_rank(&f.matrix, rank_tol))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(DimensionFunction { values })
}

/// Orthogonal projection onto the column space of the fiber matrix
/// (rank-revealing SVD); idempotent and Hermitian to 1e−12.
pub fn fiber_projection(fiber: &FiberMatrix, rank_tol: f64) -> DMatrix<Complex64> {
    linalg::projector_onto_range(&fiber.matrix, rank_tol)
}
