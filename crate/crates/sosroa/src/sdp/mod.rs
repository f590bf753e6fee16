//! Semidefinite programming over block-diagonal cones.
//!
//! Problems are equality-constrained: minimize ⟨C, X⟩ subject to
//! ⟨A_i, X⟩ = b_i and X ⪰ 0, where X is block diagonal. An empty objective
//! marks a pure feasibility problem; those are solved by maximizing the
//! uniform eigenvalue slack t with X − tI ⪰ 0 and declaring feasibility only
//! when the optimal slack clears a strict margin, so downstream callers get
//! certificates with genuinely positive-definite Gram blocks.

mod ipm;
mod sdpa;

pub use ipm::{solve, SolveOptions};
pub use sdpa::import_sdpa;

use crate::linalg::{min_eig, Mat};
use crate::Scalar;

/// Coefficient matrices may deviate from exact symmetry by at most this much.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SdpError {
    #[error("block dimensions must be positive (block {0} is zero)")]
    ZeroBlockDim(usize),
    #[error("block index {index} out of range ({nblocks} blocks)")]
    BlockIndexOutOfRange { index: usize, nblocks: usize },
    #[error("coefficient matrix for block {block} is {rows}x{cols}, expected {dim}x{dim}")]
    BlockDimMismatch { block: usize, rows: usize, cols: usize, dim: usize },
    #[error("coefficient matrix for block {block} is asymmetric by {asym:e} (tolerance {tol:e})")]
    NotSymmetric { block: usize, asym: f64, tol: f64 },
    #[error("duplicate or unsorted block entries in coefficient matrix")]
    UnsortedBlocks,
    #[error("right-hand side or coefficient is not finite")]
    NotFinite,
    #[error("{m} constraints exceed the {dof} free entries of the cone")]
    TooManyConstraints { m: usize, dof: usize },
    #[error("solution has {got} blocks, problem has {want}")]
    SolutionShapeMismatch { got: usize, want: usize },
    #[error("SDPA parse error at line {line}: {msg}")]
    SdpaParse { line: usize, msg: String },
}

/// Symmetric block-diagonal matrix stored sparsely by block: only blocks with
/// nonzero content carry a dense matrix. Entries are sorted by block index.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMat<T> {
    terms: Vec<(usize, Mat<T>)>,
}

impl<T: Scalar> BlockMat<T> {
    pub fn empty() -> Self {
        BlockMat { terms: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(usize, Mat<T>)] {
        &self.terms
    }

    pub fn block(&self, index: usize) -> Option<&Mat<T>> {
        self.terms
            .binary_search_by_key(&index, |(b, _)| *b)
            .ok()
            .map(|pos| &self.terms[pos].1)
    }

    /// ⟨self, X⟩ over the blocks present.
    pub fn dot_blocks(&self, x: &[Mat<T>]) -> T {
        let mut acc = T::zero();
        for (b, m) in &self.terms {
            acc = acc + m.dot(&x[*b]);
        }
        acc
    }

    pub fn max_abs(&self) -> T {
        self.terms.iter().fold(T::zero(), |acc, (_, m)| acc.max(m.max_abs()))
    }

    fn validated(
        entries: Vec<(usize, Mat<T>)>,
        block_dims: &[usize],
    ) -> Result<Self, SdpError> {
        let mut entries = entries;
        entries.sort_by_key(|(b, _)| *b);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SdpError::UnsortedBlocks);
            }
        }
        for (b, m) in &entries {
            if *b >= block_dims.len() {
                return Err(SdpError::BlockIndexOutOfRange {
                    index: *b,
                    nblocks: block_dims.len(),
                });
            }
            let dim = block_dims[*b];
            if m.nrows() != dim || m.ncols() != dim {
                return Err(SdpError::BlockDimMismatch {
                    block: *b,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    dim,
                });
            }
            if !m.data().iter().all(|v| v.is_finite()) {
                return Err(SdpError::NotFinite);
            }
            let asym = m.max_asymmetry().to_f64().unwrap_or(f64::NAN);
            if asym.is_nan() || asym > SYMMETRY_TOL {
                return Err(SdpError::NotSymmetric { block: *b, asym, tol: SYMMETRY_TOL });
            }
        }
        Ok(BlockMat { terms: entries })
    }
}

/// One equality constraint ⟨A, X⟩ = rhs.
#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub mat: BlockMat<T>,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct SdpProblem<T> {
    block_dims: Vec<usize>,
    objective: BlockMat<T>,
    constraints: Vec<Constraint<T>>,
}

impl<T: Scalar> SdpProblem<T> {
    pub fn new(block_dims: Vec<usize>) -> Result<Self, SdpError> {
        for (i, &d) in block_dims.iter().enumerate() {
            if d == 0 {
                return Err(SdpError::ZeroBlockDim(i));
            }
        }
        Ok(SdpProblem { block_dims, objective: BlockMat::empty(), constraints: Vec::new() })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn objective(&self) -> &BlockMat<T> {
        &self.objective
    }

    /// A problem with no objective entries is a feasibility problem.
    pub fn is_feasibility(&self) -> bool {
        self.objective.is_empty()
    }

    /// Free entries of the cone: Σ n_b(n_b+1)/2.
    pub fn degrees_of_freedom(&self) -> usize {
        self.block_dims.iter().map(|&n| n * (n + 1) / 2).sum()
    }

    pub fn set_objective(&mut self, entries: Vec<(usize, Mat<T>)>) -> Result<(), SdpError> {
        self.objective = BlockMat::validated(entries, &self.block_dims)?;
        Ok(())
    }

    pub fn add_constraint(
        &mut self,
        entries: Vec<(usize, Mat<T>)>,
        rhs: T,
    ) -> Result<(), SdpError> {
        if !rhs.is_finite() {
            return Err(SdpError::NotFinite);
        }
        let mat = BlockMat::validated(entries, &self.block_dims)?;
        self.constraints.push(Constraint { mat, rhs });
        Ok(())
    }

    /// Structural sanity used by the solver: constraint count must not exceed
    /// the cone's free entries.
    pub fn validate(&self) -> Result<(), SdpError> {
        let dof = self.degrees_of_freedom();
        if self.constraints.len() > dof {
            return Err(SdpError::TooManyConstraints { m: self.constraints.len(), dof });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SdpStatus {
    /// Optimization problem solved to tolerance.
    Optimal,
    /// Feasibility problem solved with eigenvalue slack above the margin.
    Feasible,
    /// Certified infeasible (Farkas ray) or slack maximization below margin.
    Infeasible,
    /// The solver could not certify any of the above.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution<T> {
    pub status: SdpStatus,
    /// Primal blocks X. Meaningful for Optimal/Feasible; for the other
    /// statuses this is the last (normalized) iterate.
    pub blocks: Vec<Mat<T>>,
    /// ⟨C, X⟩ for optimization problems, the eigenvalue slack t* for
    /// feasibility problems.
    pub objective_value: T,
    /// bᵀy at the returned dual point.
    pub dual_objective: T,
    /// Dual multipliers, one per constraint.
    pub y: Vec<T>,
    /// max_i |⟨A_i, X⟩ − b_i|, recomputed on the returned blocks.
    pub max_equality_residual: T,
    /// Smallest eigenvalue across all returned blocks.
    pub min_eigenvalue: T,
    /// Slack t* when the feasibility reformulation ran.
    pub feasibility_margin: Option<T>,
    /// Farkas ray y with Σy_iA_i ⪯ 0 and bᵀy = 1, when Infeasible was
    /// certified by a dual improving ray.
    pub infeasibility_certificate: Option<Vec<T>>,
    pub iterations: usize,
}

/// Independently recomputed feasibility measures of a candidate solution.
#[derive(Debug, Clone, Copy)]
pub struct Residuals<T> {
    pub max_equality_residual: T,
    pub min_eigenvalue: T,
}

/// Recomputes constraint residuals and the eigenvalue floor from scratch;
/// shares no state with the solver.
pub fn residuals<T: Scalar>(
    problem: &SdpProblem<T>,
    blocks: &[Mat<T>],
) -> Result<Residuals<T>, SdpError> {
    if blocks.len() != problem.num_blocks() {
        return Err(SdpError::SolutionShapeMismatch {
            got: blocks.len(),
            want: problem.num_blocks(),
        });
    }
    for (b, (x, &dim)) in blocks.iter().zip(problem.block_dims()).enumerate() {
        if x.nrows() != dim || x.ncols() != dim {
            return Err(SdpError::BlockDimMismatch {
                block: b,
                rows: x.nrows(),
                cols: x.ncols(),
                dim,
            });
        }
    }
    let mut max_res = T::zero();
    for c in problem.constraints() {
        let r = (c.mat.dot_blocks(blocks) - c.rhs).abs();
        max_res = max_res.max(r);
    }
    let mut min_ev = T::infinity();
    for x in blocks {
        min_ev = min_ev.min(min_eig(x));
    }
    Ok(Residuals { max_equality_residual: max_res, min_eigenvalue: min_ev })
}

/// Exports in the SDPA sparse format (.dat-s).
pub fn export_sdpa<T: Scalar>(problem: &SdpProblem<T>) -> String {
    sdpa::export(problem)
}
