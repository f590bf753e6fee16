//! Sum-of-squares programming: Gram parameterization of SOS polynomial
//! variables, coefficient-matching compilation to semidefinite programs, and
//! the two program families used by the region-of-attraction pipeline.
//!
//! A program holds free polynomial variables (unknown coefficient vectors
//! over a fixed support), SOS-constrained variables (Gram matrices over
//! monomial bases), and identities that force linear images of these
//! unknowns to equal known target polynomials, coefficient by coefficient.

use std::fmt;

use crate::linalg::{min_eig, Mat};
use crate::poly::{Monomial, Polynomial, VectorField};
use crate::sdp::{SdpError, SdpProblem, SdpSolution, SdpStatus};
use crate::Scalar;

/// Identity residual ceiling for accepting an extracted assignment; measured
/// with `coeff_max_abs_diff` after full reconstruction through polynomial
/// arithmetic, independent of the solver's own residual accounting.
pub const EXTRACT_RESIDUAL_TOL: f64 = 1e-6;
/// Gram eigenvalue floor for accepting an extracted assignment.
pub const EXTRACT_EIG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SosError {
    #[error("polynomial has {got} variables, program has {expected}")]
    NvarsMismatch { expected: usize, got: usize },
    #[error(
        "identity {identity}: target degree {target} exceeds the maximum \
         producible degree {producible}"
    )]
    MismatchedDegrees { identity: usize, target: u32, producible: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solution status {0:?} carries no assignment to extract")]
    SolutionNotFeasible(SdpStatus),
    #[error("solution shape does not match the compiled program")]
    SolutionShape,
    #[error(
        "identity {identity}: reconstructed residual {residual:.3e} exceeds {tol:.1e}"
    )]
    ResidualTooLarge { identity: usize, residual: f64, tol: f64 },
    #[error("SOS variable {var}: Gram eigenvalue {min_eig:.3e} below -{tol:.1e}")]
    GramNotPsd { var: usize, min_eig: f64, tol: f64 },
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Ordered set of monomials, graded-lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    nvars: usize,
    monomials: Vec<Monomial>,
}

impl MonomialBasis {
    /// All monomials of total degree ≤ `d`; size C(nvars + d, d).
    pub fn total_degree(nvars: usize, d: u32) -> Self {
        Self::degree_range(nvars, 0, d)
    }

    /// All monomials with degree in `lo..=hi`. An inverted range yields an
    /// empty basis, which stands for an absent variable.
    pub fn degree_range(nvars: usize, lo: u32, hi: u32) -> Self {
        let mut monomials = Vec::new();
        if lo <= hi {
            let mut exps = vec![0u32; nvars];
            collect_monomials(&mut exps, 0, 0, lo, hi, &mut monomials);
            monomials.sort();
        }
        MonomialBasis { nvars, monomials }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn max_degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }
}

impl fmt::Display for MonomialBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.monomials.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            let p = Polynomial::<f64>::from_terms(self.nvars, [(m.clone(), 1.0)]);
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

fn collect_monomials(
    exps: &mut Vec<u32>,
    var: usize,
    used: u32,
    lo: u32,
    hi: u32,
    out: &mut Vec<Monomial>,
) {
    if var == exps.len() {
        if used >= lo {
            out.push(Monomial::new(exps.clone()));
        }
        return;
    }
    for e in 0..=(hi - used) {
        exps[var] = e;
        collect_monomials(exps, var + 1, used + e, lo, hi, out);
        exps[var] = 0;
    }
}

/// Expands zᵀGz for the basis vector z; `gram` must be |basis|², symmetric.
pub fn gram_to_poly<T: Scalar>(basis: &MonomialBasis, gram: &Mat<T>) -> Polynomial<T> {
    assert_eq!(
        (gram.nrows(), gram.ncols()),
        (basis.len(), basis.len()),
        "Gram dimension must match basis size"
    );
    let mut p = Polynomial::zero(basis.nvars());
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let c = gram[(i, j)];
            if c != T::zero() {
                let m = basis.monomials[i].mul(&basis.monomials[j]);
                p.add_term(m, c);
            }
        }
    }
    p
}

/// Handle to an SOS-constrained polynomial variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SosVar(usize);

impl SosVar {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a free polynomial variable (unconstrained coefficients).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeVar(usize);

impl FreeVar {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Linear operator applied to a free variable inside an identity.
#[derive(Debug, Clone)]
pub enum FreeOp<T> {
    /// p ↦ p · q for a fixed polynomial q.
    Mul(Polynomial<T>),
    /// p ↦ −∇pᵀf: negated derivative of p along the flow of f.
    NegLie(VectorField<T>),
}

impl<T: Scalar> FreeOp<T> {
    fn apply(&self, m: &Monomial, nvars: usize) -> Polynomial<T> {
        let p = Polynomial::from_terms(nvars, [(m.clone(), T::one())]);
        match self {
            FreeOp::Mul(q) => p.mul(q),
            FreeOp::NegLie(f) => p.lie_derivative(f).neg(),
        }
    }

    /// Upper bound on the image degree of a support monomial.
    fn image_degree(&self, m: &Monomial) -> u32 {
        match self {
            FreeOp::Mul(q) => m.degree() + q.degree(),
            FreeOp::NegLie(f) => m.degree().saturating_sub(1) + f.degree(),
        }
    }
}

/// One coefficient-matching identity:
/// Σ free terms + Σ SOS terms · multiplier = target.
#[derive(Debug, Clone)]
pub struct Identity<T> {
    pub sos_terms: Vec<(SosVar, Polynomial<T>)>,
    pub free_terms: Vec<(FreeVar, FreeOp<T>)>,
    pub target: Polynomial<T>,
}

#[derive(Debug, Clone)]
pub struct SosProgram<T> {
    nvars: usize,
    sos_vars: Vec<MonomialBasis>,
    free_vars: Vec<Vec<Monomial>>,
    identities: Vec<Identity<T>>,
}

impl<T: Scalar> SosProgram<T> {
    pub fn new(nvars: usize) -> Self {
        SosProgram { nvars, sos_vars: Vec::new(), free_vars: Vec::new(), identities: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Declares an SOS-constrained variable over the given Gram basis. An
    /// empty basis is allowed and denotes the zero polynomial.
    pub fn add_sos_var(&mut self, basis: MonomialBasis) -> Result<SosVar, SosError> {
        if basis.nvars() != self.nvars {
            return Err(SosError::NvarsMismatch { expected: self.nvars, got: basis.nvars() });
        }
        self.sos_vars.push(basis);
        Ok(SosVar(self.sos_vars.len() - 1))
    }

    /// Declares a free polynomial variable with the given support. Duplicate
    /// monomials collapse; order is canonicalized.
    pub fn add_free_var(&mut self, support: Vec<Monomial>) -> Result<FreeVar, SosError> {
        for m in &support {
            if m.nvars() != self.nvars {
                return Err(SosError::NvarsMismatch { expected: self.nvars, got: m.nvars() });
            }
        }
        let mut support = support;
        support.sort();
        support.dedup();
        self.free_vars.push(support);
        Ok(FreeVar(self.free_vars.len() - 1))
    }

    pub fn add_identity(&mut self, identity: Identity<T>) -> Result<(), SosError> {
        if identity.target.nvars() != self.nvars {
            return Err(SosError::NvarsMismatch {
                expected: self.nvars,
                got: identity.target.nvars(),
            });
        }
        self.identities.push(identity);
        Ok(())
    }

    pub fn sos_basis(&self, v: SosVar) -> &MonomialBasis {
        &self.sos_vars[v.0]
    }

    pub fn free_support(&self, v: FreeVar) -> &[Monomial] {
        &self.free_vars[v.0]
    }

    pub fn num_identities(&self) -> usize {
        self.identities.len()
    }

    /// Compiles to a block SDP: one PSD block per non-empty SOS variable, a
    /// pair of 1×1 PSD slack blocks (u, v) per free coefficient with value
    /// u − v, and one equality row per monomial appearing in each identity.
    /// Rows that reduce to 0 = 0 are dropped; rows 0 = c are kept so the
    /// solver can report the inconsistency.
    pub fn compile(&self) -> Result<CompiledSos<T>, SosError> {
        use std::collections::BTreeMap;

        for (k, id) in self.identities.iter().enumerate() {
            let mut producible: u32 = 0;
            for (v, mult) in &id.sos_terms {
                let basis = &self.sos_vars[v.0];
                if !basis.is_empty() && !mult.is_zero() {
                    producible = producible.max(2 * basis.max_degree() + mult.degree());
                }
            }
            for (v, op) in &id.free_terms {
                for m in &self.free_vars[v.0] {
                    producible = producible.max(op.image_degree(m));
                }
            }
            if !id.target.is_zero() && id.target.degree() > producible {
                return Err(SosError::MismatchedDegrees {
                    identity: k,
                    target: id.target.degree(),
                    producible,
                });
            }
        }

        // Block layout: Gram blocks in variable order, then (u, v) pairs in
        // (variable, support) order.
        let mut dims: Vec<usize> = Vec::new();
        let mut gram_block: Vec<Option<usize>> = Vec::new();
        for basis in &self.sos_vars {
            if basis.is_empty() {
                gram_block.push(None);
            } else {
                gram_block.push(Some(dims.len()));
                dims.push(basis.len());
            }
        }
        let mut free_blocks: Vec<Vec<(usize, usize)>> = Vec::new();
        for support in &self.free_vars {
            let mut pairs = Vec::with_capacity(support.len());
            for _ in support {
                let u = dims.len();
                dims.push(1);
                dims.push(1);
                pairs.push((u, u + 1));
            }
            free_blocks.push(pairs);
        }

        let mut problem = SdpProblem::new(dims)?;

        struct Row<T> {
            gram: BTreeMap<(usize, usize, usize), T>,
            free: BTreeMap<(usize, usize), T>,
            rhs: T,
        }
        fn fresh_row<T: Scalar>() -> Row<T> {
            Row { gram: BTreeMap::new(), free: BTreeMap::new(), rhs: T::zero() }
        }

        for id in &self.identities {
            let mut rows: BTreeMap<Monomial, Row<T>> = BTreeMap::new();
            for (m, &c) in id.target.terms() {
                rows.entry(m.clone()).or_insert_with(fresh_row).rhs = c;
            }
            for (v, mult) in &id.sos_terms {
                let basis = &self.sos_vars[v.0];
                for i in 0..basis.len() {
                    for j in 0..basis.len() {
                        let pair = basis.monomials[i].mul(&basis.monomials[j]);
                        let image = mult.mul_monomial(&pair, T::one());
                        for (m, &c) in image.terms() {
                            let row = rows.entry(m.clone()).or_insert_with(fresh_row);
                            let e = row.gram.entry((v.0, i, j)).or_insert_with(T::zero);
                            *e = *e + c;
                        }
                    }
                }
            }
            for (v, op) in &id.free_terms {
                for (k, mono) in self.free_vars[v.0].iter().enumerate() {
                    let image = op.apply(mono, self.nvars);
                    for (m, &c) in image.terms() {
                        let row = rows.entry(m.clone()).or_insert_with(fresh_row);
                        let e = row.free.entry((v.0, k)).or_insert_with(T::zero);
                        *e = *e + c;
                    }
                }
            }

            for (_, row) in rows {
                let gram_entries: Vec<_> =
                    row.gram.into_iter().filter(|&(_, c)| c != T::zero()).collect();
                let free_entries: Vec<_> =
                    row.free.into_iter().filter(|&(_, c)| c != T::zero()).collect();
                if gram_entries.is_empty() && free_entries.is_empty() && row.rhs == T::zero() {
                    continue;
                }
                let mut entries: Vec<(usize, Mat<T>)> = Vec::new();
                let mut current: Option<(usize, Mat<T>)> = None;
                for ((v, i, j), c) in gram_entries {
                    let blk = gram_block[v].expect("entry on empty basis");
                    match &mut current {
                        Some((b, mat)) if *b == blk => mat[(i, j)] = c,
                        _ => {
                            if let Some(done) = current.take() {
                                entries.push(done);
                            }
                            let n = self.sos_vars[v].len();
                            let mut mat = Mat::zeros(n, n);
                            mat[(i, j)] = c;
                            current = Some((blk, mat));
                        }
                    }
                }
                if let Some(done) = current.take() {
                    entries.push(done);
                }
                for ((v, k), c) in free_entries {
                    let (u_blk, v_blk) = free_blocks[v][k];
                    entries.push((u_blk, Mat::scaled_identity(1, c)));
                    entries.push((v_blk, Mat::scaled_identity(1, -c)));
                }
                problem.add_constraint(entries, row.rhs)?;
            }
        }

        problem.validate()?;
        Ok(CompiledSos { program: self.clone(), problem, gram_block, free_blocks })
    }
}

/// A compiled program: the SDP plus the index maps needed to reconstruct
/// every variable from a solution.
#[derive(Debug, Clone)]
pub struct CompiledSos<T> {
    program: SosProgram<T>,
    problem: SdpProblem<T>,
    gram_block: Vec<Option<usize>>,
    free_blocks: Vec<Vec<(usize, usize)>>,
}

/// One SOS variable pulled out of a solution.
#[derive(Debug, Clone)]
pub struct SosDecomposition<T> {
    pub basis: MonomialBasis,
    pub gram: Mat<T>,
    pub poly: Polynomial<T>,
    pub min_eig: T,
}

/// Every variable of a solved program, revalidated.
#[derive(Debug, Clone)]
pub struct SosAssignment<T> {
    pub sos: Vec<SosDecomposition<T>>,
    pub free: Vec<Polynomial<T>>,
    pub max_identity_residual: T,
    pub min_gram_eigenvalue: T,
}

impl<T: Scalar> CompiledSos<T> {
    pub fn problem(&self) -> &SdpProblem<T> {
        &self.problem
    }

    pub fn gram_block(&self, v: SosVar) -> Option<usize> {
        self.gram_block[v.0]
    }

    /// The (positive, negative) 1×1 slack block pair backing each
    /// coefficient of a free variable, in support order.
    pub fn free_var_blocks(&self, v: FreeVar) -> &[(usize, usize)] {
        &self.free_blocks[v.0]
    }

    /// Reconstructs all variables from a feasible solution and revalidates:
    /// every Gram eigenvalue ≥ −1e−8 and every identity, reassembled through
    /// polynomial arithmetic, within 1e−6 of its target. Violations are
    /// errors; no assignment is returned on shaky evidence.
    pub fn extract(&self, sol: &SdpSolution<T>) -> Result<SosAssignment<T>, SosError> {
        if !matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible) {
            return Err(SosError::SolutionNotFeasible(sol.status));
        }
        if sol.blocks.len() != self.problem.num_blocks() {
            return Err(SosError::SolutionShape);
        }

        let mut sos = Vec::with_capacity(self.program.sos_vars.len());
        for (v, basis) in self.program.sos_vars.iter().enumerate() {
            let gram = match self.gram_block[v] {
                Some(b) => {
                    let blk = &sol.blocks[b];
                    if blk.nrows() != basis.len() {
                        return Err(SosError::SolutionShape);
                    }
                    blk.symmetrized()
                }
                None => Mat::zeros(0, 0),
            };
            let poly = gram_to_poly(basis, &gram);
            let min_eig = min_eig(&gram);
            sos.push(SosDecomposition { basis: basis.clone(), gram, poly, min_eig });
        }

        let mut free = Vec::with_capacity(self.program.free_vars.len());
        for (v, support) in self.program.free_vars.iter().enumerate() {
            let mut p = Polynomial::zero(self.program.nvars);
            for (k, mono) in support.iter().enumerate() {
                let (u_blk, v_blk) = self.free_blocks[v][k];
                if sol.blocks[u_blk].nrows() != 1 || sol.blocks[v_blk].nrows() != 1 {
                    return Err(SosError::SolutionShape);
                }
                let c = sol.blocks[u_blk][(0, 0)] - sol.blocks[v_blk][(0, 0)];
                p.add_term(mono.clone(), c);
            }
            free.push(p);
        }

        let mut max_residual = T::zero();
        for (k, id) in self.program.identities.iter().enumerate() {
            let mut lhs = Polynomial::zero(self.program.nvars);
            for (v, mult) in &id.sos_terms {
                lhs = lhs.add(&sos[v.0].poly.mul(mult));
            }
            for (v, op) in &id.free_terms {
                let p = &free[v.0];
                let image = match op {
                    FreeOp::Mul(q) => p.mul(q),
                    FreeOp::NegLie(f) => p.lie_derivative(f).neg(),
                };
                lhs = lhs.add(&image);
            }
            let residual = lhs.coeff_max_abs_diff(&id.target);
            max_residual = max_residual.max(residual);
            if residual > T::c(EXTRACT_RESIDUAL_TOL) {
                return Err(SosError::ResidualTooLarge {
                    identity: k,
                    residual: residual.to_f64().unwrap_or(f64::NAN),
                    tol: EXTRACT_RESIDUAL_TOL,
                });
            }
        }

        let mut min_gram = T::infinity();
        for (v, dec) in sos.iter().enumerate() {
            if dec.basis.is_empty() {
                continue;
            }
            min_gram = min_gram.min(dec.min_eig);
            if dec.min_eig < -T::c(EXTRACT_EIG_TOL) {
                return Err(SosError::GramNotPsd {
                    var: v,
                    min_eig: dec.min_eig.to_f64().unwrap_or(f64::NAN),
                    tol: EXTRACT_EIG_TOL,
                });
            }
        }

        Ok(SosAssignment {
            sos,
            free,
            max_identity_residual: max_residual,
            min_gram_eigenvalue: min_gram,
        })
    }
}

pub use lyapunov::{
    build_h_program, build_level_program, extract_certificate, CertificateParams, HMeta,
    HProgram, LevelProgram, SosCertificate,
};

mod lyapunov;
