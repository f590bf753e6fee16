//! Primal-dual interior-point solver on the homogeneous self-dual embedding.
//!
//! HKM scaling with a Mehrotra predictor-corrector; the Schur complement is
//! assembled densely and factored by Cholesky. Feasibility problems are
//! rewritten as slack maximization (X = Y + tI, maximize t capped at
//! `slack_cap`), which yields an interior witness when one exists and a
//! margin-based rejection when it does not. True inconsistency surfaces as a
//! Farkas ray through the embedding's τ/κ mechanism; rays are re-verified
//! before an Infeasible verdict is returned.

use crate::linalg::{
    chol_inverse, chol_solve_vec, congruence_inv_chol, min_eig, sym_eigvals, Mat,
};
use crate::Scalar;

use super::{
    residuals, BlockMat, Constraint, Residuals, SdpError, SdpProblem, SdpSolution, SdpStatus,
};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    /// Absolute ceiling on |⟨A_i, X⟩ − b_i| for accepted solutions.
    pub feas_tol: T,
    /// Eigenvalue floor tolerance for accepted solutions.
    pub psd_tol: T,
    /// Relative duality-gap tolerance for Optimal.
    pub gap_tol: T,
    /// Feasibility problems are Feasible only when the maximized eigenvalue
    /// slack t* clears this margin.
    pub strict_margin: T,
    /// Upper bound on the eigenvalue slack; keeps slack maximization bounded.
    pub slack_cap: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            feas_tol: T::c(1e-7),
            psd_tol: T::c(1e-8),
            gap_tol: T::c(1e-8),
            strict_margin: T::c(1e-7),
            slack_cap: T::one(),
            max_iter: 200,
        }
    }
}

/// Relative eigenvalue tolerance when verifying a Farkas ray.
const RAY_TOL: f64 = 1e-9;

/// Solves the problem. Structural defects (shape errors, too many
/// constraints) come back as `Err`; solver outcomes, including
/// `NumericalFailure`, are encoded in the returned solution's status.
pub fn solve<T: Scalar>(
    problem: &SdpProblem<T>,
    opts: &SolveOptions<T>,
) -> Result<SdpSolution<T>, SdpError> {
    problem.validate()?;

    // Presolve: constraints with no coefficient entries are either vacuous or
    // witness inconsistency outright.
    let mut active: Vec<usize> = Vec::new();
    for (i, c) in problem.constraints().iter().enumerate() {
        if c.mat.is_empty() {
            if c.rhs.abs() > T::c(1e-12) {
                // 0 = rhs ≠ 0; the unit vector on this constraint is a ray.
                let mut ray = vec![T::zero(); problem.num_constraints()];
                ray[i] = c.rhs.recip();
                let blocks: Vec<Mat<T>> =
                    problem.block_dims().iter().map(|&d| Mat::zeros(d, d)).collect();
                let res = residuals(problem, &blocks)?;
                return Ok(SdpSolution {
                    status: SdpStatus::Infeasible,
                    blocks,
                    objective_value: T::zero(),
                    dual_objective: T::zero(),
                    y: vec![T::zero(); problem.num_constraints()],
                    max_equality_residual: res.max_equality_residual,
                    min_eigenvalue: res.min_eigenvalue,
                    feasibility_margin: None,
                    infeasibility_certificate: Some(ray),
                    iterations: 0,
                });
            }
        } else {
            active.push(i);
        }
    }

    if problem.is_feasibility() {
        solve_feasibility(problem, &active, opts)
    } else {
        solve_optimization(problem, &active, opts)
    }
}

fn solve_optimization<T: Scalar>(
    problem: &SdpProblem<T>,
    active: &[usize],
    opts: &SolveOptions<T>,
) -> Result<SdpSolution<T>, SdpError> {
    if active.is_empty() {
        // min ⟨C, X⟩ over X ⪰ 0 alone: 0 at X = 0 when C ⪰ 0.
        let blocks: Vec<Mat<T>> =
            problem.block_dims().iter().map(|&d| Mat::zeros(d, d)).collect();
        let c_psd = problem
            .objective()
            .terms()
            .iter()
            .all(|(_, m)| min_eig(m) >= -opts.psd_tol);
        let status = if c_psd { SdpStatus::Optimal } else { SdpStatus::NumericalFailure };
        let res = residuals(problem, &blocks)?;
        return Ok(SdpSolution {
            status,
            blocks,
            objective_value: T::zero(),
            dual_objective: T::zero(),
            y: vec![T::zero(); problem.num_constraints()],
            max_equality_residual: res.max_equality_residual,
            min_eigenvalue: res.min_eigenvalue,
            feasibility_margin: None,
            infeasibility_certificate: None,
            iterations: 0,
        });
    }

    let cons: Vec<Constraint<T>> =
        active.iter().map(|&i| problem.constraints()[i].clone()).collect();
    let outcome = ipm(problem.block_dims(), problem.objective(), &cons, opts);
    finish(problem, active, outcome, None, opts)
}

/// Index layout of the auxiliary blocks appended by the slack reformulation.
struct SlackLayout {
    t_plus: usize,
    t_minus: usize,
    cap: usize,
}

fn solve_feasibility<T: Scalar>(
    problem: &SdpProblem<T>,
    active: &[usize],
    opts: &SolveOptions<T>,
) -> Result<SdpSolution<T>, SdpError> {
    if active.is_empty() {
        // No binding constraints: the identity is an interior witness.
        let blocks: Vec<Mat<T>> =
            problem.block_dims().iter().map(|&d| Mat::identity(d)).collect();
        let res = residuals(problem, &blocks)?;
        return Ok(SdpSolution {
            status: SdpStatus::Feasible,
            blocks,
            objective_value: T::one(),
            dual_objective: T::zero(),
            y: vec![T::zero(); problem.num_constraints()],
            max_equality_residual: res.max_equality_residual,
            min_eigenvalue: res.min_eigenvalue,
            feasibility_margin: Some(T::one()),
            infeasibility_certificate: None,
            iterations: 0,
        });
    }

    // Augment: X = Y + (t₊ − t₋)I per block, t₊ − t₋ ≤ slack_cap, and
    // maximize t₊ − t₋ (minimize t₋ − t₊).
    let nb = problem.num_blocks();
    let layout = SlackLayout { t_plus: nb, t_minus: nb + 1, cap: nb + 2 };
    let mut dims = problem.block_dims().to_vec();
    dims.extend_from_slice(&[1, 1, 1]);

    let mut aug = SdpProblem::new(dims)?;
    aug.set_objective(vec![
        (layout.t_plus, Mat::scaled_identity(1, -T::one())),
        (layout.t_minus, Mat::scaled_identity(1, T::one())),
    ])?;
    for &i in active {
        let c = &problem.constraints()[i];
        let mut entries: Vec<(usize, Mat<T>)> = c.mat.terms().to_vec();
        let tr: T = c.mat.terms().iter().fold(T::zero(), |acc, (_, m)| acc + m.trace());
        if tr != T::zero() {
            entries.push((layout.t_plus, Mat::scaled_identity(1, tr)));
            entries.push((layout.t_minus, Mat::scaled_identity(1, -tr)));
        }
        aug.add_constraint(entries, c.rhs)?;
    }
    aug.add_constraint(
        vec![
            (layout.t_plus, Mat::identity(1)),
            (layout.t_minus, Mat::scaled_identity(1, -T::one())),
            (layout.cap, Mat::identity(1)),
        ],
        opts.slack_cap,
    )?;

    let cons = aug.constraints().to_vec();
    let outcome = ipm(aug.block_dims(), aug.objective(), &cons, opts);
    finish(problem, active, outcome, Some(layout), opts)
}

/// Maps a raw IPM outcome back onto the caller's problem: recovers X from the
/// slack reformulation if one ran, re-verifies residuals and rays, assigns
/// the final status.
fn finish<T: Scalar>(
    problem: &SdpProblem<T>,
    active: &[usize],
    outcome: IpmOutcome<T>,
    slack: Option<SlackLayout>,
    opts: &SolveOptions<T>,
) -> Result<SdpSolution<T>, SdpError> {
    let m_orig = problem.num_constraints();
    let nb = problem.num_blocks();

    let expand_y = |y_active: &[T]| {
        let mut y = vec![T::zero(); m_orig];
        for (k, &i) in active.iter().enumerate() {
            if k < y_active.len() {
                y[i] = y_active[k];
            }
        }
        y
    };

    let recover_blocks = |x: &[Mat<T>]| -> (Vec<Mat<T>>, Option<T>) {
        match &slack {
            None => (x.to_vec(), None),
            Some(layout) => {
                let t = x[layout.t_plus][(0, 0)] - x[layout.t_minus][(0, 0)];
                let mut blocks: Vec<Mat<T>> = x[..nb].to_vec();
                for b in &mut blocks {
                    b.add_scaled_identity(t);
                }
                (blocks, Some(t))
            }
        }
    };

    // The final iterate carries residual at the solver's inner tolerance;
    // projecting it onto the equality rows removes most of it, and a
    // healthy PSD margin absorbs the shift. Both candidates face the same
    // independent verification, so this only ever upgrades the witness.
    let select_witness = |raw: Vec<Mat<T>>| -> Result<(Vec<Mat<T>>, Residuals<T>), SdpError> {
        let raw_res = residuals(problem, &raw)?;
        let Some(pol) = polish(problem, &raw) else {
            return Ok((raw, raw_res));
        };
        let pol_res = residuals(problem, &pol)?;
        let raw_ok = raw_res.max_equality_residual <= opts.feas_tol;
        let pol_ok = pol_res.max_equality_residual <= opts.feas_tol;
        let keep_polished = match (pol_ok, raw_ok) {
            (true, true) => pol_res.min_eigenvalue >= raw_res.min_eigenvalue,
            (true, false) => true,
            (false, true) => false,
            (false, false) => {
                pol_res.max_equality_residual <= raw_res.max_equality_residual
            }
        };
        if keep_polished {
            Ok((pol, pol_res))
        } else {
            Ok((raw, raw_res))
        }
    };

    match outcome {
        IpmOutcome::Converged { x, y, pobj, dobj, iterations } => {
            let (raw, margin) = recover_blocks(&x);
            let (blocks, res) = select_witness(raw)?;
            let status = match (&slack, margin) {
                (Some(_), Some(t)) => {
                    if res.max_equality_residual > opts.feas_tol {
                        SdpStatus::NumericalFailure
                    } else if res.min_eigenvalue >= opts.strict_margin {
                        SdpStatus::Feasible
                    } else if t < opts.strict_margin {
                        // The margin was maximized and still falls short:
                        // no strictly feasible point exists.
                        SdpStatus::Infeasible
                    } else {
                        SdpStatus::NumericalFailure
                    }
                }
                _ => {
                    if res.max_equality_residual <= opts.feas_tol
                        && res.min_eigenvalue >= -opts.psd_tol
                    {
                        SdpStatus::Optimal
                    } else {
                        SdpStatus::NumericalFailure
                    }
                }
            };
            let objective_value = match margin {
                Some(t) => t,
                None => pobj,
            };
            let feasibility_margin = margin.map(|_| res.min_eigenvalue);
            Ok(SdpSolution {
                status,
                blocks,
                objective_value,
                dual_objective: dobj,
                y: expand_y(&y),
                max_equality_residual: res.max_equality_residual,
                min_eigenvalue: res.min_eigenvalue,
                feasibility_margin,
                infeasibility_certificate: None,
                iterations,
            })
        }
        IpmOutcome::PrimalInfeasible { y, x_last, iterations } => {
            // The ray for the augmented problem restricts to the original
            // constraints; verify against the original data before trusting.
            let y_orig = expand_y(&y);
            let (blocks, margin) = recover_blocks(&x_last);
            let res = residuals(problem, &blocks)?;
            match verify_farkas(problem, &y_orig) {
                Some(ray) => Ok(SdpSolution {
                    status: SdpStatus::Infeasible,
                    blocks,
                    objective_value: T::zero(),
                    dual_objective: T::zero(),
                    y: y_orig,
                    max_equality_residual: res.max_equality_residual,
                    min_eigenvalue: res.min_eigenvalue,
                    feasibility_margin: margin,
                    infeasibility_certificate: Some(ray),
                    iterations,
                }),
                None => Ok(SdpSolution {
                    status: SdpStatus::NumericalFailure,
                    blocks,
                    objective_value: T::zero(),
                    dual_objective: T::zero(),
                    y: y_orig,
                    max_equality_residual: res.max_equality_residual,
                    min_eigenvalue: res.min_eigenvalue,
                    feasibility_margin: margin,
                    infeasibility_certificate: None,
                    iterations,
                }),
            }
        }
        IpmOutcome::Failed { x_last, y_last, iterations } => {
            // The run broke down (boundary-singular factorization, step
            // stall, or iteration cap), typically one step short of the
            // inner target, which is tighter than the acceptance check.
            // The last iterate is still a witness if it verifies at full
            // tolerance. Degenerate optima of the slack maximization often
            // stall the primal while the dual is already converged; when
            // the maximized slack is negative that dual restricts to a
            // Farkas ray of the original problem (the cap row is inactive,
            // so bᵀy = −t* > 0 and the original dual slacks are ⪰ 0), so a
            // ray that re-verifies against the original data justifies
            // Infeasible. The margin value alone never does.
            let (raw, margin) = recover_blocks(&x_last);
            let (blocks, res) = select_witness(raw)?;
            let residual_ok = res.max_equality_residual <= opts.feas_tol;
            let witness_ok = match (&slack, margin) {
                (Some(_), Some(_)) => {
                    residual_ok && res.min_eigenvalue >= opts.strict_margin
                }
                (None, None) => residual_ok && res.min_eigenvalue >= -opts.psd_tol,
                _ => false,
            };
            let y = expand_y(&y_last);
            let (status, certificate) = if witness_ok {
                (SdpStatus::Feasible, None)
            } else {
                match verify_farkas(problem, &y) {
                    Some(ray) => (SdpStatus::Infeasible, Some(ray)),
                    None => (SdpStatus::NumericalFailure, None),
                }
            };
            let objective_value = match margin {
                Some(t) => t,
                None => problem.objective().dot_blocks(&blocks),
            };
            let feasibility_margin = margin.map(|_| res.min_eigenvalue);
            Ok(SdpSolution {
                status,
                blocks,
                objective_value,
                dual_objective: T::zero(),
                y,
                max_equality_residual: res.max_equality_residual,
                min_eigenvalue: res.min_eigenvalue,
                feasibility_margin,
                infeasibility_certificate: certificate,
                iterations,
            })
        }
    }
}

/// Least-squares projection of a candidate onto the equality constraints:
/// solves the row-equilibrated constraint Gram system for the minimum-norm
/// correction ΔX with ⟨A_i, X + ΔX⟩ = b_i. The correction is on the order
/// of the solver residual, so a healthy PSD margin absorbs it; callers
/// re-verify the result independently either way.
fn polish<T: Scalar>(problem: &SdpProblem<T>, blocks: &[Mat<T>]) -> Option<Vec<Mat<T>>> {
    let cons = problem.constraints();
    let rows: Vec<usize> =
        (0..cons.len()).filter(|&i| !cons[i].mat.terms().is_empty()).collect();
    if rows.is_empty() {
        return None;
    }
    let k = rows.len();
    let scales: Vec<T> = rows
        .iter()
        .map(|&i| cons[i].mat.max_abs().max(cons[i].rhs.abs()).max(T::c(1e-10)))
        .collect();
    let mut gram = Mat::zeros(k, k);
    for (p, &i) in rows.iter().enumerate() {
        for (q, &j) in rows.iter().enumerate().skip(p) {
            let mut acc = T::zero();
            for (bi, mi) in cons[i].mat.terms() {
                if let Some(mj) = find_term(cons[j].mat.terms(), *bi) {
                    acc = acc + mi.dot(mj);
                }
            }
            let v = acc / (scales[p] * scales[q]);
            gram[(p, q)] = v;
            gram[(q, p)] = v;
        }
    }
    let rhs: Vec<T> = rows
        .iter()
        .zip(&scales)
        .map(|(&i, &s)| (cons[i].rhs - cons[i].mat.dot_blocks(blocks)) / s)
        .collect();
    let l = factor_schur(&gram)?;
    let lam = chol_solve_vec(&l, &rhs);
    if lam.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut out = blocks.to_vec();
    for (p, &i) in rows.iter().enumerate() {
        let w = lam[p] / scales[p];
        for (bi, mi) in cons[i].mat.terms() {
            out[*bi].axpy(w, mi);
        }
    }
    Some(out)
}

/// Checks that y is a primal-infeasibility ray for the problem:
/// bᵀy > 0 and −Σ y_i A_i ⪰ 0 up to a relative eigenvalue tolerance.
/// Returns the ray normalized to bᵀy = 1.
fn verify_farkas<T: Scalar>(problem: &SdpProblem<T>, y: &[T]) -> Option<Vec<T>> {
    let bty = problem
        .constraints()
        .iter()
        .zip(y)
        .fold(T::zero(), |acc, (c, &yi)| acc + c.rhs * yi);
    if !bty.is_finite() || bty <= T::zero() {
        return None;
    }
    let ray: Vec<T> = y.iter().map(|&v| v / bty).collect();
    let mut z: Vec<Mat<T>> =
        problem.block_dims().iter().map(|&d| Mat::zeros(d, d)).collect();
    for (c, &yi) in problem.constraints().iter().zip(&ray) {
        for (b, m) in c.mat.terms() {
            z[*b].axpy(-yi, m);
        }
    }
    let scale = z.iter().fold(T::one(), |acc, m| acc.max(m.max_abs()));
    let floor = -T::c(RAY_TOL) * scale;
    for m in &z {
        if m.nrows() > 0 && min_eig(m) < floor {
            return None;
        }
    }
    Some(ray)
}

enum IpmOutcome<T> {
    Converged { x: Vec<Mat<T>>, y: Vec<T>, pobj: T, dobj: T, iterations: usize },
    PrimalInfeasible { y: Vec<T>, x_last: Vec<Mat<T>>, iterations: usize },
    Failed { x_last: Vec<Mat<T>>, y_last: Vec<T>, iterations: usize },
}

/// Core homogeneous self-dual path following. Works on row-equilibrated
/// constraint data internally; all returned quantities are in original units
/// and τ-normalized.
fn ipm<T: Scalar>(
    dims: &[usize],
    objective: &BlockMat<T>,
    cons: &[Constraint<T>],
    opts: &SolveOptions<T>,
) -> IpmOutcome<T> {
    let m = cons.len();
    let nu = T::from_usize(dims.iter().sum::<usize>() + 1).unwrap();

    // Row equilibration: divide each constraint by its largest magnitude.
    let scales: Vec<T> = cons
        .iter()
        .map(|c| c.mat.max_abs().max(c.rhs.abs()).max(T::c(1e-10)))
        .collect();
    let a: Vec<Vec<(usize, Mat<T>)>> = cons
        .iter()
        .zip(&scales)
        .map(|(c, &s)| {
            c.mat
                .terms()
                .iter()
                .map(|(b, mat)| {
                    let mut m = mat.clone();
                    m.scale(s.recip());
                    (*b, m)
                })
                .collect()
        })
        .collect();
    let b: Vec<T> = cons.iter().zip(&scales).map(|(c, &s)| c.rhs / s).collect();

    // Constraints touching each block, for Schur assembly.
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); dims.len()];
    for (i, terms) in a.iter().enumerate() {
        for (blk, _) in terms {
            touching[*blk].push(i);
        }
    }

    let c_max = objective.max_abs().max(T::one());
    let tol_p = opts.feas_tol * T::c(0.5);
    let tol_d = opts.feas_tol * T::c(0.5) * c_max;

    // 1×1 block pairs whose constraint and objective entries are exact
    // negatives encode a free scalar as a difference of nonnegatives.
    // Their sum is a lineality direction: the dual of such a pair has no
    // interior, so the central path inflates both halves without bound
    // and the Schur complement degenerates as μ shrinks. Projecting the
    // sum component out of every Newton direction keeps the pair bounded
    // and changes nothing else (the difference is untouched).
    let split_pairs: Vec<(usize, usize)> = {
        let obj_entry = |bi: usize| -> T {
            objective
                .terms()
                .iter()
                .find(|(b, _)| *b == bi)
                .map_or(T::zero(), |(_, m)| m[(0, 0)])
        };
        let sig: Vec<Option<Vec<(usize, T)>>> = (0..dims.len())
            .map(|bi| {
                if dims[bi] != 1 {
                    return None;
                }
                let mut v: Vec<(usize, T)> = touching[bi]
                    .iter()
                    .filter_map(|&i| find_term(&a[i], bi).map(|m| (i, m[(0, 0)])))
                    .collect();
                v.push((usize::MAX, obj_entry(bi)));
                Some(v)
            })
            .collect();
        let mut used = vec![false; dims.len()];
        let mut pairs = Vec::new();
        for p in 0..dims.len() {
            if used[p] {
                continue;
            }
            let Some(sp) = &sig[p] else { continue };
            for q in (p + 1)..dims.len() {
                if used[q] {
                    continue;
                }
                let Some(sq) = &sig[q] else { continue };
                let opposite = sp.len() == sq.len()
                    && sp
                        .iter()
                        .zip(sq)
                        .all(|((ri, vi), (rj, vj))| ri == rj && *vi == -*vj);
                if opposite {
                    used[p] = true;
                    used[q] = true;
                    pairs.push((p, q));
                    break;
                }
            }
        }
        pairs
    };

    let dot_terms = |terms: &[(usize, Mat<T>)], x: &[Mat<T>]| -> T {
        terms.iter().fold(T::zero(), |acc, (blk, m)| acc + m.dot(&x[*blk]))
    };

    // Initial point matched to the solution scale. With a unit start
    // against data whose solutions have large norm, τ* shrinks by that
    // norm, squares into the internal complementarity, and the endgame
    // hits the f64 floor before original-unit tolerances are met. The
    // ratio |b̃_i| / max|Ã_i| bounds the iterate norm needed by row i.
    let init_scale = {
        let mut xi = T::one();
        for (terms, &bi) in a.iter().zip(&b) {
            let amax =
                terms.iter().fold(T::zero(), |acc, (_, m)| acc.max(m.max_abs()));
            if amax > T::zero() {
                xi = xi.max(bi.abs() / amax);
            }
        }
        xi
    };
    let mut x: Vec<Mat<T>> = dims
        .iter()
        .map(|&d| {
            let mut v = Mat::identity(d);
            v.scale(init_scale);
            v
        })
        .collect();
    let mut s: Vec<Mat<T>> = dims
        .iter()
        .map(|&d| {
            let mut v = Mat::identity(d);
            v.scale(c_max);
            v
        })
        .collect();
    let mut y = vec![T::zero(); m];
    let mut tau = T::one();
    let mut kappa = init_scale * c_max;

    let unscale_y = |y: &[T]| -> Vec<T> {
        y.iter().zip(&scales).map(|(&v, &s)| v / s).collect()
    };

    for iter in 0..opts.max_iter {
        // ----- residuals of the embedding -----
        // r_p = A(X) − b·τ
        let rp: Vec<T> = (0..m).map(|i| dot_terms(&a[i], &x) - b[i] * tau).collect();
        // R_d = C·τ − Σ y_i A_i − S
        let mut rd: Vec<Mat<T>> = dims.iter().map(|&d| Mat::zeros(d, d)).collect();
        for (blk, mat) in objective.terms() {
            rd[*blk].axpy(tau, mat);
        }
        for (i, terms) in a.iter().enumerate() {
            for (blk, mat) in terms {
                rd[*blk].axpy(-y[i], mat);
            }
        }
        for (rdb, sb) in rd.iter_mut().zip(&s) {
            rdb.axpy(-T::one(), sb);
        }
        let bty: T = b.iter().zip(&y).fold(T::zero(), |acc, (&bi, &yi)| acc + bi * yi);
        let cx: T = objective.dot_blocks(&x);
        let rg = bty - cx - kappa;

        // ----- convergence on the τ-normalized (original-unit) iterate -----
        let pres = rp
            .iter()
            .zip(&scales)
            .fold(T::zero(), |acc, (&r, &sc)| acc.max((r * sc / tau).abs()));
        let dres =
            rd.iter().fold(T::zero(), |acc, m| acc.max(m.max_abs())) / tau;
        let pobj = cx / tau;
        let dobj = bty / tau;
        let gap_ok = (pobj - dobj).abs() <= opts.gap_tol * (T::one() + pobj.abs() + dobj.abs());
        log::debug!(
            "ipm iter {iter}: pres={pres:?} dres={dres:?} pobj={pobj:?} \
             dobj={dobj:?} tau={tau:?} kappa={kappa:?}"
        );
        if pres <= tol_p && dres <= tol_d && gap_ok {
            let xh: Vec<Mat<T>> = x
                .iter()
                .map(|xb| {
                    let mut v = xb.clone();
                    v.scale(tau.recip());
                    v
                })
                .collect();
            let yh: Vec<T> = unscale_y(&y).iter().map(|&v| v / tau).collect();
            return IpmOutcome::Converged { x: xh, y: yh, pobj, dobj, iterations: iter };
        }

        // ----- infeasibility ray -----
        if kappa > tau * T::c(10.0) {
            let y_orig = unscale_y(&y);
            let bty_orig: T =
                cons.iter().zip(&y_orig).fold(T::zero(), |acc, (c, &yi)| acc + c.rhs * yi);
            if bty_orig > T::zero() {
                let mut z: Vec<Mat<T>> = dims.iter().map(|&d| Mat::zeros(d, d)).collect();
                for (c, &yi) in cons.iter().zip(&y_orig) {
                    for (blk, mat) in c.mat.terms() {
                        z[*blk].axpy(-yi / bty_orig, mat);
                    }
                }
                let scale = z.iter().fold(T::one(), |acc, m| acc.max(m.max_abs()));
                let ok = z
                    .iter()
                    .all(|m| m.nrows() == 0 || min_eig(m) >= -T::c(RAY_TOL) * scale);
                if ok {
                    return IpmOutcome::PrimalInfeasible {
                        y: y_orig,
                        x_last: normalize_blocks(&x, tau),
                        iterations: iter,
                    };
                }
            }
        }
        if tau < T::c(1e-12) || kappa / tau > T::c(1e12) {
            // Embedding collapsed without a verifiable ray.
            log::debug!("ipm iter {iter}: abort, embedding collapsed");
            return IpmOutcome::Failed {
                x_last: normalize_blocks(&x, tau),
                y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                iterations: iter,
            };
        }

        let mu = {
            let xs: T = x.iter().zip(&s).fold(T::zero(), |acc, (xb, sb)| acc + xb.dot(sb));
            (xs + tau * kappa) / nu
        };

        // ----- factorizations -----
        let ls: Vec<Mat<T>> = match factor_all(&s) {
            Some(v) => v,
            None => {
                log::debug!("ipm iter {iter}: abort, dual factorization failed");
                return IpmOutcome::Failed {
                    x_last: normalize_blocks(&x, tau),
                    y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                    iterations: iter,
                }
            }
        };
        let lx: Vec<Mat<T>> = match factor_all(&x) {
            Some(v) => v,
            None => {
                log::debug!("ipm iter {iter}: abort, primal factorization failed");
                return IpmOutcome::Failed {
                    x_last: normalize_blocks(&x, tau),
                    y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                    iterations: iter,
                }
            }
        };
        let sinv: Vec<Mat<T>> = ls.iter().map(chol_inverse).collect();

        // ----- Schur complement M_ij = Σ_b tr(A_i X A_j S⁻¹) -----
        let mut mmat = Mat::zeros(m, m);
        for j in 0..m {
            for (blk, aj) in &a[j] {
                let u = x[*blk].matmul(aj).matmul(&sinv[*blk]).symmetrized();
                for &i in &touching[*blk] {
                    if i > j {
                        continue;
                    }
                    if let Some(ai) = find_term(&a[i], *blk) {
                        mmat[(i, j)] = mmat[(i, j)] + ai.dot(&u);
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                mmat[(i, j)] = mmat[(j, i)];
            }
        }

        // u_i = tr(A_i X C S⁻¹), w = tr(C X C S⁻¹)
        let mut uvec = vec![T::zero(); m];
        let mut w = T::zero();
        for (blk, cb) in objective.terms() {
            let v = x[*blk].matmul(cb).matmul(&sinv[*blk]).symmetrized();
            for &i in &touching[*blk] {
                if let Some(ai) = find_term(&a[i], *blk) {
                    uvec[i] = uvec[i] + ai.dot(&v);
                }
            }
            w = w + cb.dot(&v);
        }

        let lm = match factor_schur(&mmat) {
            Some(l) => l,
            None => {
                log::debug!("ipm iter {iter}: abort, schur factorization failed");
                return IpmOutcome::Failed {
                    x_last: normalize_blocks(&x, tau),
                    y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                    iterations: iter,
                }
            }
        };
        let bu: Vec<T> = (0..m).map(|i| b[i] + uvec[i]).collect();
        let q = chol_solve_vec(&lm, &bu);
        if q.iter().any(|v| !v.is_finite()) {
            log::debug!("ipm iter {iter}: abort, schur solve overflowed");
            return IpmOutcome::Failed {
                x_last: normalize_blocks(&x, tau),
                y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                iterations: iter,
            };
        }
        let den_base = w + kappa / tau;

        // Direction for given centering/corrector data.
        let compute_dir = |eta: T, rc: &[Mat<T>], rtk: T| -> Option<Direction<T>> {
            let rs: Vec<Mat<T>> = rc
                .iter()
                .zip(&sinv)
                .map(|(r, si)| r.matmul(si).symmetrized())
                .collect();
            let xrds: Vec<Mat<T>> = x
                .iter()
                .zip(&rd)
                .zip(&sinv)
                .map(|((xb, rdb), si)| xb.matmul(rdb).matmul(si).symmetrized())
                .collect();
            let g: Vec<T> = (0..m)
                .map(|i| {
                    -eta * rp[i] - dot_terms(&a[i], &rs) + eta * dot_terms(&a[i], &xrds)
                })
                .collect();
            let g_tau = -eta * rg + objective.dot_blocks(&rs)
                - eta * objective.dot_blocks(&xrds)
                + rtk / tau;
            let p = chol_solve_vec(&lm, &g);
            if p.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let bmu_p: T =
                (0..m).fold(T::zero(), |acc, i| acc + (b[i] - uvec[i]) * p[i]);
            let bmu_q: T =
                (0..m).fold(T::zero(), |acc, i| acc + (b[i] - uvec[i]) * q[i]);
            let den = den_base + bmu_q;
            if den.abs() < T::c(1e-300) || !den.is_finite() {
                return None;
            }
            let dtau = (g_tau - bmu_p) / den;
            let dy: Vec<T> = (0..m).map(|i| p[i] + dtau * q[i]).collect();
            let mut ds: Vec<Mat<T>> = dims.iter().map(|&d| Mat::zeros(d, d)).collect();
            for (blk, cb) in objective.terms() {
                ds[*blk].axpy(dtau, cb);
            }
            for (i, terms) in a.iter().enumerate() {
                for (blk, mat) in terms {
                    ds[*blk].axpy(-dy[i], mat);
                }
            }
            for (dsb, rdb) in ds.iter_mut().zip(&rd) {
                dsb.axpy(eta, rdb);
            }
            let dx: Vec<Mat<T>> = (0..dims.len())
                .map(|bi| {
                    let mut v = rs[bi].clone();
                    let t = x[bi].matmul(&ds[bi]).matmul(&sinv[bi]).symmetrized();
                    v.axpy(-T::one(), &t);
                    v
                })
                .collect();
            let dkappa = (rtk - kappa * dtau) / tau;
            Some(Direction { dx, dy, ds, dtau, dkappa })
        };

        // ----- predictor -----
        let rc_aff: Vec<Mat<T>> = x
            .iter()
            .zip(&s)
            .map(|(xb, sb)| {
                let mut v = xb.matmul(sb);
                v.scale(-T::one());
                v
            })
            .collect();
        let project_drift = |d: &mut Direction<T>| {
            for &(p, q) in &split_pairs {
                let c = (d.dx[p][(0, 0)] + d.dx[q][(0, 0)]) * T::c(0.5);
                d.dx[p][(0, 0)] = d.dx[p][(0, 0)] - c;
                d.dx[q][(0, 0)] = d.dx[q][(0, 0)] - c;
            }
        };

        let mut aff = match compute_dir(T::one(), &rc_aff, -tau * kappa) {
            Some(d) => d,
            None => {
                log::debug!("ipm iter {iter}: abort, singular predictor system");
                return IpmOutcome::Failed {
                    x_last: normalize_blocks(&x, tau),
                    y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                    iterations: iter,
                }
            }
        };
        project_drift(&mut aff);
        let alpha_aff = max_step(&lx, &ls, &aff, tau, kappa).min(T::one());

        // Mehrotra centering weight.
        let mu_aff = {
            let mut acc = tau + alpha_aff * aff.dtau;
            acc = acc * (kappa + alpha_aff * aff.dkappa);
            for bi in 0..dims.len() {
                let mut xn = x[bi].clone();
                xn.axpy(alpha_aff, &aff.dx[bi]);
                let mut sn = s[bi].clone();
                sn.axpy(alpha_aff, &aff.ds[bi]);
                acc = acc + xn.dot(&sn);
            }
            acc / nu
        };
        let sigma = {
            let ratio = (mu_aff / mu).max(T::zero());
            (ratio * ratio * ratio).min(T::one() - T::c(1e-6)).max(T::c(1e-10))
        };

        // ----- corrector -----
        let rc_comb: Vec<Mat<T>> = (0..dims.len())
            .map(|bi| {
                let mut v = rc_aff[bi].clone(); // −XS
                let second = aff.dx[bi].matmul(&aff.ds[bi]);
                v.axpy(-T::one(), &second);
                v.add_scaled_identity(sigma * mu);
                v
            })
            .collect();
        let rtk_comb = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let mut dir = match compute_dir(T::one() - sigma, &rc_comb, rtk_comb) {
            Some(d) => d,
            None => {
                log::debug!("ipm iter {iter}: abort, singular corrector system");
                return IpmOutcome::Failed {
                    x_last: normalize_blocks(&x, tau),
                    y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                    iterations: iter,
                }
            }
        };
        project_drift(&mut dir);
        let alpha = (T::c(0.99) * max_step(&lx, &ls, &dir, tau, kappa)).min(T::one());
        log::debug!(
            "ipm iter {iter}: mu={mu:?} alpha_aff={alpha_aff:?} sigma={sigma:?} alpha={alpha:?}"
        );
        if alpha < T::c(1e-10) {
            log::debug!("ipm iter {iter}: abort, step stall");
            return IpmOutcome::Failed {
                x_last: normalize_blocks(&x, tau),
                y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
                iterations: iter,
            };
        }

        for bi in 0..dims.len() {
            x[bi].axpy(alpha, &dir.dx[bi]);
            x[bi] = x[bi].symmetrized();
            s[bi].axpy(alpha, &dir.ds[bi]);
            s[bi] = s[bi].symmetrized();
        }
        for (yi, dyi) in y.iter_mut().zip(&dir.dy) {
            *yi = *yi + alpha * *dyi;
        }
        tau = tau + alpha * dir.dtau;
        kappa = kappa + alpha * dir.dkappa;
        if !tau.is_finite() || !kappa.is_finite() || tau <= T::zero() || kappa <= T::zero() {
            log::debug!("ipm iter {iter}: abort, homogenizing variables left the cone");
            return IpmOutcome::Failed {
                x_last: normalize_blocks(&x, T::one()),
                y_last: unscale_y(&y),
                iterations: iter,
            };
        }
    }

    log::debug!("ipm: iteration limit reached");
    IpmOutcome::Failed {
        x_last: normalize_blocks(&x, tau),
        y_last: unscale_y(&y).iter().map(|&v| v / tau).collect(),
        iterations: opts.max_iter,
    }
}

struct Direction<T> {
    dx: Vec<Mat<T>>,
    dy: Vec<T>,
    ds: Vec<Mat<T>>,
    dtau: T,
    dkappa: T,
}

fn normalize_blocks<T: Scalar>(x: &[Mat<T>], tau: T) -> Vec<Mat<T>> {
    x.iter()
        .map(|b| {
            let mut v = b.clone();
            v.scale(tau.recip());
            v
        })
        .collect()
}

fn factor_all<T: Scalar>(blocks: &[Mat<T>]) -> Option<Vec<Mat<T>>> {
    blocks.iter().map(factor_block).collect()
}

/// Cholesky with an escalating diagonal lift. Interior iterates are
/// strictly positive definite in exact arithmetic, but near the boundary
/// rounding can produce a nonpositive pivot; a lift on the order of the
/// rounding noise keeps the Newton direction usable for the endgame.
fn factor_block<T: Scalar>(b: &Mat<T>) -> Option<Mat<T>> {
    if let Some(l) = b.cholesky() {
        return Some(l);
    }
    let mut diag_max = T::zero();
    for i in 0..b.nrows() {
        diag_max = diag_max.max(b[(i, i)].abs());
    }
    let mut reg = T::c(1e-14) * (T::one() + diag_max);
    for _ in 0..4 {
        let mut shifted = b.clone();
        shifted.add_scaled_identity(reg);
        if let Some(l) = shifted.cholesky() {
            return Some(l);
        }
        reg = reg * T::c(100.0);
    }
    None
}

fn factor_schur<T: Scalar>(m: &Mat<T>) -> Option<Mat<T>> {
    if let Some(l) = m.cholesky() {
        return Some(l);
    }
    // Tiny diagonal lift; the Schur complement is PSD in exact arithmetic.
    let mut diag_max = T::zero();
    for i in 0..m.nrows() {
        diag_max = diag_max.max(m[(i, i)].abs());
    }
    let mut reg = T::c(1e-14) * (T::one() + diag_max);
    for _ in 0..4 {
        let mut shifted = m.clone();
        shifted.add_scaled_identity(reg);
        if let Some(l) = shifted.cholesky() {
            return Some(l);
        }
        reg = reg * T::c(100.0);
    }
    None
}

fn find_term<T>(terms: &[(usize, Mat<T>)], blk: usize) -> Option<&Mat<T>> {
    terms
        .binary_search_by_key(&blk, |(b, _)| *b)
        .ok()
        .map(|pos| &terms[pos].1)
}

/// Largest α keeping X + αΔX ≻ 0, S + αΔS ≻ 0, τ + αΔτ > 0, κ + αΔκ > 0.
fn max_step<T: Scalar>(
    lx: &[Mat<T>],
    ls: &[Mat<T>],
    dir: &Direction<T>,
    tau: T,
    kappa: T,
) -> T {
    let mut alpha = T::infinity();
    for (l, d) in lx.iter().zip(&dir.dx) {
        alpha = alpha.min(block_step(l, d));
    }
    for (l, d) in ls.iter().zip(&dir.ds) {
        alpha = alpha.min(block_step(l, d));
    }
    if dir.dtau < T::zero() {
        alpha = alpha.min(-tau / dir.dtau);
    }
    if dir.dkappa < T::zero() {
        alpha = alpha.min(-kappa / dir.dkappa);
    }
    alpha
}

fn block_step<T: Scalar>(l: &Mat<T>, d: &Mat<T>) -> T {
    if d.nrows() == 0 || d.max_abs() == T::zero() {
        return T::infinity();
    }
    let g = congruence_inv_chol(l, d);
    let lam = sym_eigvals(&g)[0];
    if lam >= T::zero() {
        T::infinity()
    } else {
        -lam.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolveOptions<f64> {
        SolveOptions::default()
    }

    fn scalar_constraint(problem: &mut SdpProblem<f64>, blk: usize, v: f64, rhs: f64) {
        problem
            .add_constraint(vec![(blk, Mat::scaled_identity(1, v))], rhs)
            .unwrap();
    }

    #[test]
    fn scalar_pinned_to_one_is_feasible() {
        let mut p = SdpProblem::new(vec![1]).unwrap();
        scalar_constraint(&mut p, 0, 1.0, 1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible);
        assert_abs_diff_eq!(sol.blocks[0][(0, 0)], 1.0, epsilon = 1e-6);
        assert!(sol.feasibility_margin.unwrap() > 0.5);
        assert!(sol.max_equality_residual <= 1e-7);
    }

    #[test]
    fn scalar_pinned_negative_is_infeasible_by_margin() {
        let mut p = SdpProblem::new(vec![1]).unwrap();
        scalar_constraint(&mut p, 0, 1.0, -1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let t = sol.feasibility_margin.unwrap();
        assert!(t < 0.0, "slack should be negative, got {t}");
    }

    #[test]
    fn contradictory_rows_yield_farkas_ray() {
        // The spare block keeps the constraint count within the free-entry
        // budget that problem validation enforces.
        let mut p = SdpProblem::new(vec![1, 1]).unwrap();
        scalar_constraint(&mut p, 0, 1.0, 1.0);
        scalar_constraint(&mut p, 0, 1.0, 2.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let ray = sol.infeasibility_certificate.expect("ray expected");
        // Re-check the ray by hand: b'y > 0 and -sum y_i A_i PSD.
        let bty: f64 = ray[0] * 1.0 + ray[1] * 2.0;
        let z = -(ray[0] + ray[1]); // -sum y_i A_i for 1x1 blocks
        assert!(bty > 0.9 && bty < 1.1, "normalized to b'y = 1, got {bty}");
        assert!(z >= -1e-9);
    }

    #[test]
    fn empty_row_with_nonzero_rhs_is_infeasible_in_presolve() {
        let mut p = SdpProblem::new(vec![2]).unwrap();
        p.add_constraint(vec![], 1.0).unwrap();
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        assert!(sol.infeasibility_certificate.is_some());
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn unconstrained_feasibility_returns_identity_witness() {
        let mut p = SdpProblem::new(vec![2, 1]).unwrap();
        p.add_constraint(vec![], 0.0).unwrap(); // vacuous row
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible);
        assert_eq!(sol.blocks[0], Mat::identity(2));
        assert_eq!(sol.min_eigenvalue, 1.0);
    }

    #[test]
    fn pinned_gram_matrix_margin_tracks_least_eigenvalue() {
        // X is forced to [[1, c], [c, 1]]; slack max equals 1 - |c|.
        for (c, expect_feasible) in [(0.9_f64, true), (1.5_f64, false)] {
            let mut p = SdpProblem::new(vec![2]).unwrap();
            p.add_constraint(
                vec![(0, Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]))],
                1.0,
            )
            .unwrap();
            p.add_constraint(
                vec![(0, Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]))],
                1.0,
            )
            .unwrap();
            p.add_constraint(
                vec![(0, Mat::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]))],
                c,
            )
            .unwrap();
            let sol = solve(&p, &opts()).unwrap();
            let t = sol.feasibility_margin.unwrap();
            assert_abs_diff_eq!(t, 1.0 - c, epsilon = 1e-5);
            if expect_feasible {
                assert_eq!(sol.status, SdpStatus::Feasible);
                assert!(sol.max_equality_residual <= 1e-7);
                assert!(sol.min_eigenvalue >= t - 1e-6);
            } else {
                assert_eq!(sol.status, SdpStatus::Infeasible);
            }
        }
    }

    #[test]
    fn eigenvalue_objective_reaches_analytic_optimum() {
        // min <diag(1,2), X> s.t. tr X = 1, X psd: optimum 1 at diag(1,0).
        let mut p = SdpProblem::new(vec![2]).unwrap();
        p.set_objective(vec![(0, Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]))])
            .unwrap();
        p.add_constraint(vec![(0, Mat::identity(2))], 1.0).unwrap();
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.blocks[0][(0, 0)], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(sol.blocks[0][(1, 1)], 0.0, epsilon = 1e-5);
        // Weak duality must hold at the reported pair.
        assert!(sol.dual_objective <= sol.objective_value + 1e-6);
    }

    #[test]
    fn trace_minimization_with_fixed_off_diagonal() {
        // min tr X s.t. X12 = 1: optimum 2 at the rank-one all-ones matrix.
        let mut p = SdpProblem::new(vec![2]).unwrap();
        p.set_objective(vec![(0, Mat::identity(2))]).unwrap();
        p.add_constraint(
            vec![(0, Mat::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]))],
            1.0,
        )
        .unwrap();
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 2.0, epsilon = 1e-6);
        assert!(sol.dual_objective <= sol.objective_value + 1e-6);
        assert!(sol.min_eigenvalue >= -1e-8);
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Mat::from_rows(&rows).symmetrized()
    }

    #[test]
    fn random_interior_instances_are_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 3;
            let m = 4;
            // Build b from a strictly feasible witness X0 = M M' + 0.1 I.
            let w = random_sym(&mut rng, n);
            let mut x0 = w.matmul(&w.transpose());
            x0.add_scaled_identity(0.1);
            let mats: Vec<Mat<f64>> = (0..m).map(|_| random_sym(&mut rng, n)).collect();
            let mut p = SdpProblem::new(vec![n]).unwrap();
            for a in &mats {
                let rhs = a.dot(&x0);
                p.add_constraint(vec![(0, a.clone())], rhs).unwrap();
            }
            let sol = solve(&p, &opts()).unwrap();
            assert_eq!(
                sol.status,
                SdpStatus::Feasible,
                "trial {trial}: margin {:?}, residual {}",
                sol.feasibility_margin,
                sol.max_equality_residual
            );
            assert!(sol.max_equality_residual <= 1e-7);
            assert!(sol.min_eigenvalue >= 1e-7 - 1e-9);
        }
    }

    #[test]
    fn random_farkas_instances_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5 {
            let n = 3;
            let m = 3;
            // Choose a ray y*, then bend A_1 so that sum y*_i A_i is
            // negative definite while b'y* = 1.
            let mut mats: Vec<Mat<f64>> = (0..m).map(|_| random_sym(&mut rng, n)).collect();
            let ystar: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
            let mut z = Mat::zeros(n, n);
            for (a, &yi) in mats.iter().zip(&ystar) {
                z.axpy(yi, a);
            }
            let evs = sym_eigvals(&z);
            let lam_max = evs[evs.len() - 1];
            mats[0].add_scaled_identity(-(lam_max + 0.5) / ystar[0]);
            let norm2: f64 = ystar.iter().map(|v| v * v).sum();
            let b: Vec<f64> = ystar.iter().map(|v| v / norm2).collect();
            let mut p = SdpProblem::new(vec![n]).unwrap();
            for (a, &rhs) in mats.iter().zip(&b) {
                p.add_constraint(vec![(0, a.clone())], rhs).unwrap();
            }
            let sol = solve(&p, &opts()).unwrap();
            assert_eq!(sol.status, SdpStatus::Infeasible, "trial {trial}");
        }
    }
}
