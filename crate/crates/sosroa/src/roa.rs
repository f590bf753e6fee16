//! Region-of-attraction estimation assembled from the certificate layer:
//! bisect the largest certifiable ball radius, maximize the Lyapunov
//! sublevel value certified inside that ball, then extract and
//! independently re-check the grid-connected component of the sublevel
//! set through the origin.

use std::collections::VecDeque;

use rayon::prelude::*;
use thiserror::Error;

use crate::poly::{Polynomial, VectorField};
use crate::sdp::{solve, SdpError, SdpStatus, SolveOptions};
use crate::setgeom::PointSet;
use crate::sos::{
    build_h_program, build_level_program, extract_certificate, CertificateParams, FreeOp,
    HProgram, Identity, MonomialBasis, SosCertificate, SosError,
};
use crate::Scalar;

/// Tolerance for the sampled re-check of the certificate conditions on
/// component grid points. Polished certificates carry identity residuals
/// around 1e-9 absolute, so 1e-6 leaves three orders of headroom while
/// still catching any genuinely broken certificate.
pub const SAMPLED_CONDITION_TOL: f64 = 1e-6;

/// The verification grid covers [-m·r, m·r]^n with m slightly above one,
/// so the certified ball boundary is visible inside the box instead of
/// being clipped by it.
pub const COMPONENT_BOX_MARGIN: f64 = 1.05;

/// Hard cap on verification grid size, matching the reference-grid cap.
const MAX_GRID_CELLS: usize = 100_000_000;

#[derive(Debug, Error)]
pub enum RoaError<T: Scalar> {
    /// Every bisection query came back infeasible or undecided, so not
    /// even the first midpoint radius is certifiable.
    #[error("no certifiable radius in [{}, {}] after {} oracle calls", trace.lo, trace.hi, trace.steps.len())]
    NoFeasibleRadius { trace: BisectionTrace<T> },
    /// A positive lower search bound was requested but is itself not
    /// certifiable, which breaks the bisection invariant.
    #[error("anchor radius {r} is not certifiable; lower r_min or widen the interval")]
    AnchorInfeasible { r: T },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    /// The certificate fails a structural precondition of grid
    /// verification, e.g. the origin cell falls outside its own claimed
    /// sublevel set.
    #[error("certificate rejected: {0}")]
    BadCertificate(String),
    /// A grid sample inside the certified component violates one of the
    /// certificate conditions beyond `SAMPLED_CONDITION_TOL`.
    #[error("sampled condition violated at {point:?}: {detail}")]
    SampledConditionViolated { point: Vec<T>, detail: String },
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Outcome of one certification attempt at a fixed radius.
#[derive(Debug)]
pub enum OracleOutcome<T> {
    /// A certificate was found and independently revalidated.
    Feasible(Box<SosCertificate<T>>),
    /// The solver produced a certificate of infeasibility.
    Infeasible,
    /// The solver could not decide. Bisection treats this the same as
    /// infeasible so the returned radius stays a certified lower bound.
    Unknown,
}

/// Query log of one bisection run, kept for diagnostics and reporting.
#[derive(Debug, Clone)]
pub struct BisectionTrace<T> {
    /// (query point, was feasible) in query order.
    pub steps: Vec<(T, bool)>,
    /// Final bracket. `lo` is the largest point proven feasible (or the
    /// unqueried anchor when none was), `hi` the smallest proven
    /// infeasible (or the untouched upper bound).
    pub lo: T,
    pub hi: T,
    pub tol: T,
}

impl<T: Scalar> BisectionTrace<T> {
    /// Placeholder for estimates not produced by a bisection run.
    pub fn empty() -> Self {
        BisectionTrace { steps: Vec::new(), lo: T::zero(), hi: T::zero(), tol: T::zero() }
    }

    /// Number of infeasible queries lying strictly below some feasible
    /// query. A monotone oracle produces none; a positive count means
    /// the oracle is noisy near the feasibility boundary (typically
    /// numerical failures being counted as infeasible).
    pub fn monotonicity_violations(&self) -> usize {
        let max_feasible = self
            .steps
            .iter()
            .filter(|s| s.1)
            .map(|s| s.0)
            .fold(T::neg_infinity(), T::max);
        self.steps.iter().filter(|s| !s.1 && s.0 < max_feasible).count()
    }
}

/// Largest feasible query with its witness (`None` when every query
/// failed), plus the full query log.
pub type BisectionResult<T, C> = (Option<(T, C)>, BisectionTrace<T>);

/// Largest-feasible-value search by midpoint bisection on [lo, hi].
///
/// `lo` is assumed feasible without being queried (callers validate
/// their anchor separately) and `hi` is assumed infeasible. The oracle
/// returns `Ok(Some(witness))` when a query is feasible, `Ok(None)` when
/// it is infeasible or undecidable, and any error aborts the search.
pub fn bisect<T: Scalar, C, E>(
    lo: T,
    hi: T,
    tol: T,
    mut oracle: impl FnMut(T) -> Result<Option<C>, E>,
) -> Result<BisectionResult<T, C>, E> {
    assert!(lo.is_finite() && hi.is_finite() && lo < hi, "bisect needs a finite interval");
    assert!(tol.is_finite() && tol > T::zero(), "bisect needs a positive tolerance");
    let (mut lo, mut hi) = (lo, hi);
    let mut best = None;
    let mut steps = Vec::new();
    while hi - lo > tol {
        let mid = (lo + hi) / T::c(2.0);
        // The bracket can become unsplittable in floating point before
        // its width reaches tol; stop instead of looping in place.
        if mid <= lo || mid >= hi {
            break;
        }
        match oracle(mid)? {
            Some(witness) => {
                steps.push((mid, true));
                best = Some((mid, witness));
                lo = mid;
            }
            None => {
                steps.push((mid, false));
                hi = mid;
            }
        }
    }
    Ok((best, BisectionTrace { steps, lo, hi, tol }))
}

/// One certification attempt: build the ball program at radius `r`,
/// solve it, and revalidate any claimed certificate from scratch.
/// Solver indecision maps to [`OracleOutcome::Unknown`], never to
/// infeasibility, and a feasible solve whose certificate fails
/// revalidation is also downgraded to Unknown.
pub fn h_oracle<T: Scalar>(
    f: &VectorField<T>,
    degree: u32,
    r: T,
    params: &CertificateParams<T>,
) -> Result<OracleOutcome<T>, RoaError<T>> {
    let h = build_h_program(f, degree, r, params)?;
    let compiled = h.program.compile()?;
    let sol = solve(compiled.problem(), &SolveOptions::default())?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::Feasible => {
            if let Some(cert) = refine_for_containment(&h) {
                return Ok(OracleOutcome::Feasible(cert));
            }
            match extract_certificate(&h, &compiled, &sol) {
                Ok(cert) => Ok(OracleOutcome::Feasible(Box::new(cert))),
                Err(e) => {
                    log::warn!("feasible solve at r = {r} failed certificate extraction: {e}");
                    Ok(OracleOutcome::Unknown)
                }
            }
        }
        SdpStatus::Infeasible => Ok(OracleOutcome::Infeasible),
        SdpStatus::NumericalFailure => Ok(OracleOutcome::Unknown),
    }
}

/// Re-solves the ball program with the extra requirement that P itself be
/// a sum of squares, and returns the certificate from that restricted
/// program when it is strictly feasible.
///
/// The plain feasibility solve maximizes a uniform eigenvalue slack across
/// all Gram blocks, which inflates s₂ along with everything else. Identity
/// (i) makes the top-degree form of P equal to s₁'s top form minus s₂'s
/// top form times Σxᵢ², so an inflated s₂ routinely leaves P unbounded
/// below; then no sublevel set fits inside any ball and the level search
/// collapses to 0. Writing P = σ with σ SOS pins the top form of P to a
/// strictly positive-definite one, so P is coercive and its small sublevel
/// sets become containable. The restriction only selects among solutions;
/// the unrestricted solve still decides the feasibility verdict, and a
/// `None` here tells the caller to fall back to it.
fn refine_for_containment<T: Scalar>(h: &HProgram<T>) -> Option<Box<SosCertificate<T>>> {
    let mut program = h.program.clone();
    let half = h.meta.effective_degree / 2;
    let n = program.nvars();
    // σ's basis starts at degree 1 like the multipliers': P(0) = 0 would
    // pin a constant basis element's Gram entries to zero and destroy the
    // strict interior the margin solve needs.
    let sigma = program
        .add_sos_var(MonomialBasis::degree_range(n, 1, half))
        .ok()?;
    let one = Polynomial::constant(n, T::one());
    program
        .add_identity(Identity {
            free_terms: vec![(h.p_var, FreeOp::Mul(one))],
            sos_terms: vec![(sigma, Polynomial::constant(n, -T::one()))],
            target: Polynomial::zero(n),
        })
        .ok()?;
    let compiled = program.compile().ok()?;
    let sol = solve(compiled.problem(), &SolveOptions::default()).ok()?;
    if !matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible) {
        log::info!(
            "coercive refinement at r = {} is {:?}; keeping the unrestricted solution",
            h.meta.r,
            sol.status
        );
        return None;
    }
    match extract_certificate(h, &compiled, &sol) {
        Ok(cert) => Some(Box::new(cert)),
        Err(e) => {
            log::warn!("coercive refinement failed certificate extraction: {e}");
            None
        }
    }
}

/// A certified radius with the certificate proving it and the query log
/// that led to it.
pub type CertifiedRadius<T> = (T, Box<SosCertificate<T>>, BisectionTrace<T>);

/// Finds the largest radius in [r_min, r_max] whose ball admits a
/// degree-`degree` certificate, by bisection.
///
/// `r_min = 0` is the vacuous anchor (the empty ball); a positive
/// `r_min` is queried up front and must be feasible. Undecided solves
/// count as infeasible, so the returned radius is always certified by
/// the returned certificate, never extrapolated.
pub fn bisect_radius<T: Scalar>(
    f: &VectorField<T>,
    degree: u32,
    r_min: T,
    r_max: T,
    r_tol: T,
    params: &CertificateParams<T>,
) -> Result<CertifiedRadius<T>, RoaError<T>> {
    if !r_min.is_finite() || !r_max.is_finite() || r_min < T::zero() || r_min >= r_max {
        return Err(RoaError::BadConfig(format!(
            "radius interval [{r_min}, {r_max}] must be finite with 0 <= r_min < r_max"
        )));
    }
    if !r_tol.is_finite() || r_tol <= T::zero() {
        return Err(RoaError::BadConfig(format!("radius tolerance {r_tol} must be positive")));
    }

    let mut anchor = None;
    if r_min > T::zero() {
        match h_oracle(f, degree, r_min, params)? {
            OracleOutcome::Feasible(cert) => anchor = Some((r_min, cert)),
            _ => return Err(RoaError::AnchorInfeasible { r: r_min }),
        }
    }

    let (found, mut trace) = bisect(r_min, r_max, r_tol, |r| {
        Ok::<_, RoaError<T>>(match h_oracle(f, degree, r, params)? {
            OracleOutcome::Feasible(cert) => Some(cert),
            OracleOutcome::Infeasible | OracleOutcome::Unknown => None,
        })
    })?;
    if anchor.is_some() {
        trace.steps.insert(0, (r_min, true));
    }
    match found.or(anchor) {
        Some((r, cert)) => Ok((r, cert, trace)),
        None => Err(RoaError::NoFeasibleRadius { trace }),
    }
}

/// Finds the largest `a` in (0, a_hi] such that the sublevel set
/// {x : p(x) <= a} is certified inside the ball of radius `r`, by
/// bisection from the vacuous level a = 0 (whose sublevel set is the
/// single point 0 for any valid certificate polynomial).
///
/// Each queried level is accepted only when the solver reports
/// feasibility *and* the decomposition revalidates from scratch.
/// Returns 0 with a loud warning when every query fails.
pub fn max_level<T: Scalar>(
    p: &Polynomial<T>,
    r: T,
    a_hi: T,
    a_tol: T,
    mult_degree: u32,
) -> Result<(T, BisectionTrace<T>), RoaError<T>> {
    if !r.is_finite() || r <= T::zero() {
        return Err(RoaError::BadConfig(format!("ball radius {r} must be positive")));
    }
    if !a_hi.is_finite() || a_hi <= T::zero() {
        return Err(RoaError::BadConfig(format!("level upper bound {a_hi} must be positive")));
    }
    if !a_tol.is_finite() || a_tol <= T::zero() {
        return Err(RoaError::BadConfig(format!("level tolerance {a_tol} must be positive")));
    }

    let (found, trace) = bisect(T::zero(), a_hi, a_tol, |a| {
        let lp = build_level_program(p, a, r, mult_degree)?;
        let compiled = lp.program.compile()?;
        let sol = solve(compiled.problem(), &SolveOptions::default())?;
        let feasible = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible)
            && match compiled.extract(&sol) {
                Ok(_) => true,
                Err(e) => {
                    log::warn!("level {a} reported feasible but failed revalidation: {e}");
                    false
                }
            };
        Ok::<_, RoaError<T>>(feasible.then_some(()))
    })?;
    match found {
        Some((a, ())) => Ok((a, trace)),
        None => {
            log::warn!(
                "no certifiable sublevel value in (0, {a_hi}]; \
                 reporting the degenerate level 0"
            );
            Ok((T::zero(), trace))
        }
    }
}

/// A certified inner estimate of the region of attraction: the
/// grid-connected component through the origin of
/// {x : P(x) <= level} ∩ B_r, together with the certificate backing it.
#[derive(Debug, Clone)]
pub struct RoaEstimate<T> {
    pub certificate: SosCertificate<T>,
    /// Certified sublevel value; the component of {P <= level} through
    /// the origin lies in the region of attraction.
    pub level: T,
    /// Cell centers of the certified component on the verification grid.
    pub component: PointSet<T>,
    /// Per-axis resolution of the verification grid.
    pub resolution: usize,
    /// Largest ball radius proven certifiable.
    pub r_best: T,
    /// Upper end of the final bisection bracket, r_best + r_tol.
    pub r_star_estimate: T,
    /// Filled by callers that compare against a simulation reference.
    pub hausdorff_to_reference: Option<T>,
    /// Radius-bisection query log; empty when the estimate was not
    /// produced by bisection.
    pub trace: BisectionTrace<T>,
}

/// Extracts the grid-connected component of {P <= a} ∩ B_r through the
/// origin and independently re-checks the certificate conditions
///
///   β‖x‖² <= P(x) <= γ‖x‖²  and  ∇P·f(x) <= −δ‖x‖²
///
/// at every component cell center (up to [`SAMPLED_CONDITION_TOL`]).
/// Membership itself is exact: ‖x‖ <= r and P(x) <= a with no slack.
/// Connectivity is across grid faces (2n neighbors), seeded at the cell
/// containing the origin.
pub fn verify_component<T: Scalar>(
    f: &VectorField<T>,
    cert: &SosCertificate<T>,
    a: T,
    resolution: usize,
) -> Result<RoaEstimate<T>, RoaError<T>> {
    let n = f.nvars();
    if cert.p.nvars() != n {
        return Err(RoaError::BadConfig(format!(
            "certificate has {} variables but the field has {n}",
            cert.p.nvars()
        )));
    }
    if !a.is_finite() || a <= T::zero() {
        return Err(RoaError::BadConfig(format!(
            "level {a} must be positive and finite; the a = 0 sublevel set is the single point 0"
        )));
    }
    if resolution == 0 {
        return Err(RoaError::BadConfig("grid resolution must be at least 1".into()));
    }
    let total = resolution
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_GRID_CELLS)
        .ok_or_else(|| {
            RoaError::BadConfig(format!(
                "verification grid {resolution}^{n} exceeds {MAX_GRID_CELLS} cells"
            ))
        })?;

    let r = cert.meta.r;
    let half = r * T::c(COMPONENT_BOX_MARGIN);
    let w = (half + half) / T::c(resolution as f64);

    // Row-major cell indexing, axis 0 slowest, matching the reference grid.
    let mut stride = vec![1usize; n];
    for axis in (0..n.saturating_sub(1)).rev() {
        stride[axis] = stride[axis + 1] * resolution;
    }
    let decode = |idx: usize| -> Vec<T> {
        let mut x = vec![T::zero(); n];
        for axis in 0..n {
            let k = (idx / stride[axis]) % resolution;
            x[axis] = w * (T::c(k as f64) + T::c(0.5)) - half;
        }
        x
    };

    let r2 = r * r;
    let member: Vec<bool> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let x = decode(idx);
            let norm2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
            norm2 <= r2 && cert.p.evaluate(&x) <= a
        })
        .collect();

    // Cell index resolution/2 spans [0, w) on every axis (exactly
    // [-w/2, w/2) for odd resolutions), so it always contains the origin.
    let k0 = resolution / 2;
    let origin_idx = stride.iter().map(|s| s * k0).sum::<usize>();
    if !member[origin_idx] {
        return Err(RoaError::BadCertificate(format!(
            "origin cell center {:?} lies outside the claimed sublevel set {{P <= {a}}}; \
             a valid certificate has P(0) = 0",
            decode(origin_idx)
        )));
    }

    let mut reached = vec![false; total];
    reached[origin_idx] = true;
    let mut queue = VecDeque::from([origin_idx]);
    while let Some(idx) = queue.pop_front() {
        for &s in &stride {
            let k = (idx / s) % resolution;
            for nb in [
                (k > 0).then(|| idx - s),
                (k + 1 < resolution).then(|| idx + s),
            ]
            .into_iter()
            .flatten()
            {
                if member[nb] && !reached[nb] {
                    reached[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }

    let cells: Vec<usize> = (0..total).filter(|&i| reached[i]).collect();
    let mut component = PointSet::new(n);
    for &i in &cells {
        component.push(&decode(i));
    }

    let pdot = cert.p.lie_derivative(f);
    let tol = T::c(SAMPLED_CONDITION_TOL);
    let (beta, gamma, delta) = (cert.meta.beta, cert.meta.gamma, cert.meta.delta);
    let violation = cells.par_iter().find_map_any(|&i| {
        let x = decode(i);
        let norm2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let p = cert.p.evaluate(&x);
        if p < beta * norm2 - tol {
            return Some((x, format!("P = {p} is below beta*|x|^2 = {}", beta * norm2)));
        }
        if p > gamma * norm2 + tol {
            return Some((x, format!("P = {p} is above gamma*|x|^2 = {}", gamma * norm2)));
        }
        let pd = pdot.evaluate(&x);
        if pd > -delta * norm2 + tol {
            return Some((x, format!("dP/dt = {pd} is above -delta*|x|^2 = {}", -delta * norm2)));
        }
        None
    });
    if let Some((point, detail)) = violation {
        return Err(RoaError::SampledConditionViolated { point, detail });
    }

    log::info!(
        "verified component: {} of {total} cells, level {a}, ball radius {r}",
        component.len()
    );
    Ok(RoaEstimate {
        certificate: cert.clone(),
        level: a,
        component,
        resolution,
        r_best: r,
        r_star_estimate: r,
        hausdorff_to_reference: None,
        trace: BisectionTrace::empty(),
    })
}

/// Knobs for [`estimate_roa`]. Defaults match the certificate defaults:
/// search radii up to 1 at 1e-2 tolerance, levels at 1e-3, a 401-per-axis
/// verification grid, and a quadratic level multiplier.
#[derive(Debug, Clone)]
pub struct EstimateConfig<T> {
    pub r_min: T,
    pub r_max: T,
    pub r_tol: T,
    /// Absolute tolerance of the level bisection.
    pub a_tol: T,
    pub params: CertificateParams<T>,
    /// Per-axis resolution of the verification grid.
    pub resolution: usize,
    /// Gram degree of the level-program multiplier.
    pub level_degree: u32,
}

impl<T: Scalar> Default for EstimateConfig<T> {
    fn default() -> Self {
        EstimateConfig {
            r_min: T::zero(),
            r_max: T::one(),
            r_tol: T::c(1e-2),
            a_tol: T::c(1e-3),
            params: CertificateParams::default(),
            resolution: 401,
            level_degree: 2,
        }
    }
}

/// Maximum certification attempts at reduced radii after the frontier
/// radius yields no containable level.
const LEVEL_BACKOFF_ATTEMPTS: usize = 8;

/// Full pipeline: bisect the largest certifiable radius, maximize the
/// certified sublevel value inside that ball (searching up to γ·r², the
/// largest level any certificate allows on B_r), then verify and return
/// the origin component.
///
/// Right at the feasibility frontier the certificate class can lose
/// coercivity: every valid P dips negative somewhere outside the ball, so
/// no sublevel set is containable and the level search returns 0. The
/// frontier radius is still the right r* estimate, but it makes a useless
/// inner approximation, so the pipeline backs off: it retries at the
/// smaller radii the bisection already found feasible (then at halvings)
/// until some positive level certifies. Only if every retreat fails does
/// the estimate collapse to the origin-only component with level 0; the
/// radius certificate itself is still valid, so this is not an error.
pub fn estimate_roa<T: Scalar>(
    f: &VectorField<T>,
    degree: u32,
    config: &EstimateConfig<T>,
) -> Result<RoaEstimate<T>, RoaError<T>> {
    let (r_frontier, cert, trace) =
        bisect_radius(f, degree, config.r_min, config.r_max, config.r_tol, &config.params)?;

    let level_at = |p: &Polynomial<T>, r: T| -> Result<T, RoaError<T>> {
        let a_hi = config.params.gamma * r * r;
        Ok(max_level(p, r, a_hi, config.a_tol, config.level_degree)?.0)
    };

    let mut r_used = r_frontier;
    let mut cert_used = cert;
    let mut a = level_at(&cert_used.p, r_used)?;
    if a <= T::zero() {
        let mut candidates: Vec<T> = trace
            .steps
            .iter()
            .filter(|&&(rq, ok)| ok && rq < r_frontier)
            .map(|&(rq, _)| rq)
            .collect();
        let mut halved = r_frontier;
        for _ in 0..5 {
            halved = halved / T::c(2.0);
            candidates.push(halved);
        }
        candidates.retain(|&c| c > T::zero() && c >= config.r_min);
        candidates.sort_by(|x, y| y.partial_cmp(x).expect("radii are finite"));
        candidates.dedup();
        for cand in candidates.into_iter().take(LEVEL_BACKOFF_ATTEMPTS) {
            log::warn!(
                "no containable level at r = {r_used}; backing off to r = {cand}"
            );
            let OracleOutcome::Feasible(c2) = h_oracle(f, degree, cand, &config.params)? else {
                continue;
            };
            let a2 = level_at(&c2.p, cand)?;
            if a2 > T::zero() {
                r_used = cand;
                cert_used = c2;
                a = a2;
                break;
            }
        }
    }

    let mut est = if a > T::zero() {
        verify_component(f, &cert_used, a, config.resolution)?
    } else {
        let origin = vec![T::zero(); f.nvars()];
        let component =
            PointSet::from_points(f.nvars(), &[origin]).expect("origin point is finite");
        RoaEstimate {
            certificate: (*cert_used).clone(),
            level: T::zero(),
            component,
            resolution: config.resolution,
            r_best: r_used,
            r_star_estimate: r_frontier,
            hausdorff_to_reference: None,
            trace: BisectionTrace::empty(),
        }
    };
    est.r_star_estimate = r_frontier + config.r_tol;
    est.trace = trace;
    Ok(est)
}

/// Uniform samples from the closed ball of radius `r` in `n` variables,
/// deterministic for a fixed seed: spherical-normal direction scaled to
/// radius r·u^(1/n).
pub fn sample_ball(n: usize, r: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x: Vec<f64> =
                (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let scale = r * rng.gen::<f64>().powf(1.0 / n as f64) / norm;
                for v in &mut x {
                    *v *= scale;
                }
            }
            x
        })
        .collect()
}

/// Worst sampled violation of each certificate condition over `points`:
///
/// `[β‖x‖² − P(x),  P(x) − γ‖x‖²,  ∇P·f(x) + δ‖x‖²]`
///
/// Entries at or below zero mean every sample passes that condition; an
/// empty sample gives −∞ sentinels (vacuous pass).
pub fn sampled_hypothesis_margins(
    f: &VectorField<f64>,
    cert: &SosCertificate<f64>,
    points: &[Vec<f64>],
) -> [f64; 3] {
    let pdot = cert.p.lie_derivative(f);
    let (beta, gamma, delta) = (cert.meta.beta, cert.meta.gamma, cert.meta.delta);
    points
        .par_iter()
        .map(|x| {
            let n2 = x.iter().map(|v| v * v).sum::<f64>();
            let p = cert.p.evaluate(x);
            [beta * n2 - p, p - gamma * n2, pdot.evaluate(x) + delta * n2]
        })
        .reduce(
            || [f64::NEG_INFINITY; 3],
            |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])],
        )
}

/// Term-list JSON encoding of a polynomial: one object per monomial.
pub fn polynomial_json(p: &Polynomial<f64>) -> serde_json::Value {
    serde_json::Value::Array(
        p.terms()
            .map(|(m, c)| serde_json::json!({ "exponents": m.exponents(), "coefficient": c }))
            .collect(),
    )
}

impl RoaEstimate<f64> {
    /// Serializes the estimate for reporting. The component itself goes
    /// to CSV separately and appears here only by size.
    pub fn to_json(&self) -> serde_json::Value {
        let meta = &self.certificate.meta;
        serde_json::json!({
            "requested_degree": meta.requested_degree,
            "effective_degree": meta.effective_degree,
            "beta": meta.beta,
            "gamma": meta.gamma,
            "delta": meta.delta,
            "r_best": self.r_best,
            "r_star_estimate": self.r_star_estimate,
            "level": self.level,
            "lyapunov": polynomial_json(&self.certificate.p),
            "multipliers": self.certificate.multipliers.iter()
                .map(|m| polynomial_json(&m.poly))
                .collect::<Vec<_>>(),
            "max_identity_residual": self.certificate.max_identity_residual,
            "min_gram_eigenvalue": self.certificate.min_gram_eigenvalue,
            "component_size": self.component.len(),
            "resolution": self.resolution,
            "hausdorff_to_reference": self.hausdorff_to_reference,
            "radius_trace": {
                "queries": self.trace.steps.iter()
                    .map(|(r, ok)| serde_json::json!([r, ok]))
                    .collect::<Vec<_>>(),
                "lo": self.trace.lo,
                "hi": self.trace.hi,
                "tol": self.trace.tol,
            },
        })
    }
}
