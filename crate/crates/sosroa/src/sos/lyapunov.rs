//! The two program families driving the region-of-attraction pipeline:
//! radial-bound decay certificates on a ball, and sublevel-set containment.

use super::{
    CompiledSos, FreeOp, FreeVar, Identity, MonomialBasis, SosAssignment, SosDecomposition,
    SosError, SosProgram, SosVar,
};
use crate::poly::{Polynomial, VectorField};
use crate::sdp::SdpSolution;
use crate::Scalar;

/// The fixed positive scalars of the certificate inequalities
/// β‖x‖² ≤ P(x) ≤ γ‖x‖² and ∇P(x)ᵀf(x) ≤ −δ‖x‖².
#[derive(Debug, Clone, Copy)]
pub struct CertificateParams<T> {
    pub beta: T,
    pub gamma: T,
    pub delta: T,
}

impl<T: Scalar> Default for CertificateParams<T> {
    fn default() -> Self {
        CertificateParams { beta: T::c(1e-3), gamma: T::c(1e3), delta: T::c(1e-3) }
    }
}

impl<T: Scalar> CertificateParams<T> {
    fn validate(&self) -> Result<(), SosError> {
        let ok = self.beta.is_finite()
            && self.gamma.is_finite()
            && self.delta.is_finite()
            && self.beta > T::zero()
            && self.gamma > T::zero()
            && self.delta > T::zero()
            && self.beta <= self.gamma;
        if ok {
            Ok(())
        } else {
            Err(SosError::InvalidParameter(
                "certificate scalars must satisfy 0 < beta <= gamma and delta > 0".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HMeta<T> {
    pub beta: T,
    pub gamma: T,
    pub delta: T,
    pub r: T,
    pub requested_degree: u32,
    /// Requested degree rounded up to even for the Gram bases.
    pub effective_degree: u32,
    /// Degrees of the six ball multipliers, in identity order
    /// (s₁, s₂, s₃, s₄, s₅, s₆); 0 marks an absent multiplier.
    pub multiplier_degrees: [u32; 6],
}

/// Feasibility program whose solutions certify a degree-d polynomial P with
/// β‖x‖² ≤ P ≤ γ‖x‖² and P decaying at rate δ‖x‖² along f, all witnessed on
/// the ball of radius r.
#[derive(Debug, Clone)]
pub struct HProgram<T> {
    pub program: SosProgram<T>,
    pub p_var: FreeVar,
    pub multipliers: [SosVar; 6],
    pub meta: HMeta<T>,
}

/// Builds the three-identity ball certificate program:
///
/// (i)   P − β·Σxᵢ²      = s₁ + s₂·u_r
/// (ii)  −P + γ·Σxᵢ²     = s₃ + s₄·u_r
/// (iii) −∇Pᵀf − δ·Σxᵢ²  = s₅ + s₆·u_r
///
/// with u_r = r² − Σxᵢ², P supported on monomials of degree 2..=d (the
/// radial bounds force P(0) = 0 and ∇P(0) = 0, so constant and linear
/// coefficients are dropped rather than carried as dead freedom), and the
/// multipliers s₁…s₆ SOS at the minimal degrees balancing each identity.
///
/// Every multiplier basis starts at degree 1, not 0: evaluating the
/// identities at the origin forces sᵢ(0) = 0, so a constant basis element
/// would pin a Gram diagonal entry to zero and leave the feasible set
/// without interior, which the margin-based solve would then reject even
/// for certifiable systems.
pub fn build_h_program<T: Scalar>(
    f: &VectorField<T>,
    d: u32,
    r: T,
    params: &CertificateParams<T>,
) -> Result<HProgram<T>, SosError> {
    params.validate()?;
    if !r.is_finite() || r <= T::zero() {
        return Err(SosError::InvalidParameter(format!(
            "ball radius must be positive and finite, got {r}"
        )));
    }
    if !f.origin_equilibrium() {
        return Err(SosError::InvalidParameter(
            "vector field must vanish at the origin".into(),
        ));
    }
    if d < 2 {
        return Err(SosError::InvalidParameter(format!(
            "candidate degree {d} cannot balance the identities: the radial \
             bounds need multipliers of degree d and d-2, so d must be at least 2"
        )));
    }

    let n = f.nvars();
    let d_eff = d + d % 2;
    let deg_f = f.degree();

    // Identity degrees: (i) and (ii) top out at deg P; (iii) at
    // deg ∇Pᵀf = d + deg f − 1, rounded up to even for the Gram bases.
    let e1 = d_eff;
    let e3 = (d_eff + deg_f).saturating_sub(1).div_ceil(2) * 2;
    let e3 = e3.max(2);
    let h = [e1 / 2, (e1 - 2) / 2, e1 / 2, (e1 - 2) / 2, e3 / 2, (e3 - 2) / 2];

    let mut program = SosProgram::new(n);
    let p_var = program.add_free_var(
        MonomialBasis::degree_range(n, 2, d_eff).monomials().to_vec(),
    )?;
    let mut vars = Vec::with_capacity(6);
    for &hk in &h {
        vars.push(program.add_sos_var(MonomialBasis::degree_range(n, 1, hk))?);
    }
    let multipliers: [SosVar; 6] = vars.try_into().expect("six multipliers");

    let u_r = Polynomial::ball(n, r);
    let sumsq = Polynomial::sum_of_squares(n);
    let one = Polynomial::constant(n, T::one());
    let neg_one = Polynomial::constant(n, -T::one());

    program.add_identity(Identity {
        free_terms: vec![(p_var, FreeOp::Mul(one.clone()))],
        sos_terms: vec![
            (multipliers[0], neg_one.clone()),
            (multipliers[1], u_r.neg()),
        ],
        target: sumsq.scale(params.beta),
    })?;
    program.add_identity(Identity {
        free_terms: vec![(p_var, FreeOp::Mul(neg_one.clone()))],
        sos_terms: vec![
            (multipliers[2], neg_one.clone()),
            (multipliers[3], u_r.neg()),
        ],
        target: sumsq.scale(-params.gamma),
    })?;
    program.add_identity(Identity {
        free_terms: vec![(p_var, FreeOp::NegLie(f.clone()))],
        sos_terms: vec![
            (multipliers[4], neg_one),
            (multipliers[5], u_r.neg()),
        ],
        target: sumsq.scale(params.delta),
    })?;

    let multiplier_degrees = [
        2 * h[0],
        2 * h[1],
        2 * h[2],
        2 * h[3],
        2 * h[4],
        2 * h[5],
    ];
    Ok(HProgram {
        program,
        p_var,
        multipliers,
        meta: HMeta {
            beta: params.beta,
            gamma: params.gamma,
            delta: params.delta,
            r,
            requested_degree: d,
            effective_degree: d_eff,
            multiplier_degrees,
        },
    })
}

/// Containment program: u_r − s·(a − P) SOS with s SOS of degree ≤ d_mult,
/// which certifies that the sublevel set {x : P(x) ≤ a} lies inside the
/// ball of radius r. Both bases here keep the constant monomial: s ≡ 1 is
/// the canonical witness, and nothing forces these polynomials to vanish
/// at the origin.
#[derive(Debug, Clone)]
pub struct LevelProgram<T> {
    pub program: SosProgram<T>,
    /// The certificate polynomial u_r − s·(a − P).
    pub slack_var: SosVar,
    /// The multiplier s.
    pub mult_var: SosVar,
    pub a: T,
    pub r: T,
}

pub fn build_level_program<T: Scalar>(
    p: &Polynomial<T>,
    a: T,
    r: T,
    d_mult: u32,
) -> Result<LevelProgram<T>, SosError> {
    if !a.is_finite() || a <= T::zero() {
        return Err(SosError::InvalidParameter(format!(
            "level must be positive and finite, got {a}"
        )));
    }
    if !r.is_finite() || r <= T::zero() {
        return Err(SosError::InvalidParameter(format!(
            "ball radius must be positive and finite, got {r}"
        )));
    }
    let n = p.nvars();
    let h_mult = d_mult / 2;
    let e0 = (2 * h_mult + p.degree()).max(2).div_ceil(2) * 2;

    let mut program = SosProgram::new(n);
    let slack_var = program.add_sos_var(MonomialBasis::degree_range(n, 0, e0 / 2))?;
    let mult_var = program.add_sos_var(MonomialBasis::degree_range(n, 0, h_mult))?;

    let one = Polynomial::constant(n, T::one());
    let a_minus_p = Polynomial::constant(n, a).sub(p);
    program.add_identity(Identity {
        sos_terms: vec![(slack_var, one), (mult_var, a_minus_p)],
        free_terms: vec![],
        target: Polynomial::ball(n, r),
    })?;

    Ok(LevelProgram { program, slack_var, mult_var, a, r })
}

/// A fully revalidated ball certificate: the candidate P, the six ball
/// multipliers with their Gram decompositions, and the scalars they were
/// certified against.
#[derive(Debug, Clone)]
pub struct SosCertificate<T> {
    pub p: Polynomial<T>,
    /// s₁…s₆ in identity order; absent multipliers are zero with 0×0 Grams.
    pub multipliers: Vec<SosDecomposition<T>>,
    pub meta: HMeta<T>,
    pub max_identity_residual: T,
    pub min_gram_eigenvalue: T,
}

/// Rebuilds the certificate from a feasible solution of the compiled
/// program and re-verifies it: Gram eigenvalues, identity residuals through
/// independent polynomial arithmetic, and the scalar constraints. Any
/// violation is an error; a certificate is never returned on partial
/// evidence.
pub fn extract_certificate<T: Scalar>(
    h: &HProgram<T>,
    compiled: &CompiledSos<T>,
    sol: &SdpSolution<T>,
) -> Result<SosCertificate<T>, SosError> {
    let SosAssignment { sos, free, max_identity_residual, min_gram_eigenvalue } =
        compiled.extract(sol)?;
    let p = free
        .get(h.p_var.index())
        .cloned()
        .ok_or(SosError::SolutionShape)?;
    let mut multipliers = Vec::with_capacity(6);
    for v in h.multipliers {
        multipliers.push(sos.get(v.index()).cloned().ok_or(SosError::SolutionShape)?);
    }
    CertificateParams { beta: h.meta.beta, gamma: h.meta.gamma, delta: h.meta.delta }
        .validate()?;
    Ok(SosCertificate {
        p,
        multipliers,
        meta: h.meta,
        max_identity_residual,
        min_gram_eigenvalue,
    })
}
