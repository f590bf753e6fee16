//! Multivariate polynomials with dense exponent vectors and real
//! coefficients, plus polynomial vector fields.
//!
//! Canonical form invariants: no stored zero coefficients, terms ordered
//! graded-lexicographically, and the zero polynomial has degree 0. The
//! variable count is small (state dimensions up to 4), so operations are
//! plain nested loops over term maps.

mod parse;

pub use parse::PolyParseError;

use std::collections::BTreeMap;
use std::fmt;

use crate::Scalar;

/// Exponent vector of a single monomial, x₁^e₁ · … · xₙ^eₙ.
///
/// Ordering is graded-lexicographic: lower total degree first, ties broken
/// lexicographically with earlier variables dominant (x₁² before x₁x₂ before
/// x₂²). This ordering is the one fixed convention used everywhere (bases,
/// compiled constraint order, printed output).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    pub fn constant(nvars: usize) -> Self {
        Monomial { exps: vec![0; nvars] }
    }

    /// The monomial xᵢ (zero-based variable index).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Monomial { exps }
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn is_constant(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        assert_eq!(self.nvars(), other.nvars(), "variable count mismatch");
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn evaluate<T: Scalar>(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.nvars(), "point dimension mismatch");
        let mut acc = T::one();
        for (xi, &e) in x.iter().zip(&self.exps) {
            if e > 0 {
                acc = acc * xi.powi(e as i32);
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        debug_assert_eq!(self.nvars(), other.nvars());
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `nvars` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::constant(nvars), c);
        p
    }

    /// The polynomial xᵢ (zero-based index).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), T::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, T)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Σᵢ xᵢ², the squared Euclidean norm.
    pub fn sum_of_squares(nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        for i in 0..nvars {
            let mut exps = vec![0; nvars];
            exps[i] = 2;
            p.add_term(Monomial::new(exps), T::one());
        }
        p
    }

    /// Ball polynomial r² − Σᵢ xᵢ²; nonnegative exactly on the closed ball of
    /// radius r about the origin.
    pub fn ball(nvars: usize, r: T) -> Self {
        let mut p = Self::sum_of_squares(nvars);
        p = p.neg();
        p.add_term(Monomial::constant(nvars), r * r);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> T {
        self.terms.get(m).copied().unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coeff(&Monomial::constant(self.nvars))
    }

    /// Adds `c·m`, dropping the entry if the result is exactly zero.
    pub fn add_term(&mut self, m: Monomial, c: T) {
        assert_eq!(m.nvars(), self.nvars, "variable count mismatch");
        if c == T::zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let nv = *o.get() + c;
                if nv == T::zero() {
                    o.remove();
                } else {
                    *o.get_mut() = nv;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (m, &c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (m, &c) in other.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> Polynomial<T> {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -*v;
        }
        out
    }

    pub fn scale(&self, c: T) -> Polynomial<T> {
        let mut out = Self::zero(self.nvars);
        for (m, &v) in self.terms() {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = Self::zero(self.nvars);
        for (ma, &ca) in self.terms() {
            for (mb, &cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, c: T) -> Polynomial<T> {
        let mut out = Self::zero(self.nvars);
        for (ma, &ca) in self.terms() {
            out.add_term(ma.mul(m), ca * c);
        }
        out
    }

    /// Evaluates at a point.
    ///
    /// Panics on point dimension mismatch (contract violation).
    pub fn evaluate(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.nvars, "point dimension mismatch");
        let mut acc = T::zero();
        for (m, &c) in self.terms() {
            acc = acc + c * m.evaluate(x);
        }
        acc
    }

    /// Partial derivative ∂/∂xᵢ.
    pub fn partial(&self, i: usize) -> Polynomial<T> {
        assert!(i < self.nvars, "variable index out of range");
        let mut out = Self::zero(self.nvars);
        for (m, &c) in self.terms() {
            let e = m.exponents()[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[i] = e - 1;
            out.add_term(Monomial::new(exps), c * T::from_u32(e).unwrap());
        }
        out
    }

    /// Gradient as one polynomial per variable.
    pub fn gradient(&self) -> Vec<Polynomial<T>> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Lie derivative ∇pᵀf along a vector field.
    pub fn lie_derivative(&self, f: &VectorField<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, f.nvars(), "vector field dimension mismatch");
        let mut out = Self::zero(self.nvars);
        for i in 0..self.nvars {
            out = out.add(&self.partial(i).mul(f.component(i)));
        }
        out
    }

    /// Largest absolute coefficient difference over the union of monomials of
    /// both polynomials; a monomial absent from one side counts as 0 there.
    pub fn coeff_max_abs_diff(&self, other: &Polynomial<T>) -> T {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut worst = T::zero();
        for (m, &c) in self.terms() {
            worst = worst.max((c - other.coeff(m)).abs());
        }
        for (m, &c) in other.terms() {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn max_abs_coeff(&self) -> T {
        self.terms.values().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// Substitutes xᵢ ← c·xᵢ for all variables.
    pub fn scale_vars(&self, c: T) -> Polynomial<T> {
        let mut out = Self::zero(self.nvars);
        for (m, &v) in self.terms() {
            out.add_term(m.clone(), v * c.powi(m.degree() as i32));
        }
        out
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        parse::format_polynomial(self, out)
    }
}

/// Polynomial vector field ẋ = f(x).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    components: Vec<Polynomial<T>>,
    nvars: usize,
    origin_equilibrium: bool,
}

impl<T: Scalar> VectorField<T> {
    /// Builds a field from one component polynomial per state variable.
    ///
    /// Panics if the component count does not match the variable count of the
    /// components, or if it is zero (contract violation).
    pub fn new(components: Vec<Polynomial<T>>) -> Self {
        assert!(!components.is_empty(), "vector field needs at least one component");
        let nvars = components[0].nvars();
        assert_eq!(
            components.len(),
            nvars,
            "vector field needs exactly one component per variable"
        );
        for c in &components {
            assert_eq!(c.nvars(), nvars, "component variable counts differ");
        }
        let origin_equilibrium = components.iter().all(|c| c.constant_term() == T::zero());
        VectorField { components, nvars, origin_equilibrium }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn component(&self, i: usize) -> &Polynomial<T> {
        &self.components[i]
    }

    pub fn components(&self) -> &[Polynomial<T>] {
        &self.components
    }

    /// Whether every component has zero constant term, i.e. f(0) = 0 holds
    /// symbolically. Recorded at construction.
    pub fn origin_equilibrium(&self) -> bool {
        self.origin_equilibrium
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.nvars, "point dimension mismatch");
        assert_eq!(out.len(), self.nvars, "output dimension mismatch");
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.evaluate(x);
        }
    }

    /// State rescaling y = ρ·x: returns g with g(y) = ρ·f(y/ρ), the dynamics
    /// of y. Maps a system into a smaller ball while staying polynomial.
    pub fn rescale(&self, rho: T) -> VectorField<T> {
        assert!(rho > T::zero(), "rescale factor must be positive");
        let comps = self
            .components
            .iter()
            .map(|c| c.scale_vars(rho.recip()).scale(rho))
            .collect();
        VectorField::new(comps)
    }
}

/// Reverse-time Van der Pol oscillator: ẋ₁ = −x₂, ẋ₂ = x₁ + x₂(x₁² − 1).
/// Its region of attraction is the interior of the Van der Pol limit cycle.
pub fn reverse_van_der_pol<T: Scalar>() -> VectorField<T> {
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let f1 = x2.neg();
    let f2 = x1.add(&x2.mul(&x1.mul(&x1).sub(&Polynomial::constant(2, T::one()))));
    VectorField::new(vec![f1, f2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial<f64> {
        Polynomial::parse(s, 2).unwrap()
    }

    #[test]
    fn monomial_order_is_graded_lex() {
        let c = Monomial::constant(2);
        let x2 = Monomial::var(2, 1);
        let x1 = Monomial::var(2, 0);
        let x1x2 = x1.mul(&x2);
        let x1sq = x1.mul(&x1);
        let x2cube = x2.mul(&x2).mul(&x2);
        let x1sqx2 = x1sq.mul(&x2);
        let mut v = vec![
            x1sq.clone(),
            x1.clone(),
            c.clone(),
            x1x2.clone(),
            x2.clone(),
            x2cube.clone(),
            x1sqx2.clone(),
        ];
        v.sort();
        assert_eq!(v, vec![c, x1, x2, x1sq, x1x2, x1sqx2, x2cube]);
    }

    #[test]
    fn zero_polynomial_has_degree_zero() {
        assert_eq!(Polynomial::<f64>::zero(3).degree(), 0);
        assert_eq!(Polynomial::<f64>::constant(3, 5.0).degree(), 0);
    }

    #[test]
    fn arithmetic_keeps_canonical_form() {
        // (x1 + x2)·(x1 − x2) = x1² − x2²; the x1·x2 cross terms cancel
        // exactly and must not linger as explicit zeros.
        let prod = p("x1 + x2").mul(&p("x1 - x2"));
        assert_eq!(prod, p("x1^2 - x2^2"));
        assert_eq!(prod.num_terms(), 2);

        let diff = p("x1 + x2").sub(&p("x1 + x2"));
        assert!(diff.is_zero());
        assert_eq!(diff.num_terms(), 0);
    }

    #[test]
    fn evaluate_matches_hand_computation() {
        // Reverse Van der Pol second component at (1, 1):
        // 1 + 1·(1 − 1) = 1.
        let f = reverse_van_der_pol::<f64>();
        assert_eq!(f.component(1).evaluate(&[1.0, 1.0]), 1.0);

        let q = p("1 - 2*x1^2*x2 + x2^3");
        // hand: 1 − 2·4·3 + 27 = 4
        assert_eq!(q.evaluate(&[2.0, 3.0]), 4.0);
    }

    #[test]
    #[should_panic(expected = "point dimension mismatch")]
    fn evaluate_rejects_wrong_dimension() {
        p("x1 + x2").evaluate(&[1.0]);
    }

    #[test]
    fn gradient_hand_value() {
        let q = p("x1^2*x2");
        let g = q.gradient();
        assert_eq!(g[0], p("2*x1*x2"));
        assert_eq!(g[1], p("x1^2"));
    }

    #[test]
    fn lie_derivative_of_norm_square_along_van_der_pol() {
        // ∇(x1²+x2²)ᵀ f = 2x1(−x2) + 2x2(x1 + x2(x1²−1))
        //               = 2x1²x2² − 2x2².
        let f = reverse_van_der_pol::<f64>();
        let v = Polynomial::<f64>::sum_of_squares(2);
        let lie = v.lie_derivative(&f);
        assert_eq!(lie, p("2*x1^2*x2^2 - 2*x2^2"));
    }

    #[test]
    fn lie_derivative_linear_field() {
        let f = VectorField::new(vec![p("-x1"), p("-x2")]);
        assert!(f.origin_equilibrium());
        let lie = p("x1").lie_derivative(&f);
        assert_eq!(lie, p("-x1"));
    }

    #[test]
    fn coeff_max_abs_diff_counts_missing_terms() {
        // Differ by the x2 term, which is absent on one side.
        assert_eq!(p("x1 + x2").coeff_max_abs_diff(&p("x1")), 1.0);
        assert_eq!(p("x1").coeff_max_abs_diff(&p("x1 + x2")), 1.0);
        assert_eq!(p("3*x1").coeff_max_abs_diff(&p("x1")), 2.0);
        assert_eq!(p("x1").coeff_max_abs_diff(&p("x1")), 0.0);
    }

    #[test]
    fn ball_polynomial() {
        let u = Polynomial::<f64>::ball(2, 1.0);
        assert_eq!(u, p("1 - x1^2 - x2^2"));
        assert_eq!(u.evaluate(&[0.0, 0.0]), 1.0);
        assert_eq!(u.evaluate(&[1.0, 0.0]), 0.0);
        assert!(u.evaluate(&[1.0, 1.0]) < 0.0);
    }

    #[test]
    fn origin_equilibrium_flag() {
        let f = reverse_van_der_pol::<f64>();
        assert!(f.origin_equilibrium());
        let g = VectorField::new(vec![p("1 - x1"), p("-x2")]);
        assert!(!g.origin_equilibrium());
    }

    #[test]
    fn rescale_van_der_pol_matches_hand_derivation() {
        // y = x/3 turns ẋ₂ = x₁ + x₂(x₁² − 1) into ẏ₂ = y₁ + y₂(9y₁² − 1).
        let f = reverse_van_der_pol::<f64>();
        let g = f.rescale(1.0 / 3.0);
        assert!(g.component(0).coeff_max_abs_diff(&p("-x2")) < 1e-12);
        assert!(g.component(1).coeff_max_abs_diff(&p("x1 + 9*x1^2*x2 - x2")) < 1e-12);
        assert!(g.origin_equilibrium());
    }

    #[test]
    fn scale_vars_evaluates_consistently() {
        let q = p("1 - 2*x1^2*x2 + x2^3");
        let s = q.scale_vars(0.5);
        let x = [0.7, -1.3];
        let scaled = [0.5 * 0.7, 0.5 * -1.3];
        assert!((s.evaluate(&x) - q.evaluate(&scaled)).abs() < 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly(max_degree: u32) -> impl Strategy<Value = Polynomial<f64>> {
            let term = (0u32..=max_degree, 0u32..=max_degree, -3.0f64..3.0).prop_filter_map(
                "degree bound",
                move |(e1, e2, c)| {
                    (e1 + e2 <= max_degree).then(|| (Monomial::new(vec![e1, e2]), c))
                },
            );
            proptest::collection::vec(term, 0..8)
                .prop_map(|terms| Polynomial::from_terms(2, terms))
        }

        proptest! {
            #[test]
            fn product_evaluates_to_product(
                a in arb_poly(4),
                b in arb_poly(4),
                x in -1.0f64..1.0,
                y in -1.0f64..1.0,
            ) {
                let pt = [x, y];
                let lhs = a.mul(&b).evaluate(&pt);
                let rhs = a.evaluate(&pt) * b.evaluate(&pt);
                let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
                prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
            }

            #[test]
            fn gradient_matches_central_differences(
                a in arb_poly(8),
                x in -1.0f64..1.0,
                y in -1.0f64..1.0,
            ) {
                let h = 1e-6;
                let g = a.gradient();
                for i in 0..2 {
                    let mut hi = [x, y];
                    let mut lo = [x, y];
                    hi[i] += h;
                    lo[i] -= h;
                    let fd = (a.evaluate(&hi) - a.evaluate(&lo)) / (2.0 * h);
                    let an = g[i].evaluate(&[x, y]);
                    prop_assert!((fd - an).abs() <= 1e-5 * 1.0f64.max(an.abs()));
                }
            }

            #[test]
            fn lie_derivative_is_pointwise_inner_product(
                a in arb_poly(4),
                x in -1.0f64..1.0,
                y in -1.0f64..1.0,
            ) {
                let f = reverse_van_der_pol::<f64>();
                let lie = a.lie_derivative(&f);
                let pt = [x, y];
                let g = a.gradient();
                let mut fx = [0.0; 2];
                f.evaluate(&pt, &mut fx);
                let direct = g[0].evaluate(&pt) * fx[0] + g[1].evaluate(&pt) * fx[1];
                prop_assert!((lie.evaluate(&pt) - direct).abs() <= 1e-10_f64.max(1e-12 * direct.abs()));
            }

            #[test]
            fn arithmetic_never_stores_zero_coefficients(
                a in arb_poly(4),
                b in arb_poly(4),
            ) {
                for q in [a.add(&b), a.sub(&b), a.mul(&b)] {
                    prop_assert!(q.terms().all(|(_, &c)| c != 0.0));
                }
            }
        }
    }
}
