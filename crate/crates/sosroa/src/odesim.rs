//! Trajectory integration and ground-truth basin classification for
//! polynomial vector fields.
//!
//! Region-of-attraction estimates are validated against "what the flow
//! actually does": every grid cell of a bounding box is classified by
//! forward integration from its center, and a trajectory converges when it
//! enters a small ball around the origin, diverges when it leaves a large
//! escape ball, and stays undecided otherwise. Undecided never turns into
//! a crash; integration failures degrade to that verdict.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::poly::VectorField;
use crate::setgeom::PointSet;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum OdesimError {
    #[error("bounding box: {0}")]
    BadBox(String),
    #[error("vector field has {expected} variables, box has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
    #[error("grid of {resolution}^{dim} cells exceeds the supported size")]
    GridTooLarge { resolution: usize, dim: usize },
}

/// Outcome of forward integration from one initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Entered the convergence ball ‖x‖ ≤ converge_eps before t_max.
    ConvergedToOrigin,
    /// Left the escape ball ‖x‖ ≥ escape_radius before t_max.
    Diverged,
    /// Neither threshold reached, or the step size underflowed.
    Undecided,
}

/// Integration and classification controls.
#[derive(Debug, Clone)]
pub struct IntegrateOptions<T> {
    /// Horizon; integration stops here with [`Verdict::Undecided`].
    pub t_max: T,
    /// Convergence ball radius. Zero disables the early exit.
    pub converge_eps: T,
    /// Escape ball radius.
    pub escape_radius: T,
    /// Absolute tolerance of the embedded error estimate.
    pub abs_tol: T,
    /// Relative tolerance of the embedded error estimate.
    pub rel_tol: T,
    /// Fixed step size; disables the adaptive controller when set.
    pub fixed_step: Option<T>,
    /// Hard cap on accepted plus rejected steps.
    pub max_steps: usize,
}

impl<T: Scalar> Default for IntegrateOptions<T> {
    fn default() -> Self {
        IntegrateOptions {
            t_max: T::c(100.0),
            converge_eps: T::c(1e-3),
            escape_radius: T::c(10.0),
            abs_tol: T::c(1e-8),
            rel_tol: T::c(1e-6),
            fixed_step: None,
            max_steps: 1_000_000,
        }
    }
}

/// One integrated trajectory: the initial state, every accepted step, and
/// the classification verdict.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub initial: Vec<T>,
    /// Accepted (t, state) samples, starting with (0, initial).
    pub samples: Vec<(T, Vec<T>)>,
    pub verdict: Verdict,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_time(&self) -> T {
        self.samples.last().map_or(T::zero(), |(t, _)| *t)
    }

    pub fn final_state(&self) -> &[T] {
        self.samples.last().map_or(&self.initial, |(_, x)| x)
    }
}

// Dormand-Prince 5(4) tableau. The propagated solution is the fifth-order
// row; the fourth-order row feeds the embedded error estimate.
const STAGES: usize = 7;
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; STAGES] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Step-size growth and shrink limits of the adaptive controller.
const STEP_GROW_MAX: f64 = 5.0;
const STEP_SHRINK_MAX: f64 = 0.2;
/// Classical safety factor on the optimal step estimate.
const STEP_SAFETY: f64 = 0.9;

fn norm2<T: Scalar>(x: &[T]) -> T {
    let mut s = T::zero();
    for v in x {
        s = s + *v * *v;
    }
    s.sqrt()
}

/// Integrates `f` forward from `x0`, recording every accepted step.
pub fn integrate<T: Scalar>(
    f: &VectorField<T>,
    x0: &[T],
    opts: &IntegrateOptions<T>,
) -> Trajectory<T> {
    propagate(f, x0, opts, true)
}

/// Classification without sample recording; what the grid machinery uses.
pub fn classify<T: Scalar>(f: &VectorField<T>, x0: &[T], opts: &IntegrateOptions<T>) -> Verdict {
    propagate(f, x0, opts, false).verdict
}

fn propagate<T: Scalar>(
    f: &VectorField<T>,
    x0: &[T],
    opts: &IntegrateOptions<T>,
    record: bool,
) -> Trajectory<T> {
    let n = f.nvars();
    assert_eq!(x0.len(), n, "initial state dimension mismatch");
    let mut traj =
        Trajectory { initial: x0.to_vec(), samples: Vec::new(), verdict: Verdict::Undecided };
    if x0.iter().any(|v| !v.is_finite()) {
        return traj;
    }
    traj.samples.push((T::zero(), x0.to_vec()));

    if let Some(v) = threshold_verdict(x0, opts) {
        traj.verdict = v;
        return traj;
    }

    let mut t = T::zero();
    let mut x = x0.to_vec();
    let mut k = vec![vec![T::zero(); n]; STAGES];
    let mut xs = vec![T::zero(); n];
    let mut x5 = vec![T::zero(); n];
    let mut h = match opts.fixed_step {
        Some(h) => h,
        None => initial_step(f, &x, opts),
    };

    for _ in 0..opts.max_steps {
        if t >= opts.t_max {
            break;
        }
        let last = h >= opts.t_max - t;
        if last {
            h = opts.t_max - t;
        }

        // Seven stages; no first-same-as-last reuse, one extra evaluation
        // per step is irrelevant at this problem scale.
        f.evaluate(&x, &mut k[0]);
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s - 1][j];
                    if a != 0.0 {
                        acc = acc + T::c(a) * kj[i];
                    }
                }
                xs[i] = x[i] + h * acc;
            }
            f.evaluate(&xs, &mut k[s]);
        }

        let mut finite = true;
        for i in 0..n {
            let mut acc5 = T::zero();
            for s in 0..STAGES {
                if DP_B5[s] != 0.0 {
                    acc5 = acc5 + T::c(DP_B5[s]) * k[s][i];
                }
            }
            x5[i] = x[i] + h * acc5;
            finite &= x5[i].is_finite();
        }

        let mut grow = T::one();
        if opts.fixed_step.is_some() {
            if !finite {
                return traj; // Undecided: the flow blew past representable range.
            }
        } else {
            let err = if finite { error_norm(&x, &x5, &k, h, opts) } else { T::infinity() };
            if err.is_nan() || err > T::one() {
                // Rejected step: shrink and retry, degrade to Undecided on
                // underflow rather than looping forever.
                h = h * shrink_factor(err);
                if h < min_step(t) || !h.is_finite() {
                    return traj;
                }
                continue;
            }
            grow = grow_factor(err);
        }

        t = if last { opts.t_max } else { t + h };
        x.copy_from_slice(&x5);
        if record {
            traj.samples.push((t, x.clone()));
        }
        if let Some(v) = threshold_verdict(&x, opts) {
            traj.verdict = v;
            return traj;
        }
        h = h * grow;
    }
    traj
}

fn threshold_verdict<T: Scalar>(x: &[T], opts: &IntegrateOptions<T>) -> Option<Verdict> {
    let r = norm2(x);
    if opts.converge_eps > T::zero() && r <= opts.converge_eps {
        Some(Verdict::ConvergedToOrigin)
    } else if r >= opts.escape_radius {
        Some(Verdict::Diverged)
    } else {
        None
    }
}

/// Standard starting-step heuristic: balance the scaled norms of the state
/// and its derivative, falling back to a small fraction of the horizon.
fn initial_step<T: Scalar>(f: &VectorField<T>, x: &[T], opts: &IntegrateOptions<T>) -> T {
    let n = x.len();
    let mut dx = vec![T::zero(); n];
    f.evaluate(x, &mut dx);
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..n {
        let sc = opts.abs_tol + opts.rel_tol * x[i].abs();
        d0 = d0 + (x[i] / sc) * (x[i] / sc);
        d1 = d1 + (dx[i] / sc) * (dx[i] / sc);
    }
    let (d0, d1) = (d0.sqrt(), d1.sqrt());
    let fallback = opts.t_max * T::c(1e-6);
    if d0 < T::c(1e-10) || d1 < T::c(1e-10) {
        return fallback.max(T::c(1e-6));
    }
    (T::c(0.01) * d0 / d1).min(opts.t_max)
}

fn error_norm<T: Scalar>(
    x: &[T],
    x5: &[T],
    k: &[Vec<T>],
    h: T,
    opts: &IntegrateOptions<T>,
) -> T {
    let n = x.len();
    let mut s = T::zero();
    for i in 0..n {
        let mut e = T::zero();
        for (stage, ks) in k.iter().enumerate() {
            let db = DP_B5[stage] - DP_B4[stage];
            if db != 0.0 {
                e = e + T::c(db) * ks[i];
            }
        }
        e = e * h;
        let sc = opts.abs_tol + opts.rel_tol * x[i].abs().max(x5[i].abs());
        s = s + (e / sc) * (e / sc);
    }
    (s / T::c(n as f64)).sqrt()
}

fn grow_factor<T: Scalar>(err: T) -> T {
    if err <= T::zero() {
        return T::c(STEP_GROW_MAX);
    }
    (T::c(STEP_SAFETY) * err.powf(T::c(-0.2)))
        .min(T::c(STEP_GROW_MAX))
        .max(T::c(STEP_SHRINK_MAX))
}

fn shrink_factor<T: Scalar>(err: T) -> T {
    if !err.is_finite() {
        return T::c(STEP_SHRINK_MAX);
    }
    (T::c(STEP_SAFETY) * err.powf(T::c(-0.2))).min(T::c(STEP_SAFETY)).max(T::c(STEP_SHRINK_MAX))
}

/// Below this the adaptive controller reports step underflow.
fn min_step<T: Scalar>(t: T) -> T {
    T::c(1e-13) * (T::one() + t.abs())
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone)]
pub struct BoundingBox<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self, OdesimError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(OdesimError::BadBox("lo/hi dimension mismatch".into()));
        }
        for i in 0..lo.len() {
            if !lo[i].is_finite() || !hi[i].is_finite() || lo[i] >= hi[i] {
                return Err(OdesimError::BadBox(format!("axis {i} must satisfy lo < hi")));
            }
        }
        Ok(BoundingBox { lo, hi })
    }

    /// The symmetric box [−half, half]ⁿ.
    pub fn symmetric(half: T, dim: usize) -> Self {
        assert!(half > T::zero() && dim > 0);
        BoundingBox { lo: vec![-half; dim], hi: vec![half; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn contains_origin(&self) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= T::zero() && self.hi[i] >= T::zero())
    }
}

/// Per-cell classification of a grid over a bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    Inside,
    Outside,
    Undecided,
}

/// Uniform grid with one label per cell, row-major with axis 0 slowest.
#[derive(Debug, Clone)]
pub struct LabeledGrid<T> {
    bbox: BoundingBox<T>,
    resolution: usize,
    labels: Vec<CellLabel>,
}

impl<T: Scalar> LabeledGrid<T> {
    pub fn bbox(&self) -> &BoundingBox<T> {
        &self.bbox
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn num_cells(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    pub fn label(&self, flat: usize) -> CellLabel {
        self.labels[flat]
    }

    /// Center coordinates of a cell by flat index.
    pub fn cell_center(&self, flat: usize) -> Vec<T> {
        let n = self.dim();
        let mut c = vec![T::zero(); n];
        let mut rem = flat;
        for axis in (0..n).rev() {
            let idx = rem % self.resolution;
            rem /= self.resolution;
            c[axis] = self.axis_center(axis, idx);
        }
        c
    }

    fn axis_center(&self, axis: usize, idx: usize) -> T {
        let width = (self.bbox.hi[axis] - self.bbox.lo[axis]) / T::c(self.resolution as f64);
        self.bbox.lo[axis] + (T::c(idx as f64) + T::c(0.5)) * width
    }

    /// Euclidean diagonal of one cell; the discretization error radius
    /// reported alongside Hausdorff distances is half of this.
    pub fn cell_diagonal(&self) -> T {
        let mut s = T::zero();
        for axis in 0..self.dim() {
            let w = (self.bbox.hi[axis] - self.bbox.lo[axis]) / T::c(self.resolution as f64);
            s = s + w * w;
        }
        s.sqrt()
    }

    pub fn inside_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == CellLabel::Inside).count()
    }

    pub fn undecided_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == CellLabel::Undecided).count()
    }

    /// Centers of all Inside cells: the interior-plus-boundary
    /// discretization used for set-distance comparisons. Undecided cells
    /// are deliberately excluded so slow near-boundary trajectories never
    /// leak into reference sets.
    pub fn inside_points(&self) -> PointSet<T> {
        let mut set = PointSet::new(self.dim());
        for flat in 0..self.num_cells() {
            if self.labels[flat] == CellLabel::Inside {
                set.push(&self.cell_center(flat));
            }
        }
        set
    }

    /// Inside cells with at least one face neighbor that is not Inside.
    pub fn boundary_points(&self) -> PointSet<T> {
        let n = self.dim();
        let mut set = PointSet::new(n);
        let mut digits = vec![0usize; n];
        for flat in 0..self.num_cells() {
            self.decode(flat, &mut digits);
            if self.labels[flat] != CellLabel::Inside {
                continue;
            }
            let mut mixed = false;
            let mut stride = 1usize;
            for axis in (0..n).rev() {
                let d = digits[axis];
                if d > 0 && self.labels[flat - stride] != CellLabel::Inside {
                    mixed = true;
                }
                if d + 1 < self.resolution && self.labels[flat + stride] != CellLabel::Inside {
                    mixed = true;
                }
                stride *= self.resolution;
            }
            if mixed {
                set.push(&self.cell_center(flat));
            }
        }
        set
    }

    fn decode(&self, flat: usize, digits: &mut [usize]) {
        let mut rem = flat;
        for axis in (0..digits.len()).rev() {
            digits[axis] = rem % self.resolution;
            rem /= self.resolution;
        }
    }

    /// CSV export: header `x1,..,xn,label`, one row per cell.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.dim();
        let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},label", header.join(","))?;
        for flat in 0..self.num_cells() {
            let c = self.cell_center(flat);
            let row: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
            let label = match self.labels[flat] {
                CellLabel::Inside => "inside",
                CellLabel::Outside => "outside",
                CellLabel::Undecided => "undecided",
            };
            writeln!(w, "{},{}", row.join(","), label)?;
        }
        Ok(())
    }
}

/// Grid-discretized reference region of attraction.
#[derive(Debug, Clone)]
pub struct ReferenceRoa<T> {
    pub grid: LabeledGrid<T>,
    /// Centers of Inside cells adjacent to a non-Inside face neighbor.
    pub boundary: PointSet<T>,
}

/// Classifies every cell center of `resolution`ⁿ cells over `bbox` by
/// forward integration. Deterministic for fixed inputs; cells run in
/// parallel.
pub fn reference_roa<T: Scalar>(
    f: &VectorField<T>,
    bbox: BoundingBox<T>,
    resolution: usize,
    opts: &IntegrateOptions<T>,
) -> Result<ReferenceRoa<T>, OdesimError> {
    let n = f.nvars();
    if bbox.dim() != n {
        return Err(OdesimError::Dimension { expected: n, got: bbox.dim() });
    }
    if resolution == 0 {
        return Err(OdesimError::ZeroResolution);
    }
    if !bbox.contains_origin() {
        return Err(OdesimError::BadBox("box must contain the origin".into()));
    }
    let cells = resolution
        .checked_pow(n as u32)
        .filter(|&c| c <= 100_000_000)
        .ok_or(OdesimError::GridTooLarge { resolution, dim: n })?;

    let grid = LabeledGrid { bbox, resolution, labels: Vec::new() };
    let labels: Vec<CellLabel> = (0..cells)
        .into_par_iter()
        .map(|flat| match classify(f, &grid.cell_center(flat), opts) {
            Verdict::ConvergedToOrigin => CellLabel::Inside,
            Verdict::Diverged => CellLabel::Outside,
            Verdict::Undecided => CellLabel::Undecided,
        })
        .collect();
    let grid = LabeledGrid { labels, ..grid };
    log::info!(
        "reference grid {}^{}: {} inside, {} undecided",
        resolution,
        n,
        grid.inside_count(),
        grid.undecided_count()
    );
    let boundary = grid.boundary_points();
    Ok(ReferenceRoa { grid, boundary })
}

/// Worst sampled violation of the exponential-decay envelope
/// ‖x(t)‖ ≤ μ‖x(0)‖e^(−δt) over the given initial points: positive means
/// some sample escapes the envelope, nonpositive means the sampled set
/// passes, empty input returns −∞ as the vacuous pass.
///
/// Samples come from adaptive integration over the full horizon (the
/// convergence early-exit is disabled so late times are checked too);
/// equality cases therefore sit within integration error of zero rather
/// than exactly at it.
pub fn check_exponential_decay<T: Scalar>(
    f: &VectorField<T>,
    points: &[Vec<T>],
    mu: T,
    delta: T,
    t_max: T,
) -> T {
    assert!(mu > T::zero() && delta > T::zero(), "decay parameters must be positive");
    let opts =
        IntegrateOptions { t_max, converge_eps: T::zero(), ..IntegrateOptions::default() };
    points
        .par_iter()
        .map(|x0| {
            let traj = integrate(f, x0, &opts);
            let r0 = norm2(x0);
            traj.samples
                .iter()
                .map(|(t, x)| norm2(x) - mu * r0 * (-delta * *t).exp())
                .fold(T::neg_infinity(), T::max)
        })
        .reduce(T::neg_infinity, T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{reverse_van_der_pol, Polynomial};

    /// Accumulated integrator error allowance on exact-equality decay
    /// envelopes; an order of magnitude above the local tolerance.
    const DECAY_EQUALITY_SLACK: f64 = 1e-7;

    fn field(components: &[&str], nvars: usize) -> VectorField<f64> {
        VectorField::new(
            components.iter().map(|s| Polynomial::parse(s, nvars).unwrap()).collect(),
        )
    }

    fn horizon(t_max: f64) -> IntegrateOptions<f64> {
        IntegrateOptions { t_max, converge_eps: 0.0, ..IntegrateOptions::default() }
    }

    #[test]
    fn endpoint_matches_exponential() {
        let f = field(&["-x1"], 1);
        let traj = integrate(&f, &[1.0], &horizon(1.0));
        assert_eq!(traj.final_time(), 1.0);
        let exact = (-1.0f64).exp();
        assert!(
            (traj.final_state()[0] - exact).abs() <= 1e-6,
            "endpoint {} vs {exact}",
            traj.final_state()[0]
        );
    }

    #[test]
    fn equilibrium_stays_at_origin() {
        let f = reverse_van_der_pol::<f64>();
        let traj = integrate(&f, &[0.0, 0.0], &IntegrateOptions::default());
        assert_eq!(traj.verdict, Verdict::ConvergedToOrigin);
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.final_state(), &[0.0, 0.0]);
    }

    #[test]
    fn fixed_step_order_at_least_four() {
        let f = field(&["-x1"], 1);
        let exact = (-1.0f64).exp();
        let err_at = |h: f64| {
            let opts = IntegrateOptions { fixed_step: Some(h), ..horizon(1.0) };
            (integrate(&f, &[1.0], &opts).final_state()[0] - exact).abs()
        };
        let coarse = err_at(0.1);
        let fine = err_at(0.05);
        assert!(fine > 0.0, "fine error at machine noise, can't observe order");
        let ratio = coarse / fine;
        assert!(ratio >= 8.0, "halving reduced error only {ratio:.2}x (coarse {coarse:.3e})");
    }

    #[test]
    fn outside_limit_cycle_diverges() {
        let f = reverse_van_der_pol::<f64>();
        let traj = integrate(&f, &[3.0, 3.0], &IntegrateOptions::default());
        assert_eq!(traj.verdict, Verdict::Diverged);
    }

    #[test]
    fn time_reversal_round_trip() {
        let f = reverse_van_der_pol::<f64>();
        // The exact negation of f: running it forward undoes f's flow.
        let g = field(&["x2", "-x1 - x2*(x1^2 - 1)"], 2);
        let x0 = [1.0, 0.5];
        let fwd_half = integrate(&f, &x0, &horizon(2.5));
        let fwd = integrate(&f, &x0, &horizon(5.0));
        let back_half = integrate(&g, fwd.final_state(), &horizon(2.5));
        let back = integrate(&g, fwd.final_state(), &horizon(5.0));
        for i in 0..2 {
            assert!(
                (back.final_state()[i] - x0[i]).abs() <= 1e-5,
                "round trip drifted: {:?} vs {x0:?}",
                back.final_state()
            );
            assert!(
                (back_half.final_state()[i] - fwd_half.final_state()[i]).abs() <= 1e-5,
                "midpoint mismatch: {:?} vs {:?}",
                back_half.final_state(),
                fwd_half.final_state()
            );
        }
    }

    #[test]
    fn linear_stable_grid_is_all_inside() {
        let f = field(&["-x1", "-x2"], 2);
        let bbox = BoundingBox::symmetric(2.0, 2);
        let roa = reference_roa(&f, bbox, 15, &IntegrateOptions::default()).unwrap();
        assert_eq!(roa.grid.inside_count(), 15 * 15);
        assert_eq!(roa.grid.undecided_count(), 0);
        assert!(roa.boundary.is_empty());
        assert_eq!(roa.grid.inside_points().len(), 225);
    }

    #[test]
    fn antistable_grid_keeps_only_origin() {
        let f = field(&["x1", "x2"], 2);
        let bbox = BoundingBox::symmetric(2.0, 2);
        let roa = reference_roa(&f, bbox, 15, &IntegrateOptions::default()).unwrap();
        // Odd resolution puts one cell center exactly at the origin; every
        // other center flows outward to the escape ball.
        assert_eq!(roa.grid.inside_count(), 1);
        assert_eq!(roa.grid.undecided_count(), 0);
        assert_eq!(roa.boundary.len(), 1);
        let p = roa.boundary.point(0);
        assert!(norm2(p) <= 1e-12, "boundary cell not at origin: {p:?}");
    }

    #[test]
    fn inside_region_grows_with_horizon() {
        let f = reverse_van_der_pol::<f64>();
        let short = reference_roa(
            &f,
            BoundingBox::symmetric(3.0, 2),
            11,
            &IntegrateOptions { t_max: 3.0, ..IntegrateOptions::default() },
        )
        .unwrap();
        let long = reference_roa(
            &f,
            BoundingBox::symmetric(3.0, 2),
            11,
            &IntegrateOptions { t_max: 30.0, ..IntegrateOptions::default() },
        )
        .unwrap();
        assert!(long.grid.inside_count() >= short.grid.inside_count());
        assert!(long.grid.inside_count() > 0);
    }

    #[test]
    fn classification_is_deterministic() {
        let f = reverse_van_der_pol::<f64>();
        let opts = IntegrateOptions { t_max: 5.0, ..IntegrateOptions::default() };
        let a = reference_roa(&f, BoundingBox::symmetric(3.0, 2), 9, &opts).unwrap();
        let b = reference_roa(&f, BoundingBox::symmetric(3.0, 2), 9, &opts).unwrap();
        assert_eq!(a.grid.labels(), b.grid.labels());
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        a.grid.write_csv(&mut csv_a).unwrap();
        b.grid.write_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn grid_csv_has_header_and_one_row_per_cell() {
        let f = field(&["-x1", "-x2"], 2);
        let roa =
            reference_roa(&f, BoundingBox::symmetric(1.0, 2), 3, &IntegrateOptions::default())
                .unwrap();
        let mut buf = Vec::new();
        roa.grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,label");
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines[1..].iter().all(|l| l.ends_with("inside")));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let f = field(&["-x1", "-x2"], 2);
        let shifted = BoundingBox::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
        assert!(matches!(
            reference_roa(&f, shifted, 5, &IntegrateOptions::default()),
            Err(OdesimError::BadBox(_))
        ));
        assert!(matches!(
            reference_roa(&f, BoundingBox::symmetric(1.0, 2), 0, &IntegrateOptions::default()),
            Err(OdesimError::ZeroResolution)
        ));
        assert!(BoundingBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoundingBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn decay_envelope_equality_case() {
        let f = field(&["-x1"], 1);
        // ‖x(t)‖ = ‖x0‖e^{−t} exactly, so μ = 1, δ = 1 sits on the envelope;
        // the sampled violation is integration noise around zero.
        let v = check_exponential_decay(&f, &[vec![1.0]], 1.0, 1.0, 5.0);
        assert!(v <= DECAY_EQUALITY_SLACK, "violation {v:.3e}");
        // The t = 0 sample sits exactly on the envelope, so the max is ≥ 0.
        assert!(v >= 0.0, "t = 0 sample lost: {v:.3e}");

        // μ = 0.5 fails already at t = 0 where ‖x0‖ − μ‖x0‖ = 0.5 exactly.
        let v = check_exponential_decay(&f, &[vec![1.0]], 0.5, 1.0, 5.0);
        assert!(v >= 0.5, "violation {v}");

        let empty: Vec<Vec<f64>> = Vec::new();
        let v = check_exponential_decay(&f, &empty, 1.0, 1.0, 5.0);
        assert!(v.is_infinite() && v < 0.0);
    }
}
