//! Finite point-set geometry: directed and Hausdorff distances plus the
//! nested-triangle inequality used to compare region-of-attraction
//! estimates.
//!
//! Compact sets enter this module as finite grid discretizations
//! (boundary plus interior points); all distances are exact brute-force
//! max-min computations over those finite sets, so results are reproducible
//! bit for bit regardless of thread count.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum SetGeomError {
    /// Metric operations are undefined on the empty set.
    #[error("{op} requires a nonempty point set")]
    Empty { op: &'static str },
    #[error("point-set dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    /// Subset precondition of the nested-triangle check failed; the witness
    /// is a point of the inner set with no exact match in the outer set.
    #[error("{inner} is not a subset of {outer}: point ({witness}) has no match")]
    NotNested { inner: &'static str, outer: &'static str, witness: String },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("CSV line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Finite set of points in ℝⁿ stored as a flat coordinate buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointSet<T> {
    /// Empty set of the given dimension (n ≥ 1).
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        PointSet { dim, coords: Vec::new() }
    }

    /// Builds a set from explicit points, validating dimension consistency
    /// and finiteness.
    pub fn from_points(dim: usize, points: &[Vec<T>]) -> Result<Self, SetGeomError> {
        let mut set = PointSet::new(dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(SetGeomError::DimensionMismatch { left: dim, right: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(SetGeomError::NonFinite { index });
            }
            set.push(p);
        }
        Ok(set)
    }

    /// Appends a point. The dimension is a caller contract.
    pub fn push(&mut self, p: &[T]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Exact membership test (coordinate-wise equality, no tolerance).
    pub fn contains_exact(&self, p: &[T]) -> bool {
        self.iter().any(|q| q == p)
    }

    /// Directed distance: the farthest any point of `self` sits from the
    /// set `other`, max over self of min over other of the Euclidean
    /// distance. Asymmetric in general.
    pub fn directed_distance(&self, other: &Self) -> Result<T, SetGeomError> {
        self.check_pair(other, "directed_distance")?;
        Ok(self
            .coords
            .par_chunks_exact(self.dim)
            .map(|p| min_distance(p, other))
            .reduce(T::neg_infinity, T::max))
    }

    /// Hausdorff distance: the larger of the two directed distances.
    /// Symmetric, zero exactly when the two finite sets coincide.
    pub fn hausdorff(&self, other: &Self) -> Result<T, SetGeomError> {
        let fwd = self.directed_distance(other)?;
        let bwd = other.directed_distance(self)?;
        Ok(fwd.max(bwd))
    }

    fn check_pair(&self, other: &Self, op: &'static str) -> Result<(), SetGeomError> {
        if self.is_empty() || other.is_empty() {
            return Err(SetGeomError::Empty { op });
        }
        if self.dim != other.dim {
            return Err(SetGeomError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    /// Writes one comma-separated point per line. Coordinates print in the
    /// shortest form that parses back to the identical value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a point set written by [`PointSet::write_csv`]; the dimension
    /// is taken from the first line. Blank lines and `#` comments skipped.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SetGeomError> {
        let mut set: Option<PointSet<T>> = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let mut point = Vec::new();
            for field in text.split(',') {
                let v: f64 = field.trim().parse().map_err(|e| SetGeomError::Csv {
                    line: lineno + 1,
                    msg: format!("bad coordinate {field:?}: {e}"),
                })?;
                point.push(T::c(v));
            }
            let set = set.get_or_insert_with(|| PointSet::new(point.len()));
            if point.len() != set.dim {
                return Err(SetGeomError::Csv {
                    line: lineno + 1,
                    msg: format!("expected {} coordinates, got {}", set.dim, point.len()),
                });
            }
            if point.iter().any(|c| !c.is_finite()) {
                return Err(SetGeomError::Csv {
                    line: lineno + 1,
                    msg: "non-finite coordinate".into(),
                });
            }
            set.push(&point);
        }
        set.ok_or(SetGeomError::Empty { op: "read_csv" })
    }
}

/// Euclidean distance with a fixed left-to-right summation order so that
/// independent brute-force implementations reproduce results bit-exactly.
fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        s = s + d * d;
    }
    s.sqrt()
}

fn min_distance<T: Scalar>(p: &[T], set: &PointSet<T>) -> T {
    set.iter().map(|q| distance(p, q)).fold(T::infinity(), T::min)
}

/// Checks the nested-triangle inequality H(X,Z) ≥ max(H(X,Y), H(Y,Z)) on
/// finite sets X ⊆ Y ⊆ Z. The subset relations are verified exactly first;
/// a violation reports the offending point. For genuinely nested finite
/// sets the inequality holds exactly, so the return value is `true` unless
/// floating-point inputs were constructed adversarially.
pub fn check_nested_triangle<T: Scalar>(
    x: &PointSet<T>,
    y: &PointSet<T>,
    z: &PointSet<T>,
) -> Result<bool, SetGeomError> {
    verify_subset(x, y, "X", "Y")?;
    verify_subset(y, z, "Y", "Z")?;
    let hxz = x.hausdorff(z)?;
    let hxy = x.hausdorff(y)?;
    let hyz = y.hausdorff(z)?;
    Ok(hxz >= hxy.max(hyz))
}

fn verify_subset<T: Scalar>(
    inner: &PointSet<T>,
    outer: &PointSet<T>,
    inner_name: &'static str,
    outer_name: &'static str,
) -> Result<(), SetGeomError> {
    for p in inner.iter() {
        if !outer.contains_exact(p) {
            let witness: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            return Err(SetGeomError::NotNested {
                inner: inner_name,
                outer: outer_name,
                witness: witness.join(", "),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set2(points: &[(f64, f64)]) -> PointSet<f64> {
        let rows: Vec<Vec<f64>> = points.iter().map(|&(a, b)| vec![a, b]).collect();
        PointSet::from_points(2, &rows).unwrap()
    }

    fn set1(points: &[f64]) -> PointSet<f64> {
        let rows: Vec<Vec<f64>> = points.iter().map(|&a| vec![a]).collect();
        PointSet::from_points(1, &rows).unwrap()
    }

    #[test]
    fn singleton_pair_is_euclidean_distance() {
        let a = set2(&[(0.0, 0.0)]);
        let b = set2(&[(3.0, 4.0)]);
        assert_eq!(a.directed_distance(&b).unwrap(), 5.0);
        assert_eq!(a.hausdorff(&b).unwrap(), 5.0);
    }

    #[test]
    fn directed_distance_is_asymmetric() {
        let a = set2(&[(0.0, 0.0), (2.0, 0.0)]);
        let b = set2(&[(0.0, 0.0)]);
        assert_eq!(a.directed_distance(&b).unwrap(), 2.0);
        assert_eq!(b.directed_distance(&a).unwrap(), 0.0);
        assert_eq!(a.hausdorff(&b).unwrap(), 2.0);
        assert_eq!(b.hausdorff(&a).unwrap(), 2.0);
    }

    #[test]
    fn self_distance_is_zero() {
        let a = set2(&[(1.5, -2.0), (0.25, 0.75), (3.0, 3.0)]);
        assert_eq!(a.directed_distance(&a).unwrap(), 0.0);
        assert_eq!(a.hausdorff(&a).unwrap(), 0.0);
    }

    #[test]
    fn circle_to_center_hausdorff_is_radius() {
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / 100.0;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let circle = PointSet::from_points(2, &pts).unwrap();
        let center = set2(&[(0.0, 0.0)]);
        let h = circle.hausdorff(&center).unwrap();
        assert!((h - 1.0).abs() <= 1e-12, "h = {h}");
    }

    #[test]
    fn line_triple_satisfies_nested_inequality() {
        let x = set1(&[0.0]);
        let y = set1(&[0.0, 0.5]);
        let z = set1(&[0.0, 0.5, 1.0]);
        assert_eq!(x.hausdorff(&z).unwrap(), 1.0);
        assert_eq!(x.hausdorff(&y).unwrap(), 0.5);
        assert_eq!(y.hausdorff(&z).unwrap(), 0.5);
        assert!(check_nested_triangle(&x, &y, &z).unwrap());
    }

    #[test]
    fn degenerate_triple_passes() {
        let a = set2(&[(1.0, 1.0), (2.0, 2.0)]);
        assert!(check_nested_triangle(&a, &a, &a).unwrap());
    }

    #[test]
    fn subset_violation_names_the_witness() {
        let x = set2(&[(5.0, 5.0)]);
        let y = set2(&[(0.0, 0.0)]);
        let err = check_nested_triangle(&x, &y, &y).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("X is not a subset of Y"), "{msg}");
        assert!(msg.contains('5'), "{msg}");
    }

    #[test]
    fn empty_set_is_rejected() {
        let a = PointSet::<f64>::new(2);
        let b = set2(&[(0.0, 0.0)]);
        assert!(matches!(a.directed_distance(&b), Err(SetGeomError::Empty { .. })));
        assert!(matches!(b.hausdorff(&a), Err(SetGeomError::Empty { .. })));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = set2(&[(0.0, 0.0)]);
        let b = set1(&[1.0]);
        assert!(matches!(a.hausdorff(&b), Err(SetGeomError::DimensionMismatch { .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = set2(&[(0.1, -2.5e-17), (std::f64::consts::PI, 3.0)]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let back = PointSet::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let text = "1.0,2.0\n3.0\n";
        let err = PointSet::<f64>::read_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, SetGeomError::Csv { line: 2, .. }));
    }

    fn arb_set(max_points: usize) -> impl Strategy<Value = PointSet<f64>> {
        prop::collection::vec(
            prop::collection::vec(-10.0..10.0f64, 2),
            1..max_points,
        )
        .prop_map(|rows| PointSet::from_points(2, &rows).unwrap())
    }

    proptest! {
        #[test]
        fn hausdorff_metric_axioms(a in arb_set(12), b in arb_set(12), c in arb_set(12)) {
            let hab = a.hausdorff(&b).unwrap();
            let hba = b.hausdorff(&a).unwrap();
            prop_assert_eq!(hab, hba);
            prop_assert_eq!(a.hausdorff(&a).unwrap(), 0.0);
            prop_assert!(hab >= 0.0);
            // Triangle inequality, exact: generic random triples carry slack
            // far above one ulp.
            let hac = a.hausdorff(&c).unwrap();
            let hbc = b.hausdorff(&c).unwrap();
            prop_assert!(hac <= hab + hbc, "H(A,C)={} > {} + {}", hac, hab, hbc);
        }

        #[test]
        fn directed_distance_zero_iff_subset(
            rows in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 1..12),
            keep in prop::collection::vec(any::<bool>(), 12),
        ) {
            let b = PointSet::from_points(2, &rows).unwrap();
            let mut picked: Vec<Vec<f64>> =
                rows.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r.clone()).collect();
            if picked.is_empty() {
                picked.push(rows[0].clone());
            }
            let a = PointSet::from_points(2, &picked).unwrap();
            prop_assert_eq!(a.directed_distance(&b).unwrap(), 0.0);

            // Push one point far outside the coordinate range: strictly positive.
            picked.push(vec![100.0, 100.0]);
            let a_out = PointSet::from_points(2, &picked).unwrap();
            prop_assert!(a_out.directed_distance(&b).unwrap() > 0.0);
        }

        #[test]
        fn random_nested_triples_pass(
            base in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 1..8),
            mid in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 0..8),
            outer in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 0..8),
        ) {
            let x = PointSet::from_points(2, &base).unwrap();
            let mut y_rows = base.clone();
            y_rows.extend(mid);
            let y = PointSet::from_points(2, &y_rows).unwrap();
            let mut z_rows = y_rows.clone();
            z_rows.extend(outer);
            let z = PointSet::from_points(2, &z_rows).unwrap();
            prop_assert!(check_nested_triangle(&x, &y, &z).unwrap());
        }
    }
}
