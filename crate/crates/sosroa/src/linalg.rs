//! Small dense matrix kernels backing the SDP solver and certificate checks.
//!
//! Block sizes in this crate stay in the tens, Schur complements in the low
//! hundreds, so the kernels favor robustness over asymptotics: unblocked
//! Cholesky, cyclic Jacobi for symmetric eigenvalues.

use crate::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat { nrows, ncols, data: vec![T::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn scaled_identity(n: usize, c: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// (A + Aᵀ)/2; also used to clean up tiny asymmetry from round-off.
    pub fn symmetrized(&self) -> Mat<T> {
        assert!(self.is_square());
        let half = T::c(0.5);
        let mut out = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)]) * half;
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.nrows {
            for j in (i + 1)..self.ncols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.data {
            *v = *v * c;
        }
    }

    /// self += c * other
    pub fn axpy(&mut self, c: T, other: &Mat<T>) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + c * *b;
        }
    }

    pub fn add_scaled_identity(&mut self, c: T) {
        assert!(self.is_square());
        for i in 0..self.nrows {
            self[(i, i)] = self[(i, i)] + c;
        }
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in matmul");
        let mut out = Mat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                let lhs = k * other.ncols;
                let dst = i * other.ncols;
                for j in 0..other.ncols {
                    out.data[dst + j] = out.data[dst + j] + aik * other.data[lhs + j];
                }
            }
        }
        out
    }

    /// Frobenius inner product ⟨A, B⟩ = Σ AᵢⱼBᵢⱼ.
    pub fn dot(&self, other: &Mat<T>) -> T {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut acc = T::zero();
        for (a, b) in self.data.iter().zip(&other.data) {
            acc = acc + *a * *b;
        }
        acc
    }

    pub fn trace(&self) -> T {
        assert!(self.is_square());
        let mut acc = T::zero();
        for i in 0..self.nrows {
            acc = acc + self[(i, i)];
        }
        acc
    }

    pub fn frobenius_norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Lower-triangular Cholesky factor L with L·Lᵀ = A.
    /// Returns `None` when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Mat<T>> {
        assert!(self.is_square());
        let n = self.nrows;
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if d <= T::zero() || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut v = self[(i, j)];
                for k in 0..j {
                    v = v - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / djj;
            }
        }
        Some(l)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

/// Solves L·x = b for lower-triangular L.
pub fn forward_sub<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in 0..n {
        let mut v = x[i];
        for k in 0..i {
            v = v - l[(i, k)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

/// Solves Lᵀ·x = b for lower-triangular L.
pub fn back_sub_transposed<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut v = x[i];
        for k in (i + 1)..n {
            v = v - l[(k, i)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

/// Solves (L·Lᵀ)·x = b given the Cholesky factor L.
pub fn chol_solve_vec<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    back_sub_transposed(l, &forward_sub(l, b))
}

/// Solves (L·Lᵀ)·X = B column by column.
pub fn chol_solve_mat<T: Scalar>(l: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = l.nrows();
    assert_eq!(b.nrows(), n);
    let mut out = Mat::zeros(n, b.ncols());
    let mut col = vec![T::zero(); n];
    for j in 0..b.ncols() {
        for i in 0..n {
            col[i] = b[(i, j)];
        }
        let x = chol_solve_vec(l, &col);
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    out
}

/// Inverse of A = L·Lᵀ from its Cholesky factor.
pub fn chol_inverse<T: Scalar>(l: &Mat<T>) -> Mat<T> {
    let n = l.nrows();
    chol_solve_mat(l, &Mat::identity(n)).symmetrized()
}

/// L⁻¹·D·L⁻ᵀ for symmetric D; used for boundary step lengths in the solver.
pub fn congruence_inv_chol<T: Scalar>(l: &Mat<T>, d: &Mat<T>) -> Mat<T> {
    let n = l.nrows();
    assert_eq!(d.nrows(), n);
    // Y = L⁻¹ D, then (L⁻¹ Yᵀ)ᵀ = Y L⁻ᵀ.
    let mut y = Mat::zeros(n, n);
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = d[(i, j)];
        }
        let x = forward_sub(l, &col);
        for i in 0..n {
            y[(i, j)] = x[i];
        }
    }
    let mut z = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            col[i] = y[(j, i)];
        }
        let x = forward_sub(l, &col);
        for i in 0..n {
            z[(j, i)] = x[i];
        }
    }
    z.symmetrized()
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigenvalues (ascending) and orthonormal eigenvectors (matching columns) of
/// a symmetric matrix, by cyclic Jacobi rotations.
pub fn sym_eig<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let (vals, vecs) = jacobi(a, true);
    (vals, vecs.expect("vectors requested"))
}

/// Eigenvalues only, ascending.
pub fn sym_eigvals<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    jacobi(a, false).0
}

pub fn min_eig<T: Scalar>(a: &Mat<T>) -> T {
    if a.nrows() == 0 {
        return T::infinity();
    }
    sym_eigvals(a)[0]
}

fn jacobi<T: Scalar>(a: &Mat<T>, want_vectors: bool) -> (Vec<T>, Option<Mat<T>>) {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.nrows();
    let mut a = a.symmetrized();
    let mut v = if want_vectors { Some(Mat::identity(n)) } else { None };
    if n <= 1 {
        let vals = if n == 1 { vec![a[(0, 0)]] } else { vec![] };
        return (vals, v);
    }

    let fro = a.frobenius_norm().max(T::one());
    let stop = T::epsilon() * fro;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (T::c(2.0) * apq);
                // tan of the rotation angle; asymptotic form dodges overflow.
                let t = if theta.abs() > T::c(1e15) {
                    (T::c(2.0) * theta).recip()
                } else {
                    let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                    sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let nrp = c * arp - s * arq;
                    let nrq = s * arp + c * arq;
                    a[(r, p)] = nrp;
                    a[(p, r)] = nrp;
                    a[(r, q)] = nrq;
                    a[(q, r)] = nrq;
                }
                if let Some(vm) = v.as_mut() {
                    for r in 0..n {
                        let vrp = vm[(r, p)];
                        let vrq = vm[(r, q)];
                        vm[(r, p)] = c * vrp - s * vrq;
                        vm[(r, q)] = s * vrp + c * vrq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("finite eigenvalues"));
    let vals: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = v.map(|vm| {
        let mut out = Mat::zeros(n, n);
        for (newj, &oldj) in order.iter().enumerate() {
            for r in 0..n {
                out[(r, newj)] = vm[(r, oldj)];
            }
        }
        out
    });
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn cholesky_known_factor() {
        // A = [[4,2],[2,3]] has L = [[2,0],[1,sqrt(2)]].
        let a = mat(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = a.cholesky().unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn chol_solve_recovers_solution() {
        let a = mat(&[&[4.0, 2.0, 0.0], &[2.0, 5.0, 1.0], &[0.0, 1.0, 3.0]]);
        let x_true = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += a[(i, j)] * x_true[j];
            }
        }
        let l = a.cholesky().unwrap();
        let x = chol_solve_vec(&l, &b);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn chol_inverse_matches_identity() {
        let a = mat(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let inv = chol_inverse(&a.cholesky().unwrap());
        let prod = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_two_by_two_hand_values() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = mat(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let vals = sym_eigvals(&a);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = mat(&[
            &[3.0, -1.0, 0.5, 0.0],
            &[-1.0, 2.0, 0.0, 0.25],
            &[0.5, 0.0, 1.5, -0.75],
            &[0.0, 0.25, -0.75, 4.0],
        ]);
        let (vals, q) = sym_eig(&a);
        // Q Λ Qᵀ == A
        let mut lam = Mat::zeros(4, 4);
        for i in 0..4 {
            lam[(i, i)] = vals[i];
        }
        let recon = q.matmul(&lam).matmul(&q.transpose());
        for i in 0..4 {
            for j in 0..4 {
                assert!((recon[(i, j)] - a[(i, j)]).abs() < 1e-12);
            }
        }
        // eigenvalue sum and product match trace and determinant structure
        let trace: f64 = vals.iter().sum();
        assert!((trace - 10.5).abs() < 1e-12);
    }

    #[test]
    fn congruence_matches_direct_computation() {
        let a = mat(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let d = mat(&[&[1.0, 2.0], &[2.0, -1.0]]);
        let l = a.cholesky().unwrap();
        let b = congruence_inv_chol(&l, &d);
        // Check L B Lᵀ == D.
        let recon = l.matmul(&b).matmul(&l.transpose());
        for i in 0..2 {
            for j in 0..2 {
                assert!((recon[(i, j)] - d[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn min_eig_of_empty_matrix_is_infinite() {
        let a = Mat::<f64>::zeros(0, 0);
        assert_eq!(min_eig(&a), f64::INFINITY);
    }
}
