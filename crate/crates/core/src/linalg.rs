//! Small dense linear algebra: row-major matrices, symmetric tridiagonal
//! eigenvalue routines and a Lanczos solver for the smallest eigenpair of a
//! symmetric operator restricted to the complement of given directions.

use crate::error::{invalid, Error, Result};
use crate::scalar::{dot, norm2, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, scale: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = scale;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(invalid("ragged matrix rows"));
        }
        Ok(Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Frobenius norm squared, i.e. `Tr(AᵀA)`.
    pub fn frobenius2(&self) -> T {
        norm2(&self.data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(diag, off)`
/// strictly below `x` (Sturm sequence count).
fn sturm_count<T: Real>(diag: &[T], off: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = T::one();
    for i in 0..diag.len() {
        let e2 = if i == 0 { T::zero() } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { T::zero() } else { e2 / q };
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_min_eigenvalue<T: Real>(diag: &[T], off: &[T]) -> T {
    let n = diag.len();
    assert!(n > 0 && off.len() + 1 >= n);
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { T::zero() };
        let right = if i + 1 < n { off[i].abs() } else { T::zero() };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let scale = lo.abs().max(hi.abs()).max(T::one());
    let eps = T::epsilon() * scale;
    for _ in 0..200 {
        if hi - lo <= eps {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo + (hi - lo) / T::lit(2.0)
}

/// Solves `(T - shift I) x = b` for symmetric tridiagonal `T` by LU with
/// partial pivoting; `b` is overwritten with the solution.
fn tridiagonal_shifted_solve<T: Real>(diag: &[T], off: &[T], shift: T, b: &mut [T]) {
    let n = diag.len();
    let tiny = T::epsilon() * T::lit(1e-3);
    if n == 1 {
        let d = diag[0] - shift;
        b[0] = b[0] / if d.abs() < tiny { tiny } else { d };
        return;
    }
    let mut dl: Vec<T> = off[..n - 1].to_vec();
    let mut d: Vec<T> = diag.iter().map(|&v| v - shift).collect();
    let mut du: Vec<T> = off[..n - 1].to_vec();
    let mut du2 = vec![T::zero(); n.saturating_sub(2)];
    let mut swapped = vec![false; n - 1];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i].abs() < tiny {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] = d[i + 1] - fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    if d[n - 1].abs() < tiny {
        d[n - 1] = tiny;
    }
    for i in 0..n - 1 {
        if swapped[i] {
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        } else {
            b[i + 1] = b[i + 1] - dl[i] * b[i];
        }
    }
    b[n - 1] = b[n - 1] / d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

/// Unit eigenvector of a symmetric tridiagonal matrix for a (converged)
/// eigenvalue, by inverse iteration.
pub fn tridiagonal_eigenvector<T: Real>(diag: &[T], off: &[T], lambda: T) -> Vec<T> {
    let n = diag.len();
    let mut x: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.01 * (i % 7) as f64)).collect();
    for _ in 0..3 {
        tridiagonal_shifted_solve(diag, off, lambda, &mut x);
        let nrm = norm2(&x).sqrt();
        if nrm.is_zero() || !nrm.is_finite() {
            break;
        }
        x.iter_mut().for_each(|v| *v = *v / nrm);
    }
    x
}

/// Householder reduction of a dense symmetric matrix to tridiagonal form.
/// Returns `(diag, off)`; eigenvalues are preserved.
pub fn householder_tridiagonal<T: Real>(a: &Matrix<T>) -> Result<(Vec<T>, Vec<T>)> {
    if !a.is_square() {
        return Err(invalid("tridiagonalization needs a square matrix"));
    }
    let n = a.rows();
    let mut m = a.clone();
    let two = T::lit(2.0);
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = ((k + 1)..n).map(|i| m[(i, k)] * m[(i, k)]).sum::<T>().sqrt();
        if alpha_norm.is_zero() {
            continue;
        }
        let alpha = if m[(k + 1, k)] > T::zero() { -alpha_norm } else { alpha_norm };
        let mut v = vec![T::zero(); n];
        v[k + 1] = m[(k + 1, k)] - alpha;
        for i in (k + 2)..n {
            v[i] = m[(i, k)];
        }
        let vnorm2 = norm2(&v);
        if vnorm2.is_zero() {
            continue;
        }
        // A <- H A H with H = I - 2 v vᵀ / (vᵀv)
        let mut p = vec![T::zero(); n];
        for i in 0..n {
            p[i] = (k..n).map(|j| m[(i, j)] * v[j]).sum::<T>() * two / vnorm2;
        }
        let kcoef = dot(&v, &p) / vnorm2;
        let w: Vec<T> = (0..n).map(|i| p[i] - kcoef * v[i]).collect();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = m[(i, j)] - v[i] * w[j] - w[i] * v[j];
            }
        }
    }
    let diag = (0..n).map(|i| m[(i, i)]).collect();
    let off = (0..n.saturating_sub(1)).map(|i| m[(i + 1, i)]).collect();
    Ok((diag, off))
}

/// Smallest eigenvalue of a dense symmetric matrix.
pub fn dense_min_eigenvalue<T: Real>(a: &Matrix<T>) -> Result<T> {
    let (diag, off) = householder_tridiagonal(a)?;
    if diag.is_empty() {
        return Err(invalid("empty matrix"));
    }
    Ok(tridiagonal_min_eigenvalue(&diag, &off))
}

/// Result of a Lanczos smallest-eigenpair computation.
#[derive(Debug, Clone)]
pub struct Eigenpair<T> {
    pub value: T,
    pub vector: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

fn project_out<T: Real>(w: &mut [T], basis: &[Vec<T>]) {
    for q in basis {
        let c = dot(q, w);
        w.iter_mut().zip(q).for_each(|(wi, &qi)| *wi = *wi - c * qi);
    }
}

/// Smallest eigenpair of a symmetric operator on the orthogonal complement of
/// `deflate` (orthonormal vectors spanning an invariant subspace), by Lanczos
/// with full reorthogonalization. Convergence is declared when the explicit
/// residual `‖A v − θ v‖` drops to `tol`.
pub fn lanczos_smallest<T, F>(
    n: usize,
    apply: F,
    deflate: &[Vec<T>],
    start: &[T],
    tol: T,
) -> Result<Eigenpair<T>>
where
    T: Real,
    F: Fn(&[T], &mut [T]),
{
    let mut q0 = start.to_vec();
    project_out(&mut q0, deflate);
    project_out(&mut q0, deflate);
    let nrm = norm2(&q0).sqrt();
    if nrm.is_zero() {
        return Err(invalid("Lanczos start vector lies in the deflated subspace"));
    }
    q0.iter_mut().for_each(|v| *v = *v / nrm);

    let max_dim = n.saturating_sub(deflate.len()).max(1);
    let mut basis: Vec<Vec<T>> = vec![q0];
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut best: Option<Eigenpair<T>> = None;

    for j in 0..max_dim {
        apply(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w);
        for i in 0..n {
            w[i] = w[i] - alpha * basis[j][i];
            if j > 0 {
                w[i] = w[i] - betas[j - 1] * basis[j - 1][i];
            }
        }
        // two passes of classical Gram-Schmidt against everything seen so far
        for _ in 0..2 {
            project_out(&mut w, deflate);
            project_out(&mut w, &basis);
        }
        alphas.push(alpha);
        let beta = norm2(&w).sqrt();
        let exhausted = beta <= T::epsilon() * T::lit(1e3) * (alpha.abs() + T::one());
        let check = exhausted || j + 1 == max_dim || j % 4 == 3;
        if check {
            let theta = tridiagonal_min_eigenvalue(&alphas, &betas);
            let s = tridiagonal_eigenvector(&alphas, &betas, theta);
            let mut v = vec![T::zero(); n];
            for (k, q) in basis.iter().enumerate() {
                v.iter_mut().zip(q).for_each(|(vi, &qi)| *vi = *vi + s[k] * qi);
            }
            let vn = norm2(&v).sqrt();
            v.iter_mut().for_each(|x| *x = *x / vn);
            let mut av = vec![T::zero(); n];
            apply(&v, &mut av);
            let residual = av
                .iter()
                .zip(&v)
                .map(|(&a, &b)| (a - theta * b) * (a - theta * b))
                .sum::<T>()
                .sqrt();
            let pair = Eigenpair { value: theta, vector: v, residual, iterations: j + 1 };
            if residual <= tol {
                return Ok(pair);
            }
            best = Some(pair);
        }
        if exhausted {
            break;
        }
        w.iter_mut().for_each(|x| *x = *x / beta);
        betas.push(beta);
        basis.push(w.clone());
    }
    let residual = best.map_or(f64::INFINITY, |p| p.residual.as_f64());
    Err(Error::NonConvergence { what: "Lanczos smallest eigenvalue", residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_path(n: usize) -> Matrix<f64> {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            if i > 0 {
                m[(i, i - 1)] = -1.0;
                m[(i, i)] += 1.0;
            }
            if i + 1 < n {
                m[(i, i + 1)] = -1.0;
                m[(i, i)] += 1.0;
            }
        }
        m
    }

    #[test]
    fn bisection_on_known_tridiagonal() {
        // eigenvalues of tridiag(-1, 2, -1) of size n: 2 - 2 cos(k pi / (n + 1))
        let n = 10;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let expect = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((tridiagonal_min_eigenvalue(&diag, &off) - expect).abs() < 1e-13);
        let v = tridiagonal_eigenvector(&diag, &off, expect);
        let tv: Vec<f64> = (0..n)
            .map(|i| {
                2.0 * v[i] - if i > 0 { v[i - 1] } else { 0.0 } - if i + 1 < n { v[i + 1] } else { 0.0 }
            })
            .collect();
        let res: f64 = tv.iter().zip(&v).map(|(a, b)| (a - expect * b).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn householder_preserves_min_eigenvalue() {
        // path-graph Laplacian: eigenvalues 2 - 2cos(k pi / n), k = 0..n-1
        let n = 12;
        let m = laplacian_path(n);
        assert!(dense_min_eigenvalue(&m).unwrap().abs() < 1e-12);
        let mut shifted = m.clone();
        for i in 0..n {
            for j in 0..n {
                shifted[(i, j)] += 5.0 / n as f64;
            }
        }
        let fiedler = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        assert!((dense_min_eigenvalue(&shifted).unwrap() - fiedler).abs() < 1e-12);
    }

    #[test]
    fn lanczos_finds_fiedler_value_of_path() {
        let n = 40;
        let m = laplacian_path(n);
        let ones = vec![1.0 / (n as f64).sqrt(); n];
        let start: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let pair = lanczos_smallest(n, |x, y| m.mul_vec_into(x, y), &[ones], &start, 1e-10).unwrap();
        let fiedler = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        assert!((pair.value - fiedler).abs() < 1e-10);
        assert!(pair.residual <= 1e-10);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
