//! Small dense helpers for rank <= 3 vectors and matrices.

use nalgebra::DMatrix;

pub type Vector = Vec<f64>;
pub type Matrix = Vec<Vec<f64>>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vector {
    a.iter().map(|x| c * x).collect()
}

/// a + c * b
pub fn axpy(a: &[f64], c: f64, b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn mat_vec(m: &Matrix, x: &[f64]) -> Vector {
    m.iter().map(|row| dot(row, x)).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn to_dmatrix(a: &Matrix) -> DMatrix<f64> {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    DMatrix::from_fn(n, m, |i, j| a[i][j])
}

fn from_dmatrix(a: &DMatrix<f64>) -> Matrix {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    to_dmatrix(a).try_inverse().map(|m| from_dmatrix(&m))
}

pub fn determinant(a: &Matrix) -> f64 {
    to_dmatrix(a).determinant()
}

/// Lower-triangular Cholesky factor, `None` if not positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    to_dmatrix(a).cholesky().map(|c| from_dmatrix(&c.l()))
}

/// Orthonormal basis of the complement of `v` in R^n (n <= 3), via QR.
pub fn orthonormal_complement(v: &[f64]) -> Vec<Vector> {
    let n = v.len();
    let mut basis: Vec<Vector> = Vec::new();
    let nv = norm2(v).sqrt();
    let u: Vector = v.iter().map(|x| x / nv).collect();
    for k in 0..n {
        let mut w: Vector = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        let c = dot(&w, &u);
        w = axpy(&w, -c, &u);
        for b in &basis {
            let c = dot(&w, b);
            w = axpy(&w, -c, b);
        }
        let nw = norm2(&w).sqrt();
        if nw > 1e-8 {
            basis.push(w.iter().map(|x| x / nw).collect());
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}
