//! Dense square-matrix kernels sized for small dimensions (d up to a few
//! hundred, typically d <= 32): Gram-Schmidt orthogonalization and its
//! first-order approximant, QR, Jacobi singular values, LU determinants,
//! and column-distance diagnostics.

mod jacobi;
mod lu;
mod orthogonal;

pub use jacobi::{singular_values, symmetric_eigenvalues, SingularSpectrum};
pub use orthogonal::{approx_orthogonalize, gram_schmidt, qr, OrthogonalizationResult};

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense d x d real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from row-major data, rejecting non-finite entries.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_row_major(dim, data)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let dim = entries.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !entries.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut m = Matrix::zeros(dim);
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        Ok(m)
    }

    /// d=2 rotation by `angle` radians.
    pub fn rotation2(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Matrix {
            dim: 2,
            data: vec![c, -s, s, c],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        debug_assert_eq!(col.len(), self.dim);
        for (i, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * d..(k + 1) * d];
                let orow = &mut out.data[i * d..(i + 1) * d];
                for j in 0..d {
                    orow[j] += a * row[j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * d..(i + 1) * d];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// I + eps * N, the additively perturbed identity.
    pub fn perturbed_identity(eps: f64, noise: &Matrix) -> Matrix {
        let d = noise.dim;
        let mut m = Matrix {
            dim: d,
            data: noise.data.iter().map(|x| eps * x).collect(),
        };
        for i in 0..d {
            m.data[i * d + i] += 1.0;
        }
        m
    }

    /// Maximum-magnitude entry of Q^T Q - I; 0 for exactly orthogonal Q.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let mut dot = 0.0;
                for k in 0..d {
                    dot += self.get(k, i) * self.get(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteInput)
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Operator norm, the largest singular value.
pub fn op_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?.values()[0])
}

/// |det A| via LU with partial pivoting.
pub fn det_abs(a: &Matrix) -> Result<f64> {
    a.check_finite()?;
    Ok(lu::det(a).abs())
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    a.check_finite()?;
    lu::inverse(a)
}

/// sqrt(d) / Theta(A), an upper bound for the operator norm of A^{-1}.
pub fn inverse_norm_bound(a: &Matrix) -> Result<f64> {
    let t = theta(a)?;
    if t == 0.0 {
        return Err(Error::SingularInput(
            "inverse norm bound undefined: columns are linearly dependent",
        ));
    }
    Ok((a.dim() as f64).sqrt() / t)
}

/// Minimum over columns of the distance from that column to the span of the
/// other columns. For nonsingular A computed as |det A| divided by the
/// (d-1)-volume of the remaining columns; otherwise via least-squares
/// residual, which yields 0 for linearly dependent columns.
pub fn theta(a: &Matrix) -> Result<f64> {
    a.check_finite()?;
    let d = a.dim();
    let det = lu::det(a).abs();
    let mut min_dist = f64::INFINITY;
    for j in 0..d {
        let dist = if det > 0.0 {
            det / complement_volume(a, j)
        } else {
            residual_distance(a, j)
        };
        min_dist = min_dist.min(dist);
    }
    Ok(min_dist)
}

/// (d-1)-dimensional volume of the parallelepiped spanned by all columns
/// except `skip`, via the Gram determinant. Empty set of columns has volume 1.
fn complement_volume(a: &Matrix, skip: usize) -> f64 {
    let d = a.dim();
    if d == 1 {
        return 1.0;
    }
    let cols: Vec<usize> = (0..d).filter(|&j| j != skip).collect();
    let k = cols.len();
    let mut gram = Matrix::zeros(k);
    for (p, &cp) in cols.iter().enumerate() {
        for (q, &cq) in cols.iter().enumerate() {
            let mut dot = 0.0;
            for i in 0..d {
                dot += a.get(i, cp) * a.get(i, cq);
            }
            gram.set(p, q, dot);
        }
    }
    lu::det(&gram).abs().sqrt()
}

/// Distance from column `j` to the span of the others by projecting onto an
/// orthonormal basis of those columns (degenerate directions skipped).
fn residual_distance(a: &Matrix, j: usize) -> f64 {
    let d = a.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for c in 0..d {
        if c == j {
            continue;
        }
        let mut v = a.column(c);
        for _ in 0..2 {
            for q in &basis {
                let coef: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= coef * qi;
                }
            }
        }
        let norm = vec_norm(&v);
        let scale = vec_norm(&a.column(c));
        if norm > scale * 1e-14 && norm > 0.0 {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push(v);
        }
    }
    let mut v = a.column(j);
    for _ in 0..2 {
        for q in &basis {
            let coef: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= coef * qi;
            }
        }
    }
    vec_norm(&v)
}

#[inline]
pub(crate) fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn vec_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_theta_is_one() {
        for d in [1, 2, 5] {
            let t = theta(&Matrix::identity(d)).unwrap();
            assert!((t - 1.0).abs() < 1e-14, "d={d}: theta={t}");
        }
    }

    #[test]
    fn scalar_theta_is_absolute_value() {
        let a = Matrix::from_rows(&[vec![-0.37]]).unwrap();
        assert!((theta(&a).unwrap() - 0.37).abs() < 1e-15);
        let z = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(theta(&z).unwrap(), 0.0);
    }

    #[test]
    fn equal_columns_theta_is_zero() {
        let a = Matrix::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![3.0, 3.0, -1.0],
            vec![0.5, 0.5, 4.0],
        ])
        .unwrap();
        let t = theta(&a).unwrap();
        assert!(t <= 1e-12, "theta={t}");
    }

    #[test]
    fn shear_theta_matches_hand_value() {
        // A = [[1,1],[0,1]]: theta_1 = |det|/||c_2|| = 1/sqrt(2), theta_2 = 1.
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let t = theta(&a).unwrap();
        assert!((t - 1.0 / 2.0f64.sqrt()).abs() < 1e-14, "theta={t}");
    }

    #[test]
    fn diagonal_case_norm_det_bound() {
        // diag(2, 1/2): op_norm 2, |det| 1, Theta 1/2, bound 2*sqrt(2) >= ||A^-1|| = 2.
        let a = Matrix::diagonal(&[2.0, 0.5]).unwrap();
        assert!((op_norm(&a).unwrap() - 2.0).abs() < 1e-12);
        assert!((det_abs(&a).unwrap() - 1.0).abs() < 1e-14);
        assert!((theta(&a).unwrap() - 0.5).abs() < 1e-14);
        let bound = inverse_norm_bound(&a).unwrap();
        assert!((bound - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        let inv_norm = op_norm(&inverse(&a).unwrap()).unwrap();
        assert!(inv_norm <= bound + 1e-12);
    }

    #[test]
    fn identity_norm_det_bound() {
        for d in [1, 3, 6] {
            let a = Matrix::identity(d);
            assert!((op_norm(&a).unwrap() - 1.0).abs() < 1e-12);
            assert!((det_abs(&a).unwrap() - 1.0).abs() < 1e-14);
            let bound = inverse_norm_bound(&a).unwrap();
            assert!((bound - (d as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_input_rejected_by_bound() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(matches!(
            inverse_norm_bound(&a),
            Err(Error::SingularInput(_))
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            Matrix::from_rows(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]),
            Err(Error::NonFiniteInput)
        ));
        let mut a = Matrix::identity(2);
        a.set(0, 1, f64::INFINITY);
        assert!(matches!(theta(&a), Err(Error::NonFiniteInput)));
    }
}
