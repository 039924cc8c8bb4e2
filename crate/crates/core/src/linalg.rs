//! Dense linear algebra for small dimension.
//!
//! Everything here is sized for `d ≤ 100`: row-major storage, a cyclic
//! Jacobi eigensolver for symmetric matrices, and inverses computed in the
//! eigenbasis. There is no blocking or SIMD; the inner loops are short.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative tolerance of the symmetry invariant.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative off-diagonal Frobenius tolerance at which Jacobi sweeps stop.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    pub fn from_vec(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn from_slice(entries: &[f64]) -> Self {
        Vector(entries.to_vec())
    }

    pub fn filled(d: usize, value: f64) -> Self {
        Vector(vec![value; d])
    }

    /// Standard basis vector `e_i`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = Vector::zeros(d);
        v.0[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    /// Outer product `self · otherᵀ`.
    pub fn outer(&self, other: &Vector) -> SquareMatrix {
        let d = self.len();
        let mut m = SquareMatrix::zeros(d);
        m.add_outer(1.0, self, other);
        m
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

/// Row-major `d × d` matrix.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SquareMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = SquareMatrix::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.dim).map(|i| self[(i, j)]).collect())
    }

    pub fn diagonal(&self) -> Vector {
        Vector((0..self.dim).map(|i| self[(i, i)]).collect())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `max_{i,j} |M_ij − M_ji|`
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() <= SYMMETRY_TOL * (1.0 + self.max_abs())
    }

    pub fn transpose(&self) -> SquareMatrix {
        let d = self.dim;
        let mut t = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `(M + Mᵀ) / 2`, exactly symmetric.
    pub fn symmetrized(&self) -> SquareMatrix {
        let d = self.dim;
        let mut s = self.clone();
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    /// Copies the upper triangle onto the lower one.
    pub fn mirror_upper(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                self.data[j * d + i] = self.data[i * d + j];
            }
        }
    }

    pub fn scaled(&self, c: f64) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: f64, other: &SquareMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// `self += c · u vᵀ`
    pub fn add_outer(&mut self, c: f64, u: &Vector, v: &Vector) {
        let d = self.dim;
        for i in 0..d {
            let cu = c * u[i];
            let row = &mut self.data[i * d..(i + 1) * d];
            for (r, vj) in row.iter_mut().zip(v.iter()) {
                *r += cu * vj;
            }
        }
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        let d = self.dim;
        let mut out = SquareMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * d..(i + 1) * d];
                for (o, b) in dst.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        let mut out = vec![0.0; self.dim];
        self.mul_slice_into(v.as_slice(), &mut out);
        Vector(out)
    }

    /// `out = M · v` on raw slices (hot path of the SGD step).
    #[inline]
    pub fn mul_slice_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let row = &self.data[i * d..(i + 1) * d];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `vᵀ M v`
    pub fn quadratic_form(&self, v: &Vector) -> f64 {
        self.mul_vec(v).dot(v)
    }

    /// Congruence `A · self · Aᵀ`.
    pub fn congruence(&self, a: &SquareMatrix) -> SquareMatrix {
        a.matmul(self).matmul(&a.transpose())
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.dim).map(|i| self.row(i)).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigendecomposition `M = Q Λ Qᵀ` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: SquareMatrix,
}

impl SymEigen {
    /// `Q · diag(f(λ)) · Qᵀ`, exactly symmetric.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SquareMatrix {
        let d = self.values.len();
        let q = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += q[(i, k)] * fv[k] * q[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn max(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Rejects matrices that violate the symmetry invariant.
pub fn sym_eigen(m: &SquareMatrix) -> Result<SymEigen> {
    if !m.is_symmetric() {
        return Err(Error::NotSymmetric {
            asymmetry: m.asymmetry(),
        });
    }
    let d = m.dim();
    // work on the exactly symmetrized copy so rotations stay consistent
    let mut a = m.symmetrized();
    let mut q = SquareMatrix::identity(d);
    let scale = a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= JACOBI_TOL * scale || off == 0.0 {
            break;
        }
        for p in 0..d {
            for r in (p + 1)..d {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut q, p, r, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = SquareMatrix::zeros(d);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..d {
            vectors[(row, col)] = q[(row, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm(a: &SquareMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            acc += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    acc.sqrt()
}

// A ← Jᵀ A J and Q ← Q J for the plane rotation J acting on (p, r).
fn rotate(a: &mut SquareMatrix, q: &mut SquareMatrix, p: usize, r: usize, c: f64, s: f64) {
    let d = a.dim();
    for k in 0..d {
        let akp = a[(k, p)];
        let akr = a[(k, r)];
        a[(k, p)] = c * akp - s * akr;
        a[(k, r)] = s * akp + c * akr;
    }
    for k in 0..d {
        let apk = a[(p, k)];
        let ark = a[(r, k)];
        a[(p, k)] = c * apk - s * ark;
        a[(r, k)] = s * apk + c * ark;
    }
    a[(p, r)] = 0.0;
    a[(r, p)] = 0.0;
    for k in 0..d {
        let qkp = q[(k, p)];
        let qkr = q[(k, r)];
        q[(k, p)] = c * qkp - s * qkr;
        q[(k, r)] = s * qkp + c * qkr;
    }
}

/// Largest singular value.
///
/// Symmetric inputs use `max |λ_i|`; anything else goes through `MᵀM`.
pub fn operator_norm(m: &SquareMatrix) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    if m.is_symmetric() {
        let eig = sym_eigen(m).expect("symmetric by check");
        return eig.max().abs().max(eig.min().abs());
    }
    let mut gram = m.transpose().matmul(m);
    gram.mirror_upper();
    let eig = sym_eigen(&gram).expect("gram matrix is symmetric");
    eig.max().max(0.0).sqrt()
}

/// Default scale-relative eigenvalue floor `1e-10 · trace(M) / d`.
pub fn default_eig_floor(m: &SquareMatrix) -> f64 {
    1e-10 * m.trace() / m.dim().max(1) as f64
}

#[derive(Clone, Debug)]
pub struct SpdInverse {
    pub inverse: SquareMatrix,
    /// Number of eigenvalues raised to the floor.
    pub floored: usize,
}

impl SpdInverse {
    pub fn was_floored(&self) -> bool {
        self.floored > 0
    }
}

/// Inverse of a symmetric matrix in its eigenbasis, with every eigenvalue
/// clamped to `max(λ_i, eig_floor)` before the reciprocal.
///
/// A non-positive effective eigenvalue (only possible when
/// `eig_floor ≤ 0`) is reported as [`Error::Singular`].
pub fn spd_inverse(m: &SquareMatrix, eig_floor: f64) -> Result<SpdInverse> {
    let eig = sym_eigen(m)?;
    let floored = eig.values.iter().filter(|&&l| l < eig_floor).count();
    if eig.values.iter().any(|&l| l.max(eig_floor) <= 0.0) {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {:e} with floor {:e}",
            eig.min(),
            eig_floor
        )));
    }
    let inverse = eig.reconstruct_with(|l| 1.0 / l.max(eig_floor));
    Ok(SpdInverse { inverse, floored })
}

/// Inverse of a symmetric, possibly indefinite, matrix via its eigenbasis.
pub fn sym_inverse(m: &SquareMatrix) -> Result<SquareMatrix> {
    let eig = sym_eigen(m)?;
    let scale = eig.max().abs().max(eig.min().abs());
    if scale == 0.0 || eig.values.iter().any(|l| l.abs() <= 1e-14 * scale) {
        return Err(Error::Singular(format!(
            "eigenvalue range [{:e}, {:e}]",
            eig.min(),
            eig.max()
        )));
    }
    Ok(eig.reconstruct_with(|l| 1.0 / l))
}

/// General inverse by Gauss–Jordan elimination with partial pivoting.
pub fn general_inverse(m: &SquareMatrix) -> Result<SquareMatrix> {
    let d = m.dim();
    let mut a = m.clone();
    let mut inv = SquareMatrix::identity(d);
    let scale = m.max_abs();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .expect("non-empty range");
        let pv = a[(pivot, col)];
        if pv.abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        if pivot != col {
            for k in 0..d {
                a.data.swap(pivot * d + k, col * d + k);
                inv.data.swap(pivot * d + k, col * d + k);
            }
        }
        let inv_p = 1.0 / pv;
        for k in 0..d {
            a[(col, k)] *= inv_p;
            inv[(col, k)] *= inv_p;
        }
        for i in 0..d {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == 0.0 {
                continue;
            }
            for k in 0..d {
                a[(i, k)] -= f * a[(col, k)];
                inv[(i, k)] -= f * inv[(col, k)];
            }
        }
    }
    Ok(inv)
}

/// Symmetric PSD square root `Q diag(√max(λ,0)) Qᵀ`; satisfies `L Lᵀ = M`.
pub fn psd_sqrt(m: &SquareMatrix) -> Result<SquareMatrix> {
    let eig = sym_eigen(m)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}
