// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrices with the Hilbert-Schmidt geometry `<X|Y> = Tr X^dagger Y`.
//!
//! Storage is row-major. Spectral routines (Hermitian eigensolver, SVD, LU
//! determinant) are delegated to `nalgebra`; everything else is plain loops.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hermiticity tolerance for density matrices and eigensolver input.
pub const HERMITIAN_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Row-major data; fails when the length does not match the shape.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let v: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&v)
    }

    /// Rank-one `|v><v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
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

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: Complex64, other: &CMatrix) {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn try_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from the adjoint.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        let adj = self.adjoint();
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + adj[(i, j)]) * 0.5
        })
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Eigenvalues are sorted descending; each eigenvector is rotated so that
    /// its first non-negligible component is real and positive.
    pub fn herm_eig(&self) -> Result<HermEig> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigendecomposition of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        let n = self.rows;
        let eig = SymmetricEigen::new(self.hermitian_part().to_nalgebra());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let phase = v
                .iter()
                .find(|z| z.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE))
                .map_or(ONE, |z| z.conj() / z.norm());
            for i in 0..n {
                vectors[(i, col)] = v[i] * phase;
            }
        }
        Ok(HermEig { values, vectors })
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.to_nalgebra()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .to_nalgebra()
            .singular_values()
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn det(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "determinant of a non-square matrix".into(),
            ));
        }
        if self.rows == 0 {
            return Ok(ONE);
        }
        Ok(self.to_nalgebra().determinant())
    }

    /// Real part of the determinant, for matrices whose determinant is real
    /// (Hermitian or real input).
    pub fn det_real(&self) -> Result<f64> {
        Ok(self.det()?.re)
    }

    /// Haar-random unitary via QR of a complex Ginibre matrix.
    pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let g = ginibre(rng, n, n).to_nalgebra();
        let qr = g.qr();
        let q = qr.q();
        let r = qr.r();
        let mut out = CMatrix::from_nalgebra(&q);
        for j in 0..n {
            let rjj = r[(j, j)];
            let ph = if rjj.norm() > 0.0 {
                rjj / rjj.norm()
            } else {
                ONE
            };
            for i in 0..n {
                out[(i, j)] *= ph;
            }
        }
        out
    }

    /// Random Hermitian matrix with standard normal entries (GUE scaling).
    pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        ginibre(rng, n, n).hermitian_part()
    }
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Result of [`CMatrix::herm_eig`]: `A = V diag(values) V^dagger`.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    /// `V diag(f(values)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        CMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

/// Hilbert-Schmidt inner product `Tr X^dagger Y`, antilinear in `x`.
pub fn hs_inner(x: &CMatrix, y: &CMatrix) -> Result<Complex64> {
    if (x.rows, x.cols) != (y.rows, y.cols) {
        return Err(Error::DimensionMismatch(format!(
            "inner product of {}x{} and {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    Ok(x.data.iter().zip(&y.data).map(|(a, b)| a.conj() * b).sum())
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    if a.cols != b.rows || a.rows != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "trace of {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut acc = ZERO;
    for i in 0..a.rows {
        for k in 0..a.cols {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

/// Kronecker product; the row index of `a` is the most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a non-empty list, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let mut it = factors.into_iter();
    let first = it
        .next()
        .expect("kron_all needs at least one factor")
        .clone();
    it.fold(first, |acc, m| kron(&acc, m))
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            entries: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let data = repr
            .entries
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        CMatrix::from_vec(repr.rows, repr.cols, data).map_err(serde::de::Error::custom)
    }
}

/// A validated quantum state: Hermitian, unit trace, nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Smallest tolerated eigenvalue.
    pub const MIN_EIGENVALUE: f64 = -1e-9;

    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix is not square",
                mat.rows, mat.cols
            )));
        }
        let dev = mat.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace {} is not 1", tr.re)));
        }
        let min = mat.herm_eig()?.values.last().copied().unwrap_or(0.0);
        if min < Self::MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: CMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if n <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(Self {
            mat: CMatrix::outer(psi).scale_real(1.0 / n),
        })
    }

    /// Random mixed state `G G^dagger / Tr(G G^dagger)` from a Ginibre matrix
    /// (Hilbert-Schmidt measure).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        let g = ginibre(rng, d, d);
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        Self {
            mat: m.scale_real(1.0 / tr).hermitian_part(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}
