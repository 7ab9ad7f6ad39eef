//! Dense complex vectors and matrices, sized for per-trial work (M up to a few
//! thousand, τ up to ~100), plus a Hermitian eigen-decomposition.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec<T> {
    entries: Vec<Complex<T>>,
}

impl<T: Real> ComplexVec<T> {
    /// Checked constructor: non-empty, every entry finite.
    pub fn new(entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("complex vector must be non-empty"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("complex vector has a non-finite entry"));
        }
        Ok(Self { entries })
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "zero-length vector");
        Self { entries: vec![Complex::new(T::zero(), T::zero()); len] }
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> Complex<T>) -> Self {
        assert!(len > 0, "zero-length vector");
        Self { entries: (0..len).map(f).collect() }
    }

    /// Real-valued vector lifted to the complex plane.
    pub fn from_real(xs: &[T]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
        self.entries.iter()
    }

    pub fn into_inner(self) -> Vec<Complex<T>> {
        self.entries
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn conj(&self) -> Self {
        Self { entries: self.entries.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, a: T) -> Self {
        Self { entries: self.entries.iter().map(|z| z * a).collect() }
    }

    pub fn scale_complex(&self, a: Complex<T>) -> Self {
        Self { entries: self.entries.iter().map(|z| z * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self, other)?;
        Ok(Self { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self, other)?;
        Ok(Self { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect() })
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn hdot(&self, other: &Self) -> Result<Complex<T>> {
        check_len(self, other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum())
    }

    /// Unconjugated bilinear form `selfᵀ other*`, the pilot overlap convention.
    pub fn dot_conj(&self, other: &Self) -> Result<Complex<T>> {
        check_len(self, other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a * b.conj()).sum())
    }
}

impl<T> Index<usize> for ComplexVec<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.entries[i]
    }
}

impl<T> IndexMut<usize> for ComplexVec<T> {
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.entries[i]
    }
}

fn check_len<T: Real>(a: &ComplexVec<T>, b: &ComplexVec<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(format!("vector lengths {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMat<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dim(format!("{rows}x{cols} matrix from {} entries", data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("matrix has a non-finite entry"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[ComplexVec<T>]) -> Result<Self> {
        let n = cols.first().map(|c| c.len()).ok_or_else(|| Error::param("no columns"))?;
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::dim("columns of unequal length"));
        }
        Ok(Self::from_fn(n, cols.len(), |r, c| cols[c][r]))
    }

    /// Outer product `a bᵀ` (no conjugation).
    pub fn outer(a: &ComplexVec<T>, b: &ComplexVec<T>) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ComplexVec<T> {
        ComplexVec::from_fn(self.rows, |r| self[(r, c)])
    }

    pub fn mul_vec(&self, x: &ComplexVec<T>) -> Result<ComplexVec<T>> {
        if self.cols != x.len() {
            return Err(Error::dim(format!("{}x{} matrix times length-{} vector", self.rows, self.cols, x.len())));
        }
        let xs = x.as_slice();
        Ok(ComplexVec::from_fn(self.rows, |r| {
            self.row(r).iter().zip(xs).map(|(a, b)| a * b).sum()
        }))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᴴ self`, computed directly so the result is exactly Hermitian.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for a in 0..n {
                let ca = row[a].conj();
                for (o, &x) in out.data[a * n + a..(a + 1) * n].iter_mut().zip(&row[a..]) {
                    *o = *o + ca * x;
                }
            }
        }
        for a in 0..n {
            out.data[a * n + a].im = T::zero();
            for b in (a + 1)..n {
                out.data[b * n + a] = out.data[a * n + b].conj();
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, a: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    /// `(A + Aᴴ)/2`.
    pub fn hermitian_part(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::dim("hermitian part of a non-square matrix"));
        }
        let half = T::lit(0.5);
        Ok(Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + self[(c, r)].conj()) * half))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (r..self.cols).all(|c| (self[(r, c)] - self[(c, r)].conj()).norm() <= tol))
    }

    /// `xᵀ A x*`, the quadratic form used to score candidate pilots.
    pub fn pilot_quadratic_form(&self, x: &ComplexVec<T>) -> Result<T> {
        if self.rows != self.cols || self.cols != x.len() {
            return Err(Error::dim("quadratic form dimensions"));
        }
        let ax = self.mul_vec(&x.conj())?;
        Ok(x.iter().zip(ax.iter()).map(|(a, b)| a * b).sum::<Complex<T>>().re)
    }
}

impl<T> Index<(usize, usize)> for ComplexMat<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigen-decomposition `A = V diag(values) Vᴴ` of a Hermitian matrix.
/// `values` are ascending; column `k` of `vectors` pairs with `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMat<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn reconstruct(&self) -> ComplexMat<T> {
        let n = self.values.len();
        ComplexMat::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| self.vectors[(r, k)] * self.vectors[(c, k)].conj() * self.values[k])
                .sum()
        })
    }
}

const MAX_EIGEN_ITERS: usize = 10_000;

/// Eigen-decomposition of the Hermitian part of `a`. The solve runs in `f64`
/// whatever `T` is.
pub fn hermitian_eigen<T: Real>(a: &ComplexMat<T>) -> Result<HermitianEigen<T>> {
    let n = a.rows();
    let h = a.hermitian_part()?;
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        let z = h[(r, c)];
        Complex::new(z.re.as_f64(), z.im.as_f64())
    });
    let eig = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, MAX_EIGEN_ITERS)
        .ok_or_else(|| Error::Unsupported("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| T::lit(eig.eigenvalues[i])).collect();
    let vectors = ComplexMat::from_fn(n, n, |r, c| {
        let z = eig.eigenvectors[(r, order[c])];
        Complex::new(T::lit(z.re), T::lit(z.im))
    });
    Ok(HermitianEigen { values, vectors })
}

/// Nearest (Frobenius) positive-semidefinite matrix to the Hermitian part of `a`:
/// negative eigenvalues are clipped to zero.
pub fn project_psd<T: Real>(a: &ComplexMat<T>) -> Result<(ComplexMat<T>, HermitianEigen<T>)> {
    let mut eig = hermitian_eigen(a)?;
    for lam in eig.values.iter_mut() {
        if *lam < T::zero() {
            *lam = T::zero();
        }
    }
    let mut out = eig.reconstruct();
    // reconstruct() is Hermitian only up to rounding
    out = out.hermitian_part()?;
    Ok((out, eig))
}
