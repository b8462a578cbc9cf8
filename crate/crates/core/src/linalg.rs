//! Dense complex linear algebra for density operators.
//!
//! Everything here works on explicit `dim x dim` matrices stored row-major.
//! The eigensolver and matrix products are delegated to `faer`; the rest
//! (Kronecker products, partial traces, site-local conjugation) is written
//! against the flat storage directly.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Max-entry tolerance for `A = A^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLAMP_TOL, 0)` are floating-point drift and read as zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Allowed deviation of a density operator's trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Pairwise inner products of a projector basis must match the identity to this.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

pub type Ket = Vec<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `<a|b>`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense complex matrix with row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
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

    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "entry count",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "row length",
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::from_vec(r, c, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|ket><bra|`
    pub fn outer(ket: &[Complex64], bra: &[Complex64]) -> Self {
        Self::from_fn(ket.len(), bra.len(), |i, j| ket[i] * bra[j].conj())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Ket]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Single-qubit Hadamard gate.
    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_fn(2, 2, |i, j| Complex64::new(if i == 1 && j == 1 { -h } else { h }, 0.0))
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Ket {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation; `inf` if the shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max_ij |A_ij - conj(A_ji)|`
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A^dagger) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == ZERO))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        if self.rows == 0 || other.cols == 0 || self.cols == 0 {
            return Self::zeros(self.rows, other.cols);
        }
        let product = &self.to_faer() * &other.to_faer();
        Self::from_faer(product.as_ref())
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Ket {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `<a| A |b>`
    pub fn sandwich(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        inner(a, &self.mul_vec(b))
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// `A (x) B`, with `A`'s index as the more significant one.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * rb, a.cols * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues non-increasing.
#[derive(Clone, Debug)]
pub struct Spectrum {
    values: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `values`.
    vectors: Option<ComplexMatrix>,
}

impl Spectrum {
    /// Values-only spectrum; sorts into non-increasing order.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values, vectors: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw eigenvalues, non-increasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvalues with drift in `[-CLAMP_TOL, 0)` read as zero.
    pub fn clamped_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&v| if (-CLAMP_TOL..0.0).contains(&v) { 0.0 } else { v })
            .collect()
    }

    pub fn vectors(&self) -> Option<&ComplexMatrix> {
        self.vectors.as_ref()
    }

    pub fn vector(&self, i: usize) -> Option<Ket> {
        self.vectors.as_ref().map(|v| v.column(i))
    }

    /// `sum_i f(lambda_i) |v_i><v_i|`; `None` without eigenvectors.
    pub fn map_reconstruct(&self, f: impl Fn(f64) -> f64) -> Option<ComplexMatrix> {
        let v = self.vectors.as_ref()?;
        let n = v.rows();
        let scaled = ComplexMatrix::from_fn(n, self.len(), |i, j| v[(i, j)] * f(self.values[j]));
        Some(scaled.matmul(&v.adjoint()))
    }

    pub fn reconstruct(&self) -> Option<ComplexMatrix> {
        self.map_reconstruct(|x| x)
    }
}

fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = a.max_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    Ok(())
}

fn sorted_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Hermitian eigendecomposition with eigenvalues in non-increasing order.
///
/// Ties keep the solver's output order. Diagonal inputs skip the solver and
/// return standard basis vectors.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<Spectrum> {
    check_hermitian(a)?;
    let n = a.rows;
    if a.is_diagonal() {
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        let order = sorted_desc(&diag);
        let values = order.iter().map(|&k| diag[k]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |i, j| if order[j] == i { ONE } else { ZERO });
        return Ok(Spectrum {
            values,
            vectors: Some(vectors),
        });
    }
    let h = a.hermitian_part().to_faer();
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let raw: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let order = sorted_desc(&raw);
    let values = order.iter().map(|&k| raw[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(Spectrum {
        values,
        vectors: Some(vectors),
    })
}

/// Eigenvalues only, non-increasing.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(a)?;
    if a.is_diagonal() {
        return Ok(Spectrum::from_values((0..a.rows).map(|i| a[(i, i)].re).collect()).values);
    }
    let values = a
        .hermitian_part()
        .to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{e:?}")))?;
    Ok(Spectrum::from_values(values).values)
}

/// Principal square root of a positive semidefinite matrix.
pub fn matrix_sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spec = hermitian_eig(a)?;
    if let Some(&min) = spec.values.last() {
        if min < -CLAMP_TOL {
            return Err(Error::NegativeEigenvalue { eigenvalue: min });
        }
    }
    let floor = noise_floor(&spec.values);
    Ok(spec
        .map_reconstruct(|x| if x > floor { x.sqrt() } else { 0.0 })
        .expect("hermitian_eig returns eigenvectors")
        .hermitian_part())
}

/// Eigenvalues at or below this are indistinguishable from zero for a
/// Hermitian matrix with the given spectrum.
pub(crate) fn noise_floor(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.len() as f64 * f64::EPSILON * scale
}

/// `tr|A|` for Hermitian `A`.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?.iter().map(|x| x.abs()).sum())
}

fn checked_product(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

/// Partial trace of a square matrix on a tensor product of sites.
///
/// `keep` lists the sites retained; they appear in ascending site order.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let total = checked_product(dims).unwrap_or(usize::MAX);
    if total != m.rows || dims.contains(&0) {
        return Err(Error::DimensionMismatch {
            context: "product of site dimensions",
            expected: m.rows,
            got: total,
        });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "number of kept sites",
            expected: 1,
            got: 0,
        });
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch {
            context: "kept site index",
            expected: dims.len() - 1,
            got: bad,
        });
    }
    let is_kept: Vec<bool> = (0..dims.len()).map(|k| kept.binary_search(&k).is_ok()).collect();
    let kept_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let traced_dim = total / kept_dim;

    // full index for every (kept, traced) pair
    let mut table = vec![0usize; total];
    for x in 0..total {
        let (mut rem, mut a, mut t) = (x, 0usize, 0usize);
        let (mut wa, mut wt) = (1usize, 1usize);
        for k in (0..dims.len()).rev() {
            let digit = rem % dims[k];
            rem /= dims[k];
            if is_kept[k] {
                a += digit * wa;
                wa *= dims[k];
            } else {
                t += digit * wt;
                wt *= dims[k];
            }
        }
        table[a * traced_dim + t] = x;
    }
    Ok(ComplexMatrix::from_fn(kept_dim, kept_dim, |a, b| {
        (0..traced_dim)
            .map(|t| m[(table[a * traced_dim + t], table[b * traced_dim + t])])
            .sum()
    }))
}

/// `(1 (x) U (x) 1) M (1 (x) U (x) 1)^dagger` with `U` acting on one site.
pub fn conjugate_site(m: &ComplexMatrix, dims: &[usize], site: usize, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let total = checked_product(dims).unwrap_or(usize::MAX);
    if !m.is_square() || total != m.rows {
        return Err(Error::DimensionMismatch {
            context: "product of site dimensions",
            expected: m.rows,
            got: total,
        });
    }
    if site >= dims.len() || u.rows != dims[site] || u.cols != dims[site] {
        return Err(Error::DimensionMismatch {
            context: "site unitary",
            expected: dims.get(site).copied().unwrap_or(0),
            got: u.rows,
        });
    }
    let d = dims[site];
    let stride: usize = dims[site + 1..].iter().product();
    let bases: Vec<usize> = (0..total).filter(|x| (x / stride).is_multiple_of(d)).collect();

    let mut left = m.clone();
    let mut buf = vec![ZERO; d];
    for c in 0..total {
        for &base in &bases {
            for (s, slot) in buf.iter_mut().enumerate() {
                *slot = m[(base + s * stride, c)];
            }
            for s in 0..d {
                left[(base + s * stride, c)] = (0..d).map(|t| u[(s, t)] * buf[t]).sum();
            }
        }
    }
    let mut out = left.clone();
    for r in 0..total {
        for &base in &bases {
            for (s, slot) in buf.iter_mut().enumerate() {
                *slot = left[(r, base + s * stride)];
            }
            for s in 0..d {
                out[(r, base + s * stride)] = (0..d).map(|t| buf[t] * u[(s, t)].conj()).sum();
            }
        }
    }
    Ok(out)
}

/// Trace-one positive semidefinite Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace });
        }
        let values = hermitian_eigenvalues(&matrix)?;
        if let Some(&min) = values.last() {
            if min < -CLAMP_TOL {
                return Err(Error::NegativeEigenvalue { eigenvalue: min });
            }
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Skips the eigenvalue check; positivity must hold by construction.
    pub(crate) fn from_psd_unchecked(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag(probabilities))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_psd_unchecked(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// `|psi><psi|` for the normalized `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let n = norm(psi);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidTrace { trace: n * n });
        }
        let unit: Ket = psi.iter().map(|z| z / n).collect();
        Ok(Self::from_psd_unchecked(ComplexMatrix::outer(&unit, &unit)))
    }

    /// Convex mixture; weights must sum to one.
    pub fn mixture(items: &[(f64, &DensityOperator)]) -> Result<Self> {
        let dim = items.first().map_or(0, |(_, r)| r.dim());
        let mut acc = ComplexMatrix::zeros(dim, dim);
        let mut total = 0.0;
        for (w, r) in items {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "mixture component",
                    expected: dim,
                    got: r.dim(),
                });
            }
            if *w < 0.0 {
                return Err(Error::OutOfRange {
                    what: "mixture weight",
                    value: *w,
                    range: "[0, 1]",
                });
            }
            acc = &acc + &r.matrix.scale_real(*w);
            total += w;
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace: total });
        }
        Ok(Self::from_psd_unchecked(acc))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        hermitian_eig(&self.matrix)
    }

    /// `tr rho^2`
    pub fn purity(&self) -> f64 {
        // tr(A A) = sum |A_ij|^2 for Hermitian A
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<psi| rho |psi>`
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        self.matrix.sandwich(psi, psi).re
    }

    /// Conjugation by a unitary (or isometry) `U rho U^dagger`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self::from_psd_unchecked(u.matmul(&self.matrix).matmul(&u.adjoint()))
    }
}

/// Partial trace of a density operator.
pub fn partial_trace(rho: &DensityOperator, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
    Ok(DensityOperator::from_psd_unchecked(partial_trace_matrix(
        &rho.matrix,
        dims,
        keep,
    )?))
}

/// Orthogonal projector given by an orthonormal basis of its range.
#[derive(Clone, Debug)]
pub struct Projector {
    /// `dim x rank`, orthonormal columns.
    basis: ComplexMatrix,
}

impl Projector {
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        let gram = basis.adjoint().matmul(&basis);
        let dev = gram.max_abs_diff(&ComplexMatrix::identity(basis.cols));
        if dev > ORTHONORMAL_TOL {
            return Err(Error::InvalidProjector(format!(
                "basis not orthonormal (max Gram deviation {dev:e})"
            )));
        }
        Ok(Self { basis })
    }

    pub fn from_vectors(dim: usize, vectors: &[Ket]) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "projector basis vector",
                expected: dim,
                got: v.len(),
            });
        }
        Self::new(ComplexMatrix::from_columns(dim, vectors))
    }

    pub fn full(dim: usize) -> Self {
        Self {
            basis: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn rank(&self) -> usize {
        self.basis.cols
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn basis_vector(&self, k: usize) -> Ket {
        self.basis.column(k)
    }

    /// `P = V V^dagger`
    pub fn matrix(&self) -> ComplexMatrix {
        self.basis.matmul(&self.basis.adjoint())
    }

    /// Coordinates `V^dagger v` of a vector in the range basis.
    pub fn coordinates(&self, v: &[Complex64]) -> Ket {
        self.basis.adjoint().mul_vec(v)
    }

    /// `|| v - P v ||`
    pub fn range_residual(&self, v: &[Complex64]) -> f64 {
        let back = self.basis.mul_vec(&self.coordinates(v));
        norm(&v.iter().zip(&back).map(|(a, b)| a - b).collect::<Ket>())
    }

    /// `max(|P - P^dagger|, |P - P^2|)`, entrywise.
    pub fn idempotency_residual(&self) -> f64 {
        let p = self.matrix();
        p.max_asymmetry().max(p.max_abs_diff(&p.matmul(&p)))
    }

    /// Orthonormal basis of the orthogonal complement, by Gram-Schmidt over
    /// the standard basis (two orthogonalization passes).
    pub fn complement(&self) -> Projector {
        let dim = self.dim();
        let mut found: Vec<Ket> = Vec::with_capacity(dim - self.rank());
        let existing: Vec<Ket> = (0..self.rank()).map(|k| self.basis.column(k)).collect();
        for e in 0..dim {
            if found.len() + existing.len() == dim {
                break;
            }
            let mut v = vec![ZERO; dim];
            v[e] = ONE;
            for _ in 0..2 {
                for q in existing.iter().chain(found.iter()) {
                    let c = inner(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let n = norm(&v);
            if n > 1e-6 {
                found.push(v.into_iter().map(|z| z / n).collect());
            }
        }
        Projector {
            basis: ComplexMatrix::from_columns(dim, &found),
        }
    }
}
