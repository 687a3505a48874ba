//! Dense complex matrices, spectral decompositions, Kronecker products, and
//! Schatten norms.
//!
//! [`ComplexMatrix`] is the carrier type for everything else in the crate:
//! channel inputs and outputs, transfer matrices, Choi matrices, Kraus
//! operators, and witnesses. All values are immutable after construction and
//! every operation here is a pure function, so the whole module is safe to
//! call from concurrent contexts.
//!
//! Schatten norms are defined through singular values. For a (possibly
//! rectangular) matrix `A` with singular values `s_i`,
//! `‖A‖_p = (Σ s_i^p)^{1/p}` for finite `p ≥ 1`, and `‖A‖_∞ = max s_i`.
//! Singular values are obtained from the Hermitian eigensystem of `A†A`,
//! clamping tiny negative eigenvalues to zero.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;

/// Relative tolerance for the Hermiticity check in
/// [`ComplexMatrix::hermitian_eigensystem`]: a matrix is accepted when
/// `max|A - A†| ≤ HERMITICITY_TOL · max(1, max|A|)`.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// Bound on the relative reconstruction error `‖A - VΛV†‖_F / ‖A‖_F` of the
/// Hermitian eigensystem at the matrix sizes this crate targets (≤ 81×81).
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// A Schatten-norm exponent: a real number `p ≥ 1`, or infinity for the
/// operator norm.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SchattenExponent {
    value: f64,
}

impl SchattenExponent {
    /// The operator norm (largest singular value).
    pub const INFINITY: Self = Self {
        value: f64::INFINITY,
    };
    pub const ONE: Self = Self { value: 1.0 };
    pub const TWO: Self = Self { value: 2.0 };

    /// Creates an exponent; `p` must satisfy `p ≥ 1` (infinity is allowed).
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::arg(
                "exponent",
                format!("Schatten exponents must satisfy p >= 1, got {p}"),
            ));
        }
        Ok(Self { value: p })
    }

    /// Integer exponent convenience used by the theorem checks.
    pub fn integer(t: u32) -> Result<Self> {
        Self::new(t as f64)
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn is_infinite(self) -> bool {
        self.value.is_infinite()
    }
}

impl std::fmt::Display for SchattenExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.value)
        }
    }
}

impl std::str::FromStr for SchattenExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "oo" => Ok(Self::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::arg("exponent", format!("cannot parse `{other}`")))?;
                Self::new(p)
            }
        }
    }
}

/// Dense complex matrix with finite entries.
///
/// Entries are exposed in row-major logical order regardless of internal
/// storage. Construction validates that every entry is finite.
#[derive(Clone, PartialEq, Debug)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

/// Result of a Hermitian eigendecomposition: real eigenvalues in descending
/// order and the matching orthonormal eigenvectors as columns.
///
/// Each eigenvector's phase is fixed by making its first component of modulus
/// above `1e-12` real and positive, so outputs are reproducible across runs.
#[derive(Clone, Debug)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl ComplexMatrix {
    pub(crate) fn from_dmatrix(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub(crate) fn inner(&self) -> &DMatrix<C64> {
        &self.inner
    }

    /// Builds a matrix from entries in row-major order.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry {:?} at flat index {bad}",
                entries[bad]
            )));
        }
        Ok(Self::from_dmatrix(DMatrix::from_row_slice(
            rows, cols, &entries,
        )))
    }

    /// Builds a matrix from real entries in row-major order.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    /// Builds a matrix entry by entry; `f(i, j)` must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_dmatrix(DMatrix::from_fn(rows, cols, |i, j| f(i, j)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_dmatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dmatrix(DMatrix::identity(n, n))
    }

    /// The matrix unit `E_ij` (1 at `(i, j)`, 0 elsewhere).
    pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> Result<Self> {
        if i >= rows || j >= cols {
            return Err(Error::InvalidMatrix(format!(
                "matrix unit index ({i}, {j}) out of bounds for {rows}x{cols}"
            )));
        }
        let mut m = Self::zeros(rows, cols);
        m.inner[(i, j)] = C64::new(1.0, 0.0);
        Ok(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    /// Entries in row-major order.
    pub fn entries_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    /// Column-major flattening, `vec(A)`; this is the vectorization convention
    /// used by transfer matrices throughout the crate.
    pub fn vec_col(&self) -> Vec<C64> {
        self.inner.as_slice().to_vec()
    }

    /// Inverse of [`ComplexMatrix::vec_col`].
    pub fn unvec(rows: usize, cols: usize, v: &[C64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot reshape {} entries into {rows}x{cols}",
                v.len()
            )));
        }
        Ok(Self::from_dmatrix(DMatrix::from_column_slice(rows, cols, v)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_dmatrix(self.inner.transpose())
    }

    pub fn conjugate(&self) -> Self {
        Self::from_dmatrix(self.inner.map(|z| z.conj()))
    }

    /// Conjugate transpose `A†`.
    pub fn adjoint(&self) -> Self {
        Self::from_dmatrix(self.inner.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_dmatrix(self.inner.map(|z| z * c))
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus, `max_ij |a_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `A - B`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows(), other.rows());
        assert_eq!(self.cols(), other.cols());
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `(A + A†) / 2`; requires a square matrix.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian_part requires a square matrix");
        Self::from_dmatrix((&self.inner + self.inner.adjoint()).map(|z| z * 0.5))
    }

    /// `max|A - A†|`, the distance from being Hermitian.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square());
        let adj = self.inner.adjoint();
        self.inner
            .iter()
            .zip(adj.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product `A ⊗ B`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let rows = self
            .rows()
            .checked_mul(other.rows())
            .ok_or_else(|| Error::arg("dimensions", "Kronecker row count overflows"))?;
        let cols = self
            .cols()
            .checked_mul(other.cols())
            .ok_or_else(|| Error::arg("dimensions", "Kronecker column count overflows"))?;
        rows.checked_mul(cols)
            .ok_or_else(|| Error::arg("dimensions", "Kronecker entry count overflows"))?;
        Ok(Self::from_dmatrix(self.inner.kronecker(&other.inner)))
    }

    /// Splits an `nm × nm` matrix into an `n × n` grid of `m × m` blocks.
    pub fn blocks(&self, n: usize, m: usize) -> Result<Vec<Vec<ComplexMatrix>>> {
        let dim = n
            .checked_mul(m)
            .ok_or_else(|| Error::arg("dimensions", "block grid dimensions overflow"))?;
        if self.rows() != dim || self.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected a {dim}x{dim} matrix for an {n}x{n} grid of {m}x{m} blocks, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let mut grid = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(Self::from_dmatrix(
                    self.inner.view((i * m, j * m), (m, m)).into_owned(),
                ));
            }
            grid.push(row);
        }
        Ok(grid)
    }

    /// Reassembles a block grid produced by [`ComplexMatrix::blocks`].
    pub fn from_blocks(grid: &[Vec<ComplexMatrix>]) -> Result<Self> {
        let n = grid.len();
        if n == 0 || grid.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(
                "block grid must be square and nonempty".into(),
            ));
        }
        let m = grid[0][0].rows();
        for row in grid {
            for b in row {
                if b.rows() != m || b.cols() != m {
                    return Err(Error::DimensionMismatch(
                        "all blocks must share the same square shape".into(),
                    ));
                }
            }
        }
        let mut out = DMatrix::zeros(n * m, n * m);
        for (i, row) in grid.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                out.view_mut((i * m, j * m), (m, m)).copy_from(&b.inner);
            }
        }
        Ok(Self::from_dmatrix(out))
    }

    /// Singular values in descending order, computed from the Hermitian
    /// eigensystem of `A†A` with tiny negative eigenvalues clamped to zero.
    ///
    /// For (numerically) Hermitian inputs the values are `|λ_i(A)|` instead;
    /// squaring through the Gram matrix would turn rounding noise of size `ε`
    /// into spurious singular values of size `√ε`.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = if self.is_square()
            && self.hermitian_deviation() <= 1e-12 * self.max_abs().max(1.0)
        {
            let herm = (&self.inner + self.inner.adjoint()).map(|z| z * 0.5);
            herm.symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|&l| l.abs())
                .collect()
        } else {
            let gram = self.inner.adjoint() * &self.inner;
            gram.symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|&l| l.max(0.0).sqrt())
                .collect()
        };
        s.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
        s
    }

    /// Schatten `p`-norm: `(Σ s_i^p)^{1/p}` for finite `p`, the largest
    /// singular value for `p = ∞`.
    pub fn schatten_norm(&self, p: SchattenExponent) -> f64 {
        // Frobenius case needs no spectral work.
        if p.value() == 2.0 {
            return self.frobenius_norm();
        }
        let s = self.singular_values();
        if p.is_infinite() {
            return s.first().copied().unwrap_or(0.0);
        }
        let pv = p.value();
        if pv == 1.0 {
            return s.iter().sum();
        }
        let scale = s.first().copied().unwrap_or(0.0);
        if scale == 0.0 {
            return 0.0;
        }
        // Factor out the top singular value so the powers stay well scaled.
        let sum: f64 = s.iter().map(|&x| (x / scale).powf(pv)).sum();
        scale * sum.powf(1.0 / pv)
    }

    /// Operator norm `‖A‖_∞` (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        self.schatten_norm(SchattenExponent::INFINITY)
    }

    /// Hermitian eigendecomposition with descending eigenvalues and
    /// phase-fixed eigenvectors.
    ///
    /// The input must be Hermitian within `HERMITICITY_TOL · max(1, max|A|)`;
    /// the decomposition itself is carried out on the Hermitian part.
    pub fn hermitian_eigensystem(&self) -> Result<HermitianEigensystem> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigensystem requires a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let tolerance = HERMITICITY_TOL * self.max_abs().max(1.0);
        let deviation = self.hermitian_deviation();
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        let herm = (&self.inner + self.inner.adjoint()).map(|z| z * 0.5);
        let eig = herm.symmetric_eigen();
        let n = self.rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("eigenvalues are finite")
        });
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (dst, &src) in order.iter().enumerate() {
            values.push(eig.eigenvalues[src]);
            let mut col = eig.eigenvectors.column(src).into_owned();
            if let Some(pivot) = col.iter().find(|z| z.norm() > 1e-12) {
                let phase = pivot.conj() / pivot.norm();
                col = col.map(|z| z * phase);
            }
            vectors.column_mut(dst).copy_from(&col);
        }
        Ok(HermitianEigensystem {
            eigenvalues: values,
            eigenvectors: Self::from_dmatrix(vectors),
        })
    }

    /// `f(A)` for Hermitian `A`, applying `f` to the eigenvalues.
    fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = self.hermitian_eigensystem()?;
        let n = self.rows();
        let v = &eig.eigenvectors.inner;
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(f(eig.eigenvalues[i]), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Self::from_dmatrix(v * d * v.adjoint()))
    }

    /// Square root of a positive semidefinite matrix; eigenvalues below zero
    /// (numerical noise) are clamped.
    pub fn psd_sqrt(&self) -> Result<Self> {
        self.hermitian_function(|l| l.max(0.0).sqrt())
    }

    /// Pseudo-inverse square root of a positive semidefinite matrix:
    /// eigenvalues at or below `cutoff · λ_max` are treated as zero.
    pub fn psd_pinv_sqrt(&self, cutoff: f64) -> Result<Self> {
        let eig = self.hermitian_eigensystem()?;
        let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let floor = cutoff * lmax;
        self.hermitian_function(move |l| if l > floor && l > 0.0 { 1.0 / l.sqrt() } else { 0.0 })
    }

    /// Matrix with independent standard complex Gaussian entries.
    pub fn random_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        Self::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    /// Haar-distributed random unitary via QR of a Ginibre matrix with the
    /// phases of the R diagonal absorbed.
    pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Self {
        let g = Self::random_gaussian(n, n, rng);
        let qr = g.inner.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
        Self::from_dmatrix(q)
    }

    /// Wishart-type random positive semidefinite matrix `GG†`.
    pub fn random_psd(n: usize, rng: &mut impl Rng) -> Self {
        let g = Self::random_gaussian(n, n, rng);
        Self::from_dmatrix(&g.inner * g.inner.adjoint())
    }

    /// Random density matrix: Wishart sample normalized to unit trace.
    pub fn random_density(n: usize, rng: &mut impl Rng) -> Self {
        let w = Self::random_psd(n, rng);
        let t = w.trace().re;
        w.scale_real(1.0 / t)
    }

    /// Haar-random pure state as an `n × 1` unit vector.
    pub fn random_pure_state(n: usize, rng: &mut impl Rng) -> Self {
        let g = Self::random_gaussian(n, 1, rng);
        let norm = g.frobenius_norm();
        g.scale_real(1.0 / norm)
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_dmatrix(&self.inner + &rhs.inner)
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_dmatrix(&self.inner - &rhs.inner)
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_dmatrix(&self.inner * &rhs.inner)
    }
}

impl std::ops::Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix::from_dmatrix(-&self.inner)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = MatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            entries: self
                .entries_row_major()
                .iter()
                .map(|z| [z.re, z.im])
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        let entries = repr
            .entries
            .iter()
            .map(|&[re, im]| C64::new(re, im))
            .collect();
        ComplexMatrix::new(repr.rows, repr.cols, entries).map_err(D::Error::custom)
    }
}
