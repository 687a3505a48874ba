//! Linear maps on matrix algebras: representations, conversions, structural
//! predicates, and the named channel families.
//!
//! A [`ChannelMap`] is a linear map `Φ: M_n → M_m` stored canonically as its
//! `m² × n²` transfer matrix acting on column-vectorized inputs,
//! `vec(Φ(A)) = T · vec(A)`. The Choi matrix (the block matrix `[Φ(E_ij)]`)
//! is a cached derived view; Kraus operators are recovered from its
//! eigensystem when needed. Channels are immutable after construction, so all
//! queries are safe to run concurrently.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Default tolerance on the Choi minimum eigenvalue for complete positivity.
pub const DEFAULT_CP_TOL: f64 = 1e-9;

/// Default absolute tolerance on Choi entries for entrywise positivity;
/// entries are O(1) for normalized channels.
pub const DEFAULT_EP_TOL: f64 = 1e-10;

/// Default tolerance for the trace-preservation test.
pub const DEFAULT_TP_TOL: f64 = 1e-9;

/// Default number of random positive inputs for 2-positivity falsification.
pub const DEFAULT_TWO_POSITIVE_SAMPLES: usize = 1000;

/// Default eigenvalue tolerance for 2-positivity falsification.
pub const DEFAULT_TWO_POSITIVE_TOL: f64 = 1e-9;

/// The Pauli matrix `σ_k`, with `σ_0 = I`.
pub fn pauli(k: usize) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let entries = match k {
        0 => vec![o, z, z, o],
        1 => vec![z, o, o, z],
        2 => vec![z, -i, i, z],
        3 => vec![o, z, z, -o],
        _ => panic!("Pauli index must be 0..=3, got {k}"),
    };
    ComplexMatrix::new(2, 2, entries).expect("Pauli entries are finite")
}

/// A nonempty list of Kraus operators with uniform shape.
#[derive(Clone, Debug)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::arg("operators", "Kraus set must be nonempty"))?;
        let (m, n) = (first.rows(), first.cols());
        for (idx, op) in operators.iter().enumerate() {
            if op.rows() != m || op.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {idx} is {}x{}, expected {m}x{n}",
                    op.rows(),
                    op.cols()
                )));
            }
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn out_dim(&self) -> usize {
        self.operators[0].rows()
    }

    pub fn in_dim(&self) -> usize {
        self.operators[0].cols()
    }
}

/// The six real parameters `(λ₁, λ₂, λ₃, t₁, t₂, t₃)` of the diagonal
/// representation of a qubit map: the map scales Bloch component `k` by `λ_k`
/// and then shifts it by `t_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitDiagonalParams {
    pub lambda: [f64; 3],
    pub t: [f64; 3],
}

impl QubitDiagonalParams {
    pub fn new(lambda: [f64; 3], t: [f64; 3]) -> Result<Self> {
        if lambda.iter().chain(t.iter()).any(|x| !x.is_finite()) {
            return Err(Error::arg("params", "all six parameters must be finite"));
        }
        Ok(Self { lambda, t })
    }

    /// Entrywise positivity of the canonical-form qubit map, decided exactly
    /// on the parameters: `λ₁ ≥ |λ₂|`, `t₁ ≥ 0`, and `t₂ = 0`.
    pub fn is_ep_canonical(&self) -> bool {
        self.lambda[0] >= self.lambda[1].abs() && self.t[0] >= 0.0 && self.t[1] == 0.0
    }
}

/// The real 4×4 representation `a_jk = ½ Tr[σ_j Φ(σ_k)]` of a qubit map,
/// indexed `0..=3` with `σ_0 = I`.
///
/// For a trace-preserving map the top row is `(1, 0, 0, 0)`; the left column
/// below it carries the Bloch translation and the lower-right 3×3 block the
/// Bloch distortion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTransfer {
    pub a: [[f64; 4]; 4],
}

fn check_orthogonal(o: &[[f64; 3]; 3], name: &str) -> Result<()> {
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| o[k][i] * o[k][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            if (dot - expected).abs() > 1e-9 {
                return Err(Error::arg(
                    name,
                    format!("matrix is not orthogonal: (OᵀO)[{i}][{j}] = {dot}"),
                ));
            }
        }
    }
    Ok(())
}

impl PauliTransfer {
    /// Change of orthonormal bases on range and domain: the translation part
    /// maps as `v → O₁ v`, the distortion block as `T → O₁ T O₂`, and the top
    /// row as `u → u O₂`, with `a₀₀` unchanged.
    pub fn rotate_bases(&self, o1: &[[f64; 3]; 3], o2: &[[f64; 3]; 3]) -> Result<PauliTransfer> {
        check_orthogonal(o1, "o1")?;
        check_orthogonal(o2, "o2")?;
        let mut out = [[0.0; 4]; 4];
        out[0][0] = self.a[0][0];
        // v' = O1 v
        for j in 0..3 {
            out[j + 1][0] = (0..3).map(|k| o1[j][k] * self.a[k + 1][0]).sum();
        }
        // u' = u O2
        for k in 0..3 {
            out[0][k + 1] = (0..3).map(|j| self.a[0][j + 1] * o2[j][k]).sum();
        }
        // T' = O1 T O2
        for j in 0..3 {
            for k in 0..3 {
                let mut acc = 0.0;
                for r in 0..3 {
                    for s in 0..3 {
                        acc += o1[j][r] * self.a[r + 1][s + 1] * o2[s][k];
                    }
                }
                out[j + 1][k + 1] = acc;
            }
        }
        Ok(PauliTransfer { a: out })
    }

    /// How far the representation is from having row 2 and column 2 vanish
    /// away from the diagonal: `max |a_j2|, |a_2k|` over `j, k ∈ {0, 1, 3}`.
    ///
    /// This quantity must vanish (in some pair of rotated bases) for every
    /// matrix element `Tr E_ij Φ(E_kl)` of the map to be real, which is
    /// necessary for entrywise positivity.
    pub fn realness_obstruction(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &j in &[0usize, 1, 3] {
            worst = worst.max(self.a[j][2].abs());
            worst = worst.max(self.a[2][j].abs());
        }
        worst
    }
}

/// Witness for an entrywise-positivity failure: the Choi entry
/// `Φ(E_ij)[k, l]` with the largest violation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpWitness {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub re: f64,
    pub im: f64,
}

/// Outcome of the entrywise-positivity test in the standard bases.
#[derive(Clone, Debug)]
pub struct EpReport {
    pub ep: bool,
    /// Largest violation `max(-Re, |Im|)` over all Choi entries.
    pub worst_violation: f64,
    pub worst_entry: EpWitness,
}

/// Outcome of the complete-positivity test.
#[derive(Clone, Debug)]
pub struct CpReport {
    pub cp: bool,
    pub min_eigenvalue: f64,
    /// Eigenvector of the Choi matrix at the minimum eigenvalue.
    pub witness: ComplexMatrix,
}

/// Outcome of sampling-based 2-positivity falsification.
///
/// `not_falsified = true` means no sampled positive input produced a negative
/// output eigenvalue; it is evidence, not a certificate.
#[derive(Clone, Debug)]
pub struct TwoPositivityReport {
    pub not_falsified: bool,
    pub worst_eigenvalue: f64,
    pub counterexample: Option<ComplexMatrix>,
}

/// Optional provenance attached to serialized channels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetadata {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    n: usize,
    m: usize,
    transfer: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    metadata: Option<ChannelMetadata>,
}

/// A linear map `M_n → M_m` held as its transfer matrix.
#[derive(Debug)]
pub struct ChannelMap {
    in_dim: usize,
    out_dim: usize,
    transfer: ComplexMatrix,
    choi_cache: OnceLock<ComplexMatrix>,
}

impl Clone for ChannelMap {
    fn clone(&self) -> Self {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            transfer: self.transfer.clone(),
            choi_cache: self.choi_cache.clone(),
        }
    }
}

impl ChannelMap {
    /// Wraps an `m² × n²` transfer matrix.
    pub fn from_transfer(in_dim: usize, out_dim: usize, transfer: ComplexMatrix) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::arg("dimensions", "channel dimensions must be positive"));
        }
        let (rows, cols) = (out_dim * out_dim, in_dim * in_dim);
        if transfer.rows() != rows || transfer.cols() != cols {
            return Err(Error::DimensionMismatch(format!(
                "transfer must be {rows}x{cols} for a {in_dim}->{out_dim} map, got {}x{}",
                transfer.rows(),
                transfer.cols()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            transfer,
            choi_cache: OnceLock::new(),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn transfer(&self) -> &ComplexMatrix {
        &self.transfer
    }

    /// The identity channel on `M_d`.
    pub fn identity(d: usize) -> Result<Self> {
        Self::from_transfer(d, d, ComplexMatrix::identity(d * d))
    }

    /// The zero map `M_n → M_m`.
    pub fn zero(in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::from_transfer(
            in_dim,
            out_dim,
            ComplexMatrix::zeros(out_dim * out_dim, in_dim * in_dim),
        )
    }

    /// The transpose map `ρ → ρᵀ` on `M_d`.
    pub fn transpose_map(d: usize) -> Result<Self> {
        let mut t = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                // vec index of (i, j) is j*d + i; transpose sends it to (j, i).
                t[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
            }
        }
        Self::from_transfer(d, d, ComplexMatrix::from_dmatrix(t))
    }

    /// Builds the channel `ρ → Σ A_k ρ A_k†` from Kraus operators.
    pub fn from_kraus(kraus: &KrausSet) -> Result<Self> {
        let (m, n) = (kraus.out_dim(), kraus.in_dim());
        let mut t = DMatrix::zeros(m * m, n * n);
        for op in kraus.operators() {
            let term = op.conjugate().kron(op)?;
            t += term.inner();
        }
        Self::from_transfer(n, m, ComplexMatrix::from_dmatrix(t))
    }

    /// Unitary conjugation `Γ_U: ρ → U ρ U†`.
    pub fn unitary_conjugation(u: &ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::DimensionMismatch("conjugation needs a square matrix".into()));
        }
        Self::from_kraus(&KrausSet::new(vec![u.clone()])?)
    }

    /// Builds a channel from its Choi matrix (the `n×n` grid of `m×m` blocks
    /// `Φ(E_ij)`).
    pub fn from_choi(in_dim: usize, out_dim: usize, choi: &ComplexMatrix) -> Result<Self> {
        let dim = in_dim * out_dim;
        if choi.rows() != dim || choi.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix must be {dim}x{dim}, got {}x{}",
                choi.rows(),
                choi.cols()
            )));
        }
        let (n, m) = (in_dim, out_dim);
        let mut t = DMatrix::zeros(m * m, n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        t[(l * m + k, j * n + i)] = choi.get(i * m + k, j * m + l);
                    }
                }
            }
        }
        Self::from_transfer(n, m, ComplexMatrix::from_dmatrix(t))
    }

    /// Evaluates `Φ(A)`.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.rows() != self.in_dim || a.cols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "input must be {0}x{0}, got {1}x{2}",
                self.in_dim,
                a.rows(),
                a.cols()
            )));
        }
        let v = DVector::from_column_slice(&a.vec_col());
        let w = self.transfer.inner() * v;
        ComplexMatrix::unvec(self.out_dim, self.out_dim, w.as_slice())
    }

    /// The Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)`, computed once and cached.
    pub fn choi(&self) -> &ComplexMatrix {
        self.choi_cache.get_or_init(|| {
            let (n, m) = (self.in_dim, self.out_dim);
            let mut c = DMatrix::zeros(n * m, n * m);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..m {
                        for l in 0..m {
                            c[(i * m + k, j * m + l)] = self.transfer.get(l * m + k, j * n + i);
                        }
                    }
                }
            }
            ComplexMatrix::from_dmatrix(c)
        })
    }

    /// Tensor product of two maps, acting on `M_{n₁n₂} → M_{m₁m₂}`.
    ///
    /// The transfer matrix is assembled from the block expansion
    /// `(K ⊗ L)(A) = Σ_ij K(E_ij) ⊗ L(A_ij)` applied to the product basis.
    pub fn tensor(&self, other: &ChannelMap) -> Result<ChannelMap> {
        let n = self
            .in_dim
            .checked_mul(other.in_dim)
            .ok_or_else(|| Error::arg("dimensions", "tensor input dimension overflows"))?;
        let m = self
            .out_dim
            .checked_mul(other.out_dim)
            .ok_or_else(|| Error::arg("dimensions", "tensor output dimension overflows"))?;
        n.checked_mul(n)
            .and_then(|nn| nn.checked_mul(m * m))
            .ok_or_else(|| Error::arg("dimensions", "tensor transfer size overflows"))?;

        let mut k_imgs = Vec::with_capacity(self.in_dim * self.in_dim);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let e = ComplexMatrix::matrix_unit(self.in_dim, self.in_dim, i, j)?;
                k_imgs.push(self.apply(&e)?);
            }
        }
        let mut l_imgs = Vec::with_capacity(other.in_dim * other.in_dim);
        for i in 0..other.in_dim {
            for j in 0..other.in_dim {
                let e = ComplexMatrix::matrix_unit(other.in_dim, other.in_dim, i, j)?;
                l_imgs.push(other.apply(&e)?);
            }
        }

        let mut t = DMatrix::zeros(m * m, n * n);
        for i1 in 0..self.in_dim {
            for i2 in 0..other.in_dim {
                for j1 in 0..self.in_dim {
                    for j2 in 0..other.in_dim {
                        let a = i1 * other.in_dim + i2;
                        let b = j1 * other.in_dim + j2;
                        let img = k_imgs[i1 * self.in_dim + j1]
                            .kron(&l_imgs[i2 * other.in_dim + j2])?;
                        let col = img.vec_col();
                        for (r, z) in col.iter().enumerate() {
                            t[(r, b * n + a)] = *z;
                        }
                    }
                }
            }
        }
        ChannelMap::from_transfer(n, m, ComplexMatrix::from_dmatrix(t))
    }

    /// Composition `self ∘ inner` (apply `inner` first).
    pub fn compose(&self, inner: &ChannelMap) -> Result<ChannelMap> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}->{} with {}->{}",
                inner.in_dim, inner.out_dim, self.in_dim, self.out_dim
            )));
        }
        let t = self.transfer.inner() * inner.transfer.inner();
        ChannelMap::from_transfer(inner.in_dim, self.out_dim, ComplexMatrix::from_dmatrix(t))
    }

    /// The adjoint map with respect to the Hilbert–Schmidt inner product,
    /// `Tr[Φ̂(B)† A] = Tr[B† Φ(A)]`; its transfer matrix is the conjugate
    /// transpose of the original.
    pub fn adjoint(&self) -> ChannelMap {
        ChannelMap {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            transfer: self.transfer.adjoint(),
            choi_cache: OnceLock::new(),
        }
    }

    /// The conjugated map `Γ_V ∘ Φ ∘ Γ_U`, used to test entrywise positivity
    /// in a different pair of orthonormal bases. `u` and `v` must be unitary.
    pub fn conjugated(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ChannelMap> {
        for (name, w, d) in [("u", u, self.in_dim), ("v", v, self.out_dim)] {
            if w.rows() != d || w.cols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {d}x{d} for this channel"
                )));
            }
            let dev = (&(&w.adjoint() * w) - &ComplexMatrix::identity(d)).max_abs();
            if dev > 1e-9 {
                return Err(Error::arg(name, format!("matrix is not unitary (deviation {dev:.3e})")));
            }
        }
        let gu = ChannelMap::unitary_conjugation(u)?;
        let gv = ChannelMap::unitary_conjugation(v)?;
        gv.compose(&self.compose(&gu)?)
    }

    /// Complete positivity via the Choi spectrum: CP iff `λ_min ≥ -tol`.
    ///
    /// A non-Hermitian Choi matrix (a map that is not Hermiticity-preserving)
    /// is reported as a distinct error.
    pub fn is_cp(&self, tol: f64) -> Result<CpReport> {
        let choi = self.choi();
        let eig = choi.hermitian_eigensystem().map_err(|e| match e {
            Error::NotHermitian { deviation, .. } => Error::NotHermiticityPreserving(deviation),
            other => other,
        })?;
        let min_eigenvalue = *eig
            .eigenvalues
            .last()
            .expect("channel dimensions are positive");
        let dim = choi.rows();
        let idx = eig.eigenvalues.len() - 1;
        let witness = ComplexMatrix::from_fn(dim, 1, |i, _| eig.eigenvectors.get(i, idx));
        Ok(CpReport {
            cp: min_eigenvalue >= -tol,
            min_eigenvalue,
            witness,
        })
    }

    /// Entrywise positivity in the standard bases: every Choi entry must have
    /// real part `≥ -tol` and imaginary part of magnitude `≤ tol`.
    ///
    /// To test a different basis pair, conjugate first via
    /// [`ChannelMap::conjugated`].
    pub fn is_ep_in_basis(&self, tol: f64) -> EpReport {
        let choi = self.choi();
        let m = self.out_dim;
        let mut worst = f64::NEG_INFINITY;
        let mut at = (0usize, 0usize);
        for r in 0..choi.rows() {
            for c in 0..choi.cols() {
                let z = choi.get(r, c);
                let violation = (-z.re).max(z.im.abs());
                if violation > worst {
                    worst = violation;
                    at = (r, c);
                }
            }
        }
        let z = choi.get(at.0, at.1);
        let worst_entry = EpWitness {
            i: at.0 / m,
            j: at.1 / m,
            k: at.0 % m,
            l: at.1 % m,
            re: z.re,
            im: z.im,
        };
        EpReport {
            ep: worst <= tol,
            worst_violation: worst,
            worst_entry,
        }
    }

    /// Trace preservation: `Tr Φ(E_ij) = δ_ij` for all `i, j` within `tol`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let (n, m) = (self.in_dim, self.out_dim);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut tr = C64::new(0.0, 0.0);
                for k in 0..m {
                    tr += self.transfer.get(k * m + k, j * n + i);
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((tr - C64::new(expected, 0.0)).norm());
            }
        }
        worst <= tol
    }

    /// Tries to falsify 2-positivity by applying `id₂ ⊗ Φ` to random positive
    /// semidefinite inputs. Returns the first counterexample whose output has
    /// an eigenvalue below `-tol` (or whose output fails to be Hermitian by
    /// more than `tol`). A `not_falsified` outcome is evidence only.
    pub fn two_positive_falsify(
        &self,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> Result<TwoPositivityReport> {
        if samples == 0 {
            return Err(Error::arg("samples", "at least one sample is required"));
        }
        let ext = ChannelMap::identity(2)?.tensor(self)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * self.in_dim;
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let input = ComplexMatrix::random_density(dim, &mut rng);
            let out = ext.apply(&input)?;
            let herm_dev = out.hermitian_deviation();
            let eig = out.hermitian_part().hermitian_eigensystem()?;
            let min = *eig.eigenvalues.last().expect("nonempty spectrum");
            worst = worst.min(min);
            if min < -tol || herm_dev > tol {
                return Ok(TwoPositivityReport {
                    not_falsified: false,
                    worst_eigenvalue: min,
                    counterexample: Some(input),
                });
            }
        }
        Ok(TwoPositivityReport {
            not_falsified: true,
            worst_eigenvalue: worst,
            counterexample: None,
        })
    }

    /// Kraus operators from the Choi eigensystem.
    ///
    /// Meaningful for (approximately) completely positive maps: eigenvalues
    /// below `-1e-7 · λ_max` are an error, small negative ones are clamped.
    pub fn kraus(&self) -> Result<KrausSet> {
        let choi = self.choi();
        let eig = choi.hermitian_eigensystem().map_err(|e| match e {
            Error::NotHermitian { deviation, .. } => Error::NotHermiticityPreserving(deviation),
            other => other,
        })?;
        let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let (n, m) = (self.in_dim, self.out_dim);
        let mut ops = Vec::new();
        for (idx, &l) in eig.eigenvalues.iter().enumerate() {
            if l < -1e-7 * lmax.max(1.0) {
                return Err(Error::NotPositiveSemidefinite(l));
            }
            if l <= 1e-12 * lmax.max(1.0) {
                continue;
            }
            let w = l.sqrt();
            let op = ComplexMatrix::from_fn(m, n, |k, i| {
                eig.eigenvectors.get(i * m + k, idx) * C64::new(w, 0.0)
            });
            ops.push(op);
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(m, n));
        }
        KrausSet::new(ops)
    }

    /// The Pauli-basis representation of a qubit map.
    ///
    /// Imaginary parts of `½ Tr[σ_j Φ(σ_k)]` are discarded; they vanish for
    /// Hermiticity-preserving maps.
    pub fn pauli_transfer(&self) -> Result<PauliTransfer> {
        if self.in_dim != 2 || self.out_dim != 2 {
            return Err(Error::DimensionMismatch(format!(
                "Pauli transfer requires a qubit map, got {}->{}",
                self.in_dim, self.out_dim
            )));
        }
        let mut a = [[0.0; 4]; 4];
        for k in 0..4 {
            let img = self.apply(&pauli(k))?;
            for j in 0..4 {
                let prod = &pauli(j) * &img;
                a[j][k] = 0.5 * prod.trace().re;
            }
        }
        Ok(PauliTransfer { a })
    }

    /// The qubit map `I + w·σ → I + (λ∘w + t)·σ` in its diagonal
    /// representation; trace-preserving by construction.
    pub fn qubit_from_diagonal(params: &QubitDiagonalParams) -> Result<Self> {
        // Images of the Pauli basis.
        let mut sigma_imgs = Vec::with_capacity(4);
        let mut phi_i = ComplexMatrix::identity(2);
        for k in 0..3 {
            phi_i = &phi_i + &pauli(k + 1).scale_real(params.t[k]);
        }
        sigma_imgs.push(phi_i);
        for k in 0..3 {
            sigma_imgs.push(pauli(k + 1).scale_real(params.lambda[k]));
        }

        let mut t = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                // E_ij = ½ Σ_a Tr(σ_a E_ij) σ_a, and Tr(σ_a E_ij) = σ_a[j, i].
                let mut img = ComplexMatrix::zeros(2, 2);
                for (a, sig_img) in sigma_imgs.iter().enumerate() {
                    let coeff = pauli(a).get(j, i) * C64::new(0.5, 0.0);
                    img = &img + &sig_img.scale(coeff);
                }
                let col = img.vec_col();
                for (r, z) in col.iter().enumerate() {
                    t[(r, j * 2 + i)] = *z;
                }
            }
        }
        Self::from_transfer(2, 2, ComplexMatrix::from_dmatrix(t))
    }

    /// The depolarizing channel `ρ → λρ + (1-λ)(Tr ρ) I/d` on `M_d`.
    ///
    /// Complete positivity holds for `-1/(d²-1) ≤ λ ≤ 1`; this constructor
    /// does not restrict `λ`, use [`ChannelMap::is_cp`] to query validity.
    pub fn depolarizing(d: usize, lambda: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::arg("d", "dimension must be at least 2"));
        }
        if !lambda.is_finite() {
            return Err(Error::arg("lambda", "mixing parameter must be finite"));
        }
        let gamma = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
        Self::mix_with_state(d, lambda, &gamma)
    }

    fn mix_with_state(d: usize, lambda: f64, gamma: &ComplexMatrix) -> Result<Self> {
        let vec_id = ComplexMatrix::identity(d).vec_col();
        let vec_gamma = gamma.vec_col();
        let mut t = DMatrix::identity(d * d, d * d).map(|x: C64| x * C64::new(lambda, 0.0));
        for (r, g) in vec_gamma.iter().enumerate() {
            for (c, id) in vec_id.iter().enumerate() {
                // Tr ρ = vec(I)ᵀ vec(ρ); vec(I) is real.
                t[(r, c)] += C64::new(1.0 - lambda, 0.0) * g * id;
            }
        }
        Self::from_transfer(d, d, ComplexMatrix::from_dmatrix(t))
    }

    /// The generalized depolarizing channel `ρ → λρ + (1-λ)(Tr ρ) γ` for a
    /// fixed density matrix `γ`.
    ///
    /// With `diagonalize_gamma`, the channel is expressed in the eigenbasis
    /// of `γ` (replacing `γ` by its eigenvalue diagonal), where it is
    /// entrywise positive for `0 ≤ λ ≤ 1`.
    pub fn generalized_depolarizing(
        lambda: f64,
        gamma: &ComplexMatrix,
        diagonalize_gamma: bool,
    ) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::arg("lambda", "mixing parameter must be finite"));
        }
        if !gamma.is_square() {
            return Err(Error::arg("gamma", "state must be a square matrix"));
        }
        let d = gamma.rows();
        let eig = gamma.hermitian_eigensystem().map_err(|_| {
            Error::arg("gamma", "state must be Hermitian")
        })?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::arg(
                "gamma",
                format!("state must be positive semidefinite (min eigenvalue {min:.3e})"),
            ));
        }
        let trace = gamma.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::arg(
                "gamma",
                format!("state must have unit trace, got {trace}"),
            ));
        }
        if diagonalize_gamma {
            let diag = ComplexMatrix::from_diagonal(
                &eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect::<Vec<_>>(),
            );
            Self::mix_with_state(d, lambda, &diag)
        } else {
            Self::mix_with_state(d, lambda, gamma)
        }
    }

    /// A random-unitary channel built from permutations:
    /// `ρ → Σ p_k P_k ρ P_kᵀ`. Probabilities must be nonnegative and sum to 1
    /// within `1e-10`; each permutation is given as the image list
    /// `perm[i] = row of the 1 in column i`.
    pub fn random_unitary_permutation(probs: &[f64], perms: &[Vec<usize>]) -> Result<Self> {
        if probs.is_empty() || probs.len() != perms.len() {
            return Err(Error::arg(
                "probs",
                "need equally many probabilities and permutations, at least one",
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::arg("probs", "probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::arg(
                "probs",
                format!("probabilities must sum to 1, got {total}"),
            ));
        }
        let d = perms[0].len();
        let mut ops = Vec::with_capacity(probs.len());
        for (p, perm) in probs.iter().zip(perms) {
            if perm.len() != d {
                return Err(Error::arg("perms", "permutations must share one size"));
            }
            let mut seen = vec![false; d];
            for &image in perm {
                if image >= d || seen[image] {
                    return Err(Error::arg("perms", "not a valid permutation"));
                }
                seen[image] = true;
            }
            let w = C64::new(p.sqrt(), 0.0);
            ops.push(ComplexMatrix::from_fn(d, d, |r, c| {
                if perm[c] == r {
                    w
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
        }
        Self::from_kraus(&KrausSet::new(ops)?)
    }

    /// The map `ρ → ((Tr ρ) I - ρᵀ) / (d-1)`: completely positive and
    /// trace-preserving, but with negative Choi entries in the standard basis.
    pub fn werner_holevo(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::arg("d", "dimension must be at least 2"));
        }
        let scale = 1.0 / (d as f64 - 1.0);
        let vec_id = ComplexMatrix::identity(d).vec_col();
        let mut t = DMatrix::zeros(d * d, d * d);
        for (r, a) in vec_id.iter().enumerate() {
            for (c, b) in vec_id.iter().enumerate() {
                t[(r, c)] = a * b * C64::new(scale, 0.0);
            }
        }
        for i in 0..d {
            for j in 0..d {
                t[(i * d + j, j * d + i)] -= C64::new(scale, 0.0);
            }
        }
        Self::from_transfer(d, d, ComplexMatrix::from_dmatrix(t))
    }

    /// Random completely positive map with `kraus_count` Gaussian Kraus
    /// operators; deterministic in `seed`.
    ///
    /// With `trace_preserving`, the Kraus set is renormalized by
    /// `(Σ A_k†A_k)^{-1/2}` (this needs `out_dim · kraus_count ≥ in_dim`);
    /// otherwise it is scaled to be trace-nonincreasing with `‖Σ A_k†A_k‖_∞ = 1`.
    pub fn random_cp(
        in_dim: usize,
        out_dim: usize,
        kraus_count: usize,
        seed: u64,
        trace_preserving: bool,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || kraus_count == 0 {
            return Err(Error::arg("dimensions", "dimensions and kraus_count must be positive"));
        }
        if trace_preserving && out_dim * kraus_count < in_dim {
            return Err(Error::arg(
                "kraus_count",
                "trace preservation needs out_dim * kraus_count >= in_dim",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<ComplexMatrix> = (0..kraus_count)
            .map(|_| ComplexMatrix::random_gaussian(out_dim, in_dim, &mut rng))
            .collect();
        let normalized = normalize_kraus(ops, trace_preserving)?;
        Self::from_kraus(&KrausSet::new(normalized)?)
    }

    /// Random completely positive map with entrywise-nonnegative Kraus
    /// operators, hence entrywise positive in the standard bases;
    /// deterministic in `seed`.
    ///
    /// The trace-preserving variant draws generalized sub-permutation Kraus
    /// operators (one positive entry per column, distinct rows within each
    /// operator), whose normalization is diagonal and therefore keeps entries
    /// nonnegative; it needs `out_dim ≥ in_dim`. The trace-nonincreasing
    /// variant uses dense uniform entries with a global rescale.
    pub fn random_ep_cp(
        in_dim: usize,
        out_dim: usize,
        kraus_count: usize,
        seed: u64,
        trace_preserving: bool,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || kraus_count == 0 {
            return Err(Error::arg("dimensions", "dimensions and kraus_count must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if trace_preserving {
            if out_dim < in_dim {
                return Err(Error::arg(
                    "out_dim",
                    "entrywise-positive trace preservation needs out_dim >= in_dim",
                ));
            }
            let mut values = vec![vec![0.0f64; in_dim]; kraus_count];
            let mut rows = vec![vec![0usize; in_dim]; kraus_count];
            let mut col_sums = vec![0.0f64; in_dim];
            for k in 0..kraus_count {
                let mut row_pool: Vec<usize> = (0..out_dim).collect();
                row_pool.shuffle(&mut rng);
                for i in 0..in_dim {
                    let v: f64 = rng.gen_range(0.1..1.1);
                    values[k][i] = v;
                    rows[k][i] = row_pool[i];
                    col_sums[i] += v * v;
                }
            }
            let ops: Vec<ComplexMatrix> = (0..kraus_count)
                .map(|k| {
                    ComplexMatrix::from_fn(out_dim, in_dim, |r, i| {
                        if rows[k][i] == r {
                            C64::new(values[k][i] / col_sums[i].sqrt(), 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                })
                .collect();
            Self::from_kraus(&KrausSet::new(ops)?)
        } else {
            let ops: Vec<ComplexMatrix> = (0..kraus_count)
                .map(|_| {
                    ComplexMatrix::from_fn(out_dim, in_dim, |_, _| {
                        C64::new(rng.gen_range(0.0..1.0), 0.0)
                    })
                })
                .collect();
            let normalized = normalize_kraus(ops, false)?;
            Self::from_kraus(&KrausSet::new(normalized)?)
        }
    }

    /// Random linear map with no structure at all: a Ginibre transfer matrix
    /// rescaled to unit operator norm; deterministic in `seed`.
    pub fn random_linear(in_dim: usize, out_dim: usize, seed: u64) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::arg("dimensions", "dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = ComplexMatrix::random_gaussian(out_dim * out_dim, in_dim * in_dim, &mut rng);
        let scale = 1.0 / t.operator_norm();
        Self::from_transfer(in_dim, out_dim, t.scale_real(scale))
    }

    /// Random entrywise-positive map from a uniform nonnegative Choi matrix;
    /// not completely positive in general. With `hermiticity_preserving`, the
    /// Choi matrix is symmetrized.
    pub fn random_ep(
        in_dim: usize,
        out_dim: usize,
        seed: u64,
        hermiticity_preserving: bool,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::arg("dimensions", "dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = in_dim * out_dim;
        let raw = ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(0.0..1.0), 0.0));
        let choi = if hermiticity_preserving {
            (&raw + &raw.transpose()).scale_real(0.5 / dim as f64)
        } else {
            raw.scale_real(1.0 / dim as f64)
        };
        Self::from_choi(in_dim, out_dim, &choi)
    }

    /// Random entrywise-positive map that is verified not to be completely
    /// positive: a symmetric uniform Choi matrix, resampled until its minimum
    /// eigenvalue is below `-1e-6`.
    pub fn random_ep_not_cp(d: usize, seed: u64) -> Result<Self> {
        for attempt in 0..64 {
            let map = Self::random_ep(d, d, seed.wrapping_add(attempt * 0x9e37), true)?;
            let cp = map.is_cp(DEFAULT_CP_TOL)?;
            if !cp.cp && cp.min_eigenvalue < -1e-6 {
                return Ok(map);
            }
        }
        Err(Error::arg(
            "seed",
            "could not draw an entrywise-positive non-CP map (unexpected)",
        ))
    }

    /// Serializes the channel (and optional metadata) to the interchange JSON
    /// schema: `{n, m, transfer: [[re, im], ...] (row-major), metadata?}`.
    pub fn to_json(&self, metadata: Option<ChannelMetadata>) -> String {
        let doc = ChannelJson {
            n: self.in_dim,
            m: self.out_dim,
            transfer: self
                .transfer
                .entries_row_major()
                .iter()
                .map(|z| [z.re, z.im])
                .collect(),
            metadata,
        };
        serde_json::to_string(&doc).expect("channel JSON serialization cannot fail")
    }

    /// Parses the interchange JSON schema, validating shape and finiteness.
    pub fn from_json(text: &str) -> Result<(Self, Option<ChannelMetadata>)> {
        let doc: ChannelJson =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let entries: Vec<C64> = doc.transfer.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let rows = doc.m * doc.m;
        let cols = doc.n * doc.n;
        let transfer = ComplexMatrix::new(rows.max(1), cols.max(1), entries)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        let map = Self::from_transfer(doc.n, doc.m, transfer)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        Ok((map, doc.metadata))
    }
}

/// Renormalizes a Kraus family: exactly trace-preserving via `S^{-1/2}` with
/// `S = Σ A_k†A_k`, or trace-nonincreasing via a scalar so `‖S‖_∞ = 1`.
fn normalize_kraus(ops: Vec<ComplexMatrix>, trace_preserving: bool) -> Result<Vec<ComplexMatrix>> {
    let n = ops[0].cols();
    let mut s = ComplexMatrix::zeros(n, n);
    for op in &ops {
        s = &s + &(&op.adjoint() * op);
    }
    if trace_preserving {
        let inv_sqrt = s.psd_pinv_sqrt(1e-14)?;
        Ok(ops.iter().map(|op| op * &inv_sqrt).collect())
    } else {
        let scale = 1.0 / s.operator_norm().sqrt();
        Ok(ops.iter().map(|op| op.scale_real(scale)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn maximally_entangled_unnormalized(d: usize) -> ComplexMatrix {
        let mut ent = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let e = ComplexMatrix::matrix_unit(d, d, i, j).unwrap();
                ent = &ent + &e.kron(&e).unwrap();
            }
        }
        ent
    }

    #[test]
    fn apply_identity_and_depolarizing() {
        let id = ChannelMap::identity(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ComplexMatrix::random_gaussian(3, 3, &mut rng);
        assert!(id.apply(&a).unwrap().max_abs_diff(&a) < 1e-15);

        let fully = ChannelMap::depolarizing(2, 0.0).unwrap();
        let rho = ComplexMatrix::random_density(2, &mut rng);
        let out = fully.apply(&rho).unwrap();
        let expected = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(out.max_abs_diff(&expected) < 1e-14);

        let dep = ChannelMap::depolarizing(2, 0.5).unwrap();
        let e11 = ComplexMatrix::matrix_unit(2, 2, 0, 0).unwrap();
        let out = dep.apply(&e11).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[0.75, 0.25]);
        assert!(out.max_abs_diff(&expected) < 1e-15);

        assert!(dep.apply(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn apply_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = ChannelMap::random_cp(3, 2, 2, 5, true).unwrap();
        let a = ComplexMatrix::random_gaussian(3, 3, &mut rng);
        let b = ComplexMatrix::random_gaussian(3, 3, &mut rng);
        let (alpha, beta) = (c(0.3, -1.2), c(-0.7, 0.4));
        let lhs = k
            .apply(&(&a.scale(alpha) + &b.scale(beta)))
            .unwrap();
        let rhs = &k.apply(&a).unwrap().scale(alpha) + &k.apply(&b).unwrap().scale(beta);
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn tensor_identity_and_products() {
        let id2 = ChannelMap::identity(2).unwrap();
        let id4 = id2.tensor(&id2).unwrap();
        assert_eq!(
            id4.transfer().max_abs_diff(ChannelMap::identity(4).unwrap().transfer()),
            0.0
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = ChannelMap::random_cp(2, 2, 2, 11, true).unwrap();
        let l = ChannelMap::random_cp(3, 2, 2, 12, false).unwrap();
        let kl = k.tensor(&l).unwrap();
        let a = ComplexMatrix::random_gaussian(2, 2, &mut rng);
        let b = ComplexMatrix::random_gaussian(3, 3, &mut rng);
        let lhs = kl.apply(&a.kron(&b).unwrap()).unwrap();
        let rhs = k.apply(&a).unwrap().kron(&l.apply(&b).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn tensor_matches_block_expansion() {
        // (K ⊗ L)(A) = Σ_ij K(E_ij) ⊗ L(A_ij) on a random two-qubit input.
        let k = ChannelMap::random_cp(2, 2, 3, 21, true).unwrap();
        let l = ChannelMap::random_cp(2, 2, 2, 22, false).unwrap();
        let kl = k.tensor(&l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = ComplexMatrix::random_gaussian(4, 4, &mut rng);
        let direct = kl.apply(&a).unwrap();

        let blocks = a.blocks(2, 2).unwrap();
        let mut expansion = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let e = ComplexMatrix::matrix_unit(2, 2, i, j).unwrap();
                let term = k
                    .apply(&e)
                    .unwrap()
                    .kron(&l.apply(&blocks[i][j]).unwrap())
                    .unwrap();
                expansion = &expansion + &term;
            }
        }
        assert!(direct.max_abs_diff(&expansion) <= 1e-12);
    }

    #[test]
    fn tensor_is_associative() {
        let k = ChannelMap::random_cp(2, 2, 2, 31, true).unwrap();
        let l = ChannelMap::random_cp(2, 2, 2, 32, false).unwrap();
        let m = ChannelMap::random_cp(2, 2, 2, 33, true).unwrap();
        let left = k.tensor(&l).unwrap().tensor(&m).unwrap();
        let right = k.tensor(&l.tensor(&m).unwrap()).unwrap();
        assert!(left.transfer().max_abs_diff(right.transfer()) <= 1e-12);
    }

    #[test]
    fn choi_examples() {
        let id = ChannelMap::identity(2).unwrap();
        let ent = maximally_entangled_unnormalized(2);
        assert!(id.choi().max_abs_diff(&ent) < 1e-15);
        assert_relative_eq!(id.choi().trace().re, 2.0, epsilon = 1e-12);
        let eig = id.choi().hermitian_eigensystem().unwrap();
        assert!(eig.eigenvalues[0] > 1.0 && eig.eigenvalues[1].abs() < 1e-12);

        let fully = ChannelMap::depolarizing(2, 0.0).unwrap();
        let expected = ComplexMatrix::identity(4).scale_real(0.5);
        assert!(fully.choi().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn qubit_diagonal_choi_matches_displayed_form() {
        let params = QubitDiagonalParams::new([0.6, 0.2, 0.4], [0.1, 0.0, 0.2]).unwrap();
        let phi = ChannelMap::qubit_from_diagonal(&params).unwrap();
        let [l1, l2, l3] = params.lambda;
        let [t1, t2, t3] = params.t;
        let expected = ComplexMatrix::new(
            4,
            4,
            vec![
                c(1.0 + l3 + t3, 0.0), c(t1, -t2), c(0.0, 0.0), c(l1 + l2, 0.0),
                c(t1, t2), c(1.0 - l3 - t3, 0.0), c(l1 - l2, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(l1 - l2, 0.0), c(1.0 - l3 + t3, 0.0), c(t1, -t2),
                c(l1 + l2, 0.0), c(0.0, 0.0), c(t1, t2), c(1.0 + l3 - t3, 0.0),
            ],
        )
        .unwrap()
        .scale_real(0.5);
        assert!(phi.choi().max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn choi_transfer_round_trip_is_exact() {
        let k = ChannelMap::random_cp(3, 2, 2, 41, false).unwrap();
        let back = ChannelMap::from_choi(3, 2, k.choi()).unwrap();
        assert_eq!(k.transfer().max_abs_diff(back.transfer()), 0.0);
    }

    #[test]
    fn choi_entries_match_apply() {
        let k = ChannelMap::random_cp(3, 2, 3, 42, true).unwrap();
        let (n, m) = (3, 2);
        let choi = k.choi();
        for i in 0..n {
            for j in 0..n {
                let img = k
                    .apply(&ComplexMatrix::matrix_unit(n, n, i, j).unwrap())
                    .unwrap();
                for kk in 0..m {
                    for l in 0..m {
                        let diff = (choi.get(i * m + kk, j * m + l) - img.get(kk, l)).norm();
                        assert!(diff <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cp_boundary_of_depolarizing() {
        let boundary = ChannelMap::depolarizing(2, -1.0 / 3.0).unwrap();
        let report = boundary.is_cp(1e-9).unwrap();
        assert!(report.cp, "min eigenvalue {}", report.min_eigenvalue);
        assert!(report.min_eigenvalue >= -1e-9);

        let outside = ChannelMap::depolarizing(2, -0.4).unwrap();
        let report = outside.is_cp(1e-9).unwrap();
        assert!(!report.cp);
        assert!(report.min_eigenvalue < -0.01);

        assert!(ChannelMap::identity(2).unwrap().is_cp(1e-9).unwrap().cp);
    }

    #[test]
    fn cp_rejects_non_hermiticity_preserving() {
        // Φ(ρ) = ρ₁₁ E₁₂ only: Choi not Hermitian.
        let t = ComplexMatrix::from_fn(4, 4, |r, cc| {
            if r == 2 && cc == 0 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let k = ChannelMap::from_transfer(2, 2, t).unwrap();
        match k.is_cp(1e-9) {
            Err(Error::NotHermiticityPreserving(_)) => {}
            other => panic!("expected NotHermiticityPreserving, got {other:?}"),
        }
    }

    #[test]
    fn ep_examples() {
        assert!(ChannelMap::depolarizing(2, 0.5).unwrap().is_ep_in_basis(1e-10).ep);
        assert!(ChannelMap::identity(2).unwrap().is_ep_in_basis(1e-10).ep);

        let params = QubitDiagonalParams::new([0.5, 0.3, 0.2], [0.1, 0.1, 0.1]).unwrap();
        let phi = ChannelMap::qubit_from_diagonal(&params).unwrap();
        let report = phi.is_ep_in_basis(1e-10);
        assert!(!report.ep);
        // The offending entries carry ±i t2 / 2.
        assert_relative_eq!(report.worst_violation, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn ep_closure_under_tensor() {
        let a = ChannelMap::random_ep_cp(2, 2, 2, 51, true).unwrap();
        let b = ChannelMap::random_ep_cp(3, 3, 2, 52, true).unwrap();
        assert!(a.is_ep_in_basis(1e-12).ep);
        assert!(b.is_ep_in_basis(1e-12).ep);
        assert!(a.tensor(&b).unwrap().is_ep_in_basis(1e-12).ep);
    }

    #[test]
    fn trace_preservation() {
        for lambda in [-0.3, 0.0, 0.5, 1.0] {
            assert!(ChannelMap::depolarizing(3, lambda)
                .unwrap()
                .is_trace_preserving(1e-9));
        }
        let doubler = ChannelMap::from_transfer(
            2,
            2,
            ComplexMatrix::identity(4).scale_real(2.0),
        )
        .unwrap();
        assert!(!doubler.is_trace_preserving(1e-9));

        let gamma = ComplexMatrix::from_diagonal(&[0.7, 0.3]);
        let gen = ChannelMap::generalized_depolarizing(0.3, &gamma, false).unwrap();
        assert!(gen.is_trace_preserving(1e-9));
    }

    #[test]
    fn adjoint_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = ComplexMatrix::random_unitary(3, &mut rng);
        let gu = ChannelMap::unitary_conjugation(&u).unwrap();
        let gu_star = ChannelMap::unitary_conjugation(&u.adjoint()).unwrap();
        assert!(gu.adjoint().transfer().max_abs_diff(gu_star.transfer()) < 1e-12);

        let k = ChannelMap::random_cp(3, 3, 2, 61, true).unwrap();
        let unital = k.adjoint().apply(&ComplexMatrix::identity(3)).unwrap();
        assert!(unital.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);

        // Hilbert-Schmidt pairing.
        let khat = k.adjoint();
        for _ in 0..5 {
            let a = ComplexMatrix::random_gaussian(3, 3, &mut rng);
            let b = ComplexMatrix::random_gaussian(3, 3, &mut rng);
            let lhs = (&khat.apply(&b).unwrap().adjoint() * &a).trace();
            let rhs = (&b.adjoint() * &k.apply(&a).unwrap()).trace();
            assert!((lhs - rhs).norm() <= 1e-11);
        }
    }

    #[test]
    fn two_positivity_examples() {
        let cp = ChannelMap::random_cp(2, 2, 3, 71, true).unwrap();
        let report = cp.two_positive_falsify(200, 7, 1e-9).unwrap();
        assert!(report.not_falsified);

        let transpose = ChannelMap::transpose_map(2).unwrap();
        let report = transpose.two_positive_falsify(1000, 7, 1e-9).unwrap();
        assert!(!report.not_falsified);
        assert!(report.counterexample.is_some());

        let zero = ChannelMap::zero(2, 2).unwrap();
        assert!(zero.two_positive_falsify(50, 7, 1e-9).unwrap().not_falsified);

        assert!(cp.two_positive_falsify(0, 7, 1e-9).is_err());
    }

    #[test]
    fn qubit_diagonal_limits() {
        let id_params = QubitDiagonalParams::new([1.0, 1.0, 1.0], [0.0; 3]).unwrap();
        let phi = ChannelMap::qubit_from_diagonal(&id_params).unwrap();
        assert!(phi.transfer().max_abs_diff(ChannelMap::identity(2).unwrap().transfer()) < 1e-15);

        let dep_params = QubitDiagonalParams::new([0.0; 3], [0.0; 3]).unwrap();
        let phi = ChannelMap::qubit_from_diagonal(&dep_params).unwrap();
        let fully = ChannelMap::depolarizing(2, 0.0).unwrap();
        assert!(phi.transfer().max_abs_diff(fully.transfer()) < 1e-15);

        assert!(phi.is_trace_preserving(1e-12));
    }

    #[test]
    fn qubit_ep_canonical_criterion() {
        let yes = QubitDiagonalParams::new([0.5, 0.3, 0.2], [0.1, 0.0, 0.3]).unwrap();
        assert!(yes.is_ep_canonical());
        let no = QubitDiagonalParams::new([0.5, 0.3, 0.2], [0.1, 0.1, 0.3]).unwrap();
        assert!(!no.is_ep_canonical());
        let zeros = QubitDiagonalParams::new([0.0; 3], [0.0; 3]).unwrap();
        assert!(zeros.is_ep_canonical());
    }

    #[test]
    fn pauli_transfer_round_trip() {
        let params = QubitDiagonalParams::new([0.7, -0.2, 0.4], [0.05, -0.1, 0.2]).unwrap();
        let phi = ChannelMap::qubit_from_diagonal(&params).unwrap();
        let pt = phi.pauli_transfer().unwrap();
        assert_eq!(pt.a[0][0], 1.0);
        for k in 1..4 {
            assert!(pt.a[0][k].abs() <= 1e-12);
            assert!((pt.a[k][0] - params.t[k - 1]).abs() <= 1e-12);
            for j in 1..4 {
                let expected = if j == k { params.lambda[k - 1] } else { 0.0 };
                assert!((pt.a[j][k] - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pauli_rotation_identity_and_validation() {
        let params = QubitDiagonalParams::new([0.7, -0.2, 0.4], [0.05, -0.1, 0.2]).unwrap();
        let pt = ChannelMap::qubit_from_diagonal(&params)
            .unwrap()
            .pauli_transfer()
            .unwrap();
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let rotated = pt.rotate_bases(&eye, &eye).unwrap();
        assert_eq!(rotated, pt);

        let bad = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(pt.rotate_bases(&bad, &eye).is_err());
    }

    #[test]
    fn pauli_rotation_matches_unitary_conjugation() {
        // Rotation about axis 3 by angle θ on the range side only.
        let theta = 0.37f64;
        let (s, co) = theta.sin_cos();
        let o1 = [[co, -s, 0.0], [s, co, 0.0], [0.0, 0.0, 1.0]];
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        // U = exp(-i θ σ3 / 2) realizes that Bloch rotation by conjugation.
        let half = theta / 2.0;
        let u = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(half.cos(), -half.sin()), C64::new(0.0, 0.0),
                C64::new(0.0, 0.0), C64::new(half.cos(), half.sin()),
            ],
        )
        .unwrap();
        let params = QubitDiagonalParams::new([0.6, 0.3, -0.2], [0.1, 0.0, 0.05]).unwrap();
        let phi = ChannelMap::qubit_from_diagonal(&params).unwrap();
        let direct = phi
            .conjugated(&ComplexMatrix::identity(2), &u)
            .unwrap()
            .pauli_transfer()
            .unwrap();
        let rotated = phi.pauli_transfer().unwrap().rotate_bases(&o1, &eye).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                assert!(
                    (direct.a[j][k] - rotated.a[j][k]).abs() < 1e-12,
                    "mismatch at ({j},{k}): {} vs {}",
                    direct.a[j][k],
                    rotated.a[j][k]
                );
            }
        }
    }

    #[test]
    fn realness_obstruction_persists_under_sampled_rotations() {
        // Distinct nonzero Bloch scalings with all shifts nonzero: no sampled
        // rotation pair clears row/column 2.
        let params = QubitDiagonalParams::new([0.6, 0.3, 0.15], [0.2, 0.15, 0.1]).unwrap();
        let pt = ChannelMap::qubit_from_diagonal(&params)
            .unwrap()
            .pauli_transfer()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut min_obstruction = f64::INFINITY;
        for _ in 0..2000 {
            let o1 = random_rotation(&mut rng);
            let o2 = random_rotation(&mut rng);
            let rotated = pt.rotate_bases(&o1, &o2).unwrap();
            min_obstruction = min_obstruction.min(rotated.realness_obstruction());
        }
        assert!(
            min_obstruction > 1e-9,
            "sampled rotations unexpectedly cleared axis 2 (min {min_obstruction:.3e})"
        );
    }

    fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
        // QR of a real Gaussian matrix with sign-fixed diagonal.
        let g = nalgebra::DMatrix::<f64>::from_fn(3, 3, |_, _| rng.sample(rand_distr::StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..3 {
            if r[(j, j)] < 0.0 {
                for i in 0..3 {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = q[(i, j)];
            }
        }
        out
    }

    #[test]
    fn depolarizing_family() {
        let id_like = ChannelMap::depolarizing(3, 1.0).unwrap();
        assert!(id_like
            .transfer()
            .max_abs_diff(ChannelMap::identity(3).unwrap().transfer())
            < 1e-15);

        let dep = ChannelMap::depolarizing(3, 0.7).unwrap();
        assert!(dep.is_ep_in_basis(1e-10).ep);
        assert!(ChannelMap::depolarizing(1, 0.5).is_err());
    }

    #[test]
    fn generalized_depolarizing_family() {
        let d = 2;
        let gamma = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
        let gen = ChannelMap::generalized_depolarizing(0.4, &gamma, false).unwrap();
        let dep = ChannelMap::depolarizing(d, 0.4).unwrap();
        assert!(gen.transfer().max_abs_diff(dep.transfer()) < 1e-15);

        let gamma = ComplexMatrix::from_diagonal(&[0.7, 0.3]);
        let one = ChannelMap::generalized_depolarizing(1.0, &gamma, false).unwrap();
        assert!(one.transfer().max_abs_diff(ChannelMap::identity(2).unwrap().transfer()) < 1e-15);

        let gen = ChannelMap::generalized_depolarizing(0.4, &gamma, false).unwrap();
        assert!(gen.is_cp(1e-9).unwrap().cp);
        assert!(gen.is_ep_in_basis(1e-10).ep);

        // Non-diagonal γ: EP holds after rotating into its eigenbasis.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = ComplexMatrix::random_unitary(2, &mut rng);
        let rotated_gamma = &(&u * &gamma) * &u.adjoint();
        let gen_raw = ChannelMap::generalized_depolarizing(0.4, &rotated_gamma, false).unwrap();
        let gen_diag = ChannelMap::generalized_depolarizing(0.4, &rotated_gamma, true).unwrap();
        assert!(!gen_raw.is_ep_in_basis(1e-10).ep);
        assert!(gen_diag.is_ep_in_basis(1e-10).ep);
        assert!(gen_diag.is_cp(1e-9).unwrap().cp);

        let not_density = ComplexMatrix::from_diagonal(&[0.9, 0.3]);
        assert!(ChannelMap::generalized_depolarizing(0.4, &not_density, false).is_err());
    }

    #[test]
    fn kraus_constructors() {
        let id = ChannelMap::from_kraus(
            &KrausSet::new(vec![ComplexMatrix::identity(2)]).unwrap(),
        )
        .unwrap();
        assert!(id.transfer().max_abs_diff(ChannelMap::identity(2).unwrap().transfer()) < 1e-15);

        let mix = ChannelMap::random_unitary_permutation(
            &[0.5, 0.5],
            &[vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        assert!(mix.is_cp(1e-9).unwrap().cp);
        assert!(mix.is_ep_in_basis(1e-12).ep);
        assert!(mix.is_trace_preserving(1e-12));

        assert!(ChannelMap::random_unitary_permutation(&[0.5, 0.4], &[vec![0, 1], vec![1, 0]])
            .is_err());
        assert!(ChannelMap::random_unitary_permutation(&[0.5, 0.5], &[vec![0, 1], vec![1, 1]])
            .is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ops: Vec<ComplexMatrix> = (0..3)
            .map(|_| {
                ComplexMatrix::from_fn(2, 2, |_, _| c(rng.gen_range(0.0..1.0), 0.0))
            })
            .collect();
        let phi = ChannelMap::from_kraus(&KrausSet::new(ops).unwrap()).unwrap();
        assert!(phi.is_ep_in_basis(1e-12).ep);
    }

    #[test]
    fn kraus_round_trip() {
        let k = ChannelMap::random_cp(3, 2, 3, 81, true).unwrap();
        let kraus = k.kraus().unwrap();
        let back = ChannelMap::from_kraus(&kraus).unwrap();
        let diff = (&(k.transfer().clone()) - back.transfer()).frobenius_norm();
        assert!(diff <= 1e-10, "round trip drift {diff:.3e}");
    }

    #[test]
    fn werner_holevo_family() {
        let wh2 = ChannelMap::werner_holevo(2).unwrap();
        let pt = wh2.pauli_transfer().unwrap();
        let expected = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ];
        for j in 0..4 {
            for k in 0..4 {
                assert!((pt.a[j][k] - expected[j][k]).abs() < 1e-12);
            }
        }

        let wh3 = ChannelMap::werner_holevo(3).unwrap();
        assert!(wh3.is_cp(1e-9).unwrap().cp);
        assert!(wh3.is_trace_preserving(1e-12));
        assert!(!wh3.is_ep_in_basis(1e-10).ep);
        assert!(!wh2.is_ep_in_basis(1e-10).ep);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2usize, 3, 4] {
            let wh = ChannelMap::werner_holevo(d).unwrap();
            let psi = ComplexMatrix::random_pure_state(d, &mut rng);
            let out = wh.apply(&(&psi * &psi.adjoint())).unwrap();
            let eig = out.hermitian_eigensystem().unwrap();
            for &l in &eig.eigenvalues[..d - 1] {
                assert!((l - 1.0 / (d as f64 - 1.0)).abs() < 1e-12);
            }
            assert!(eig.eigenvalues[d - 1].abs() < 1e-12);
        }

        assert!(ChannelMap::werner_holevo(1).is_err());
    }

    #[test]
    fn random_channels_are_what_they_claim() {
        for seed in [0u64, 1, 2] {
            let cp = ChannelMap::random_cp(3, 2, 2, seed, false).unwrap();
            assert!(cp.is_cp(1e-9).unwrap().cp);

            let cpt = ChannelMap::random_cp(2, 3, 2, seed, true).unwrap();
            assert!(cpt.is_cp(1e-9).unwrap().cp);
            assert!(cpt.is_trace_preserving(1e-9));

            let ep = ChannelMap::random_ep_cp(2, 2, 3, seed, true).unwrap();
            assert!(ep.is_cp(1e-9).unwrap().cp);
            assert!(ep.is_ep_in_basis(1e-12).ep);
            assert!(ep.is_trace_preserving(1e-9));

            let ep2 = ChannelMap::random_ep_cp(3, 2, 2, seed, false).unwrap();
            assert!(ep2.is_cp(1e-9).unwrap().cp);
            assert!(ep2.is_ep_in_basis(1e-12).ep);
        }
        // Same seed twice: bit-identical transfer matrices.
        let a = ChannelMap::random_cp(3, 3, 2, 99, true).unwrap();
        let b = ChannelMap::random_cp(3, 3, 2, 99, true).unwrap();
        assert_eq!(a.transfer(), b.transfer());
        let a = ChannelMap::random_ep_cp(3, 3, 2, 99, true).unwrap();
        let b = ChannelMap::random_ep_cp(3, 3, 2, 99, true).unwrap();
        assert_eq!(a.transfer(), b.transfer());
    }

    #[test]
    fn random_ep_not_cp_satisfies_both_predicates() {
        for seed in [0u64, 7, 23] {
            let phi = ChannelMap::random_ep_not_cp(2, seed).unwrap();
            assert!(phi.is_ep_in_basis(1e-12).ep);
            assert!(!phi.is_cp(1e-9).unwrap().cp);
        }
    }

    #[test]
    fn serialization_round_trip_and_validation() {
        let k = ChannelMap::random_cp(2, 3, 2, 123, true).unwrap();
        let meta = ChannelMetadata {
            family: Some("random_cp".into()),
            params: Some(serde_json::json!({"kraus": 2})),
            seed: Some(123),
        };
        let text = k.to_json(Some(meta.clone()));
        let (back, meta_back) = ChannelMap::from_json(&text).unwrap();
        assert_eq!(k.transfer(), back.transfer());
        assert_eq!(meta_back, Some(meta));

        let bad = r#"{"n": 2, "m": 2, "transfer": [[1.0, 0.0]]}"#;
        assert!(ChannelMap::from_json(bad).is_err());
        let nan = r#"{"n": 1, "m": 1, "transfer": [[null, 0.0]]}"#;
        assert!(ChannelMap::from_json(nan).is_err());
    }

    #[test]
    fn conjugated_requires_unitaries() {
        let k = ChannelMap::identity(2).unwrap();
        let not_unitary = ComplexMatrix::from_diagonal(&[1.0, 2.0]);
        assert!(k.conjugated(&not_unitary, &ComplexMatrix::identity(2)).is_err());
    }
}
