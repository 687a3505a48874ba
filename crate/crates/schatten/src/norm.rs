//! Induced `p→q` norms and maximal output purity, estimated by seeded
//! multi-restart ascent, together with the block-norm machinery used by the
//! multiplicativity experiments.
//!
//! For a map `K: M_n → M_m`,
//!
//! - `p2q_norm` estimates `‖K‖_{p→q} = sup ‖K(A)‖_q / ‖A‖_p` over nonzero
//!   complex `A`, optimizing over unit-`p`-norm inputs (the ratio is scale
//!   invariant);
//! - `nu` estimates `ν_t(K) = sup ‖K(ρ)‖_t` over density matrices `ρ`. The
//!   search runs over pure states only: `ρ ↦ ‖K(ρ)‖_t` is convex, so the
//!   supremum over the convex body of states is attained at its extreme
//!   points, the rank-one projectors.
//!
//! Both optimizers return *certified lower bounds*: the reported value is
//! reproduced by re-evaluating the objective at the returned maximizer, and
//! `restarts_agreeing` counts how many independent restarts reached it. No
//! global-optimality claim is made; the special case `p = q = 2` is computed
//! exactly as the top singular value of the transfer matrix and cross-checked
//! against the optimizer.
//!
//! The local method is gradient ascent with central-difference gradients
//! (step `1e-6`) and backtracking line search; a coordinate pattern search
//! takes over when the line search stalls (Schatten norms are not smooth at
//! spectral degeneracies).

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelMap;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, SchattenExponent, C64};

/// Finite-difference step for numerical gradients.
const FD_STEP: f64 = 1e-6;

/// Two restart values are considered to agree when they differ by at most
/// this much (relative to the larger scale of the value and 1).
const AGREEMENT_TOL: f64 = 1e-6;

/// Restart and termination control for the norm optimizers. Behavior is
/// fully determined by `seed`: restart `i` draws its initial point from an
/// independent substream, so results are reproducible and increasing
/// `restarts` never discards earlier starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tolerance: f64,
    pub value_tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 500,
            step_tolerance: 1e-8,
            value_tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::arg("restarts", "need at least one restart"));
        }
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters", "need at least one iteration"));
        }
        if !(self.step_tolerance > 0.0) || !(self.value_tolerance > 0.0) {
            return Err(Error::arg("tolerance", "tolerances must be positive"));
        }
        Ok(())
    }

    /// Same configuration with `factor` times the restarts.
    pub fn with_restart_factor(&self, factor: usize) -> Self {
        Self {
            restarts: self.restarts.saturating_mul(factor).max(1),
            ..self.clone()
        }
    }
}

/// An optimized norm value together with the input achieving it.
///
/// `value` is a lower bound on the supremum; re-evaluating the objective at
/// `maximizer` reproduces it within the configured value tolerance.
/// `converged` reports whether the best restart reached a stationary point
/// rather than the iteration cap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    /// Unit-`p`-norm input matrix, or a unit state vector (`n × 1`) for `ν`.
    pub maximizer: ComplexMatrix,
    pub restarts_agreeing: usize,
    pub converged: bool,
}

impl NormResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("NormResult serialization cannot fail")
    }
}

/// Matrix of block norms `‖A_ij‖_p` for an `n×n` grid of blocks; symmetric
/// when the underlying matrix is Hermitian (each block norm equals its
/// adjoint's).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockNormMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl BlockNormMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `‖α‖₂ = (Σ_ij α_ij²)^{1/2}` of the block-norm matrix itself.
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, self.n, |i, j| C64::new(self.get(i, j), 0.0))
    }
}

/// Result of the block-norm comparison `Σ_ij ‖A_ij‖_p² ≤ ‖A‖_p²`
/// (valid for `1 ≤ p ≤ 2`).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BhatiaKittanehCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The contraction extracted from an off-diagonal block of a positive
/// semidefinite block matrix: `A_ij = A_ii^{1/2} R A_jj^{1/2}` with
/// `‖R‖_∞ ≤ 1` on the supports of the diagonal blocks.
#[derive(Clone, Debug)]
pub struct ContractionDecomposition {
    pub r: ComplexMatrix,
    pub inf_norm: f64,
}

// ---------------------------------------------------------------------------
// Optimizer engine
// ---------------------------------------------------------------------------

struct RestartOutcome {
    value: f64,
    point: Vec<f64>,
    converged: bool,
}

fn normalize_params(mut x: Vec<f64>) -> Vec<f64> {
    let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut x {
            *v /= norm;
        }
    }
    x
}

fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + FD_STEP;
        let fp = f(&probe);
        probe[i] = orig - FD_STEP;
        let fm = f(&probe);
        probe[i] = orig;
        g[i] = (fp - fm) / (2.0 * FD_STEP);
    }
    g
}

/// Coordinate pattern search, the derivative-free fallback for points where
/// the line search stalls. Halves the step until it falls below `floor`.
fn pattern_search(
    f: &dyn Fn(&[f64]) -> f64,
    mut x: Vec<f64>,
    mut fx: f64,
    floor: f64,
) -> (Vec<f64>, f64) {
    let mut delta = 1e-3;
    let mut sweeps = 0usize;
    while delta >= floor && sweeps < 200 {
        sweeps += 1;
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0f64, -1.0] {
                let mut cand = x.clone();
                cand[i] += sign * delta;
                let cand = normalize_params(cand);
                let fc = f(&cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    (x, fx)
}

fn ascend(f: &dyn Fn(&[f64]) -> f64, x0: Vec<f64>, cfg: &OptimizerConfig) -> RestartOutcome {
    let mut x = normalize_params(x0);
    let mut fx = f(&x);
    let mut alpha = 0.1f64;
    let mut stall = 0usize;
    let mut converged = false;

    for _ in 0..cfg.max_iters {
        let g = gradient(f, &x);
        let g_inf = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        // The gradient is only known to finite-difference accuracy, so the
        // stationarity threshold cannot be tighter than that noise floor.
        let stationarity_tol = cfg.step_tolerance.max(1e-7 * fx.abs().max(1.0));
        if g_inf <= stationarity_tol {
            converged = true;
            break;
        }
        let g_sq: f64 = g.iter().map(|v| v * v).sum();

        alpha = (alpha * 2.0).min(1e3);
        let mut accepted = false;
        while alpha >= 1e-14 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + alpha * gi).collect();
            let cand = normalize_params(cand);
            let fc = f(&cand);
            if fc > fx + 1e-4 * alpha * g_sq {
                let improvement = fc - fx;
                x = cand;
                fx = fc;
                accepted = true;
                if improvement <= cfg.value_tolerance * fx.abs().max(1.0) {
                    stall += 1;
                    if stall >= 2 {
                        converged = true;
                    }
                } else {
                    stall = 0;
                }
                break;
            }
            alpha *= 0.5;
        }
        if converged {
            break;
        }
        if !accepted {
            let (nx, nfx) = pattern_search(f, x.clone(), fx, cfg.step_tolerance);
            let gained = nfx > fx + cfg.value_tolerance * fx.abs().max(1.0);
            x = nx;
            fx = nfx;
            if gained {
                alpha = 1e-3;
                stall = 0;
            } else {
                // No ascent direction left at step-tolerance resolution.
                converged = true;
                break;
            }
        }
    }
    RestartOutcome {
        value: fx,
        point: x,
        converged,
    }
}

/// Runs `extra_starts` followed by `cfg.restarts` seeded restarts and returns
/// all outcomes. Restart `i` draws from ChaCha stream `i + 1` of `cfg.seed`.
fn run_restarts(
    f: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    cfg: &OptimizerConfig,
    extra_starts: &[Vec<f64>],
) -> Vec<RestartOutcome> {
    let mut outcomes = Vec::with_capacity(extra_starts.len() + cfg.restarts);
    for start in extra_starts {
        outcomes.push(ascend(f, start.clone(), cfg));
    }
    for i in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64 + 1);
        let x0: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        outcomes.push(ascend(f, x0, cfg));
    }
    outcomes
}

fn summarize(outcomes: &[RestartOutcome]) -> (usize, usize) {
    // Index of the best value (earliest wins ties) and the agreement count.
    let mut best = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    let bv = outcomes[best].value;
    let agreeing = outcomes
        .iter()
        .filter(|o| (o.value - bv).abs() <= AGREEMENT_TOL * bv.abs().max(1.0))
        .count();
    (best, agreeing)
}

// ---------------------------------------------------------------------------
// Parameterizations
// ---------------------------------------------------------------------------

fn params_to_state(x: &[f64], n: usize) -> Option<ComplexMatrix> {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if norm_sq < 1e-24 {
        return None;
    }
    let norm = norm_sq.sqrt();
    Some(ComplexMatrix::from_fn(n, 1, |i, _| {
        C64::new(x[i] / norm, x[n + i] / norm)
    }))
}

fn state_to_params(psi: &ComplexMatrix) -> Vec<f64> {
    let n = psi.rows();
    let mut x = vec![0.0; 2 * n];
    for i in 0..n {
        let z = psi.get(i, 0);
        x[i] = z.re;
        x[n + i] = z.im;
    }
    x
}

fn params_to_matrix(x: &[f64], n: usize) -> ComplexMatrix {
    let nn = n * n;
    ComplexMatrix::from_fn(n, n, |i, j| {
        // Column-major packing to match vec().
        let idx = j * n + i;
        C64::new(x[idx], x[nn + idx])
    })
}

fn matrix_to_params(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let nn = n * n;
    let mut x = vec![0.0; 2 * nn];
    for (idx, z) in a.vec_col().iter().enumerate() {
        x[idx] = z.re;
        x[nn + idx] = z.im;
    }
    x
}

// ---------------------------------------------------------------------------
// Public norm functionals
// ---------------------------------------------------------------------------

/// `‖K(ψψ†)‖_t` for a (not necessarily normalized) state vector `ψ`.
pub fn evaluate_output_norm(
    k: &ChannelMap,
    state: &ComplexMatrix,
    t: SchattenExponent,
) -> Result<f64> {
    if state.rows() != k.in_dim() || state.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "state must be {}x1, got {}x{}",
            k.in_dim(),
            state.rows(),
            state.cols()
        )));
    }
    let norm = state.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::arg("state", "state vector must be nonzero"));
    }
    let psi = state.scale_real(1.0 / norm);
    let rho = &psi * &psi.adjoint();
    Ok(k.apply(&rho)?.schatten_norm(t))
}

/// `‖K(A)‖_q / ‖A‖_p` for a nonzero input `A`.
pub fn evaluate_p2q_ratio(
    k: &ChannelMap,
    a: &ComplexMatrix,
    p: SchattenExponent,
    q: SchattenExponent,
) -> Result<f64> {
    let denom = a.schatten_norm(p);
    if denom == 0.0 {
        return Err(Error::arg("a", "input must be nonzero"));
    }
    Ok(k.apply(a)?.schatten_norm(q) / denom)
}

fn nu_impl(
    k: &ChannelMap,
    t: SchattenExponent,
    cfg: &OptimizerConfig,
    extra_starts: &[ComplexMatrix],
) -> Result<NormResult> {
    cfg.validate()?;
    let n = k.in_dim();
    let f = move |x: &[f64]| -> f64 {
        match params_to_state(x, n) {
            None => 0.0,
            Some(psi) => {
                let rho = &psi * &psi.adjoint();
                k.apply(&rho)
                    .expect("state dimension fixed by parameterization")
                    .schatten_norm(t)
            }
        }
    };
    let mut starts = Vec::with_capacity(extra_starts.len());
    for s in extra_starts {
        if s.rows() != n || s.cols() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "start must be {n}x1, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        starts.push(state_to_params(s));
    }
    let outcomes = run_restarts(&f, 2 * n, cfg, &starts);
    let (best, agreeing) = summarize(&outcomes);
    let maximizer = params_to_state(&outcomes[best].point, n)
        .ok_or_else(|| Error::arg("state", "optimizer degenerated to the zero vector"))?;
    Ok(NormResult {
        value: outcomes[best].value,
        maximizer,
        restarts_agreeing: agreeing,
        converged: outcomes[best].converged,
    })
}

/// Maximal output purity `ν_t(K) = sup { ‖K(ρ)‖_t : ρ ≥ 0, Tr ρ = 1 }`,
/// optimized over pure states.
pub fn nu(k: &ChannelMap, t: SchattenExponent, cfg: &OptimizerConfig) -> Result<NormResult> {
    nu_impl(k, t, cfg, &[])
}

/// [`nu`] with additional deterministic initial states (each an `n × 1`
/// vector), tried before the seeded restarts. Used to inject product
/// witnesses in the multiplicativity checks.
pub fn nu_with_starts(
    k: &ChannelMap,
    t: SchattenExponent,
    cfg: &OptimizerConfig,
    starts: &[ComplexMatrix],
) -> Result<NormResult> {
    nu_impl(k, t, cfg, starts)
}

fn optimize_p2q_impl(
    k: &ChannelMap,
    p: SchattenExponent,
    q: SchattenExponent,
    cfg: &OptimizerConfig,
    extra_starts: &[ComplexMatrix],
) -> Result<NormResult> {
    cfg.validate()?;
    let n = k.in_dim();
    let f = move |x: &[f64]| -> f64 {
        let a = params_to_matrix(x, n);
        let denom = a.schatten_norm(p);
        if denom < 1e-12 {
            return 0.0;
        }
        let a = a.scale_real(1.0 / denom);
        k.apply(&a)
            .expect("input dimension fixed by parameterization")
            .schatten_norm(q)
    };
    let mut starts = Vec::with_capacity(extra_starts.len());
    for s in extra_starts {
        if s.rows() != n || s.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "start must be {n}x{n}, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        starts.push(matrix_to_params(s));
    }
    let outcomes = run_restarts(&f, 2 * n * n, cfg, &starts);
    let (best, agreeing) = summarize(&outcomes);
    let a = params_to_matrix(&outcomes[best].point, n);
    let denom = a.schatten_norm(p);
    if denom == 0.0 {
        return Err(Error::arg("a", "optimizer degenerated to the zero matrix"));
    }
    Ok(NormResult {
        value: outcomes[best].value,
        maximizer: a.scale_real(1.0 / denom),
        restarts_agreeing: agreeing,
        converged: outcomes[best].converged,
    })
}

/// The optimizer path of [`p2q_norm`] without the exact `2→2` shortcut;
/// exposed so the exact case can be cross-validated independently.
pub fn optimize_p2q_norm(
    k: &ChannelMap,
    p: SchattenExponent,
    q: SchattenExponent,
    cfg: &OptimizerConfig,
) -> Result<NormResult> {
    optimize_p2q_impl(k, p, q, cfg, &[])
}

fn exact_2_to_2(k: &ChannelMap) -> (f64, ComplexMatrix) {
    let svd = k.transfer().inner().clone().svd(true, true);
    let mut idx = 0usize;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > svd.singular_values[idx] {
            idx = i;
        }
    }
    let smax = svd.singular_values[idx];
    let v_t = svd.v_t.expect("right singular vectors requested");
    let n = k.in_dim();
    let v: Vec<C64> = (0..n * n).map(|i| v_t[(idx, i)].conj()).collect();
    let maximizer = ComplexMatrix::unvec(n, n, &v).expect("dimension matches transfer");
    (smax, maximizer)
}

fn p2q_impl(
    k: &ChannelMap,
    p: SchattenExponent,
    q: SchattenExponent,
    cfg: &OptimizerConfig,
    extra_starts: &[ComplexMatrix],
) -> Result<NormResult> {
    // Schatten-2 on both sides is the Euclidean norm of the vectorized input
    // and output, so the supremum is the top singular value of the transfer
    // matrix. Compute it exactly and use the optimizer as a cross-check.
    if p.value() == 2.0 && q.value() == 2.0 {
        cfg.validate()?;
        let (value, maximizer) = exact_2_to_2(k);
        let opt = optimize_p2q_impl(k, p, q, cfg, extra_starts)?;
        let agreeing = if (opt.value - value).abs() <= AGREEMENT_TOL * value.max(1.0) {
            opt.restarts_agreeing
        } else {
            0
        };
        return Ok(NormResult {
            value,
            maximizer,
            restarts_agreeing: agreeing,
            converged: true,
        });
    }
    optimize_p2q_impl(k, p, q, cfg, extra_starts)
}

/// The induced norm `‖K‖_{p→q} = sup_{A ≠ 0} ‖K(A)‖_q / ‖A‖_p`.
///
/// Returns a certified lower bound (see the module docs); `p = q = 2` is
/// computed exactly from the transfer-matrix singular values.
pub fn p2q_norm(
    k: &ChannelMap,
    p: SchattenExponent,
    q: SchattenExponent,
    cfg: &OptimizerConfig,
) -> Result<NormResult> {
    p2q_impl(k, p, q, cfg, &[])
}

/// [`p2q_norm`] with additional deterministic initial inputs (each `n × n`).
pub fn p2q_norm_with_starts(
    k: &ChannelMap,
    p: SchattenExponent,
    q: SchattenExponent,
    cfg: &OptimizerConfig,
    starts: &[ComplexMatrix],
) -> Result<NormResult> {
    p2q_impl(k, p, q, cfg, starts)
}

// ---------------------------------------------------------------------------
// Block-norm machinery
// ---------------------------------------------------------------------------

/// The `n×n` matrix of block norms `α_ij = ‖A_ij‖_p` of an `nm×nm` matrix.
pub fn block_norm_matrix(
    a: &ComplexMatrix,
    n: usize,
    m: usize,
    p: SchattenExponent,
) -> Result<BlockNormMatrix> {
    let grid = a.blocks(n, m)?;
    let mut entries = Vec::with_capacity(n * n);
    for row in &grid {
        for b in row {
            entries.push(b.schatten_norm(p));
        }
    }
    Ok(BlockNormMatrix { n, entries })
}

/// Checks `Σ_ij ‖A_ij‖_p² ≤ ‖A‖_p²` for `1 ≤ p ≤ 2` on the `n×n` grid of
/// `m×m` blocks of `A`.
pub fn bhatia_kittaneh_check(
    a: &ComplexMatrix,
    n: usize,
    m: usize,
    p: SchattenExponent,
) -> Result<BhatiaKittanehCheck> {
    if p.is_infinite() || p.value() > 2.0 {
        return Err(Error::arg(
            "p",
            format!("the block-norm inequality is only claimed for 1 <= p <= 2, got {p}"),
        ));
    }
    let alpha = block_norm_matrix(a, n, m, p)?;
    let lhs = alpha.frobenius().powi(2);
    let rhs = a.schatten_norm(p).powi(2);
    Ok(BhatiaKittanehCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9 * rhs,
    })
}

/// Extracts the contraction `R_ij` with
/// `A_ij = A_ii^{1/2} R_ij A_jj^{1/2}` from a positive semidefinite block
/// matrix, using spectral pseudo-inverse square roots of the diagonal blocks.
pub fn contraction_decomposition(
    a: &ComplexMatrix,
    n: usize,
    m: usize,
    i: usize,
    j: usize,
) -> Result<ContractionDecomposition> {
    if i == j || i >= n || j >= n {
        return Err(Error::arg(
            "indices",
            format!("need distinct block indices below {n}, got ({i}, {j})"),
        ));
    }
    let eig = a.hermitian_eigensystem()?;
    let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let lmin = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if lmin < -1e-9 * lmax.abs().max(1.0) {
        return Err(Error::NotPositiveSemidefinite(lmin));
    }
    let grid = a.blocks(n, m)?;
    let pinv_i = grid[i][i].psd_pinv_sqrt(1e-12)?;
    let pinv_j = grid[j][j].psd_pinv_sqrt(1e-12)?;
    let r = &(&pinv_i * &grid[i][j]) * &pinv_j;
    let inf_norm = r.operator_norm();
    Ok(ContractionDecomposition { r, inf_norm })
}
