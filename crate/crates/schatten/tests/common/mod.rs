//! Shared oracles for the integration suites. Everything here is computed
//! independently of the code paths under test: closed forms, brute-force
//! grids, and the displayed Choi form of the diagonal qubit family.
#![allow(dead_code)]

use schatten::channel::{pauli, ChannelMap, QubitDiagonalParams};
use schatten::linalg::{ComplexMatrix, SchattenExponent, C64};

/// Density matrix at Bloch angles `(theta, phi)`:
/// `ρ = (I + sinθ cosφ σ₁ + sinθ sinφ σ₂ + cosθ σ₃) / 2`.
pub fn bloch_state(theta: f64, phi: f64) -> ComplexMatrix {
    let w = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let mut rho = ComplexMatrix::identity(2);
    for (k, &wk) in w.iter().enumerate() {
        rho = &rho + &pauli(k + 1).scale_real(wk);
    }
    rho.scale_real(0.5)
}

/// Brute-force grid maximum of `‖K(ρ)‖_t` over pure states on the Bloch
/// sphere; `steps × steps` points (default oracle resolution: 100 × 100).
pub fn bloch_grid_nu(k: &ChannelMap, t: SchattenExponent, steps: usize) -> f64 {
    assert_eq!(k.in_dim(), 2, "Bloch grid oracle only covers qubit inputs");
    let mut best = f64::NEG_INFINITY;
    for a in 0..steps {
        // Interior sampling of the polar angle avoids duplicating the poles.
        let theta = std::f64::consts::PI * (a as f64 + 0.5) / steps as f64;
        for b in 0..steps {
            let phi = 2.0 * std::f64::consts::PI * b as f64 / steps as f64;
            let value = k
                .apply(&bloch_state(theta, phi))
                .unwrap()
                .schatten_norm(t);
            if value > best {
                best = value;
            }
        }
    }
    best
}

/// The Choi matrix of the diagonal qubit family written out entry by entry:
///
/// ```text
///      ⎛ 1+λ₃+t₃   t₁-it₂    0        λ₁+λ₂  ⎞
///  ½ · ⎜ t₁+it₂    1-λ₃-t₃   λ₁-λ₂    0      ⎟
///      ⎜ 0         λ₁-λ₂     1-λ₃+t₃  t₁-it₂ ⎟
///      ⎝ λ₁+λ₂     0         t₁+it₂   1+λ₃-t₃⎠
/// ```
pub fn displayed_qubit_choi(params: &QubitDiagonalParams) -> ComplexMatrix {
    let [l1, l2, l3] = params.lambda;
    let [t1, t2, t3] = params.t;
    let c = |re: f64, im: f64| C64::new(re, im);
    ComplexMatrix::new(
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
    .scale_real(0.5)
}

/// Closed-form `ν_t` of the depolarizing channel for `0 ≤ λ ≤ 1`: the output
/// spectrum on a pure state is `{λ + (1-λ)/d}` once and `{(1-λ)/d}` with
/// multiplicity `d-1`.
pub fn depolarizing_nu(d: usize, lambda: f64, t: u32) -> f64 {
    let top = lambda + (1.0 - lambda) / d as f64;
    let rest = (1.0 - lambda) / d as f64;
    (top.powi(t as i32) + (d as f64 - 1.0) * rest.powi(t as i32)).powf(1.0 / t as f64)
}
