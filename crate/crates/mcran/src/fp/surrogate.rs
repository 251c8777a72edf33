//! Convex surrogates for the nonconvex constraints: the tangent majorant of
//! the bilinear fronthaul load, the rate tangent, and the quadratic-over-
//! linear lower bound feeding the SINR constraint.

use num_complex::Complex64;

use crate::assoc::cdot;
use crate::error::McranError;
use crate::fp::evaluate::{received_amplitude, Scope};
use crate::fp::state::BeamformingState;
use crate::fp::Problem;

/// Convex majorant of `4 * (sum_k t_k * r_k - capacity)` built around the
/// expansion point `(t', r')`: the convex square is kept and the concave
/// square is linearized.
pub fn fronthaul_surrogate(
    t: &[f64],
    rate: &[f64],
    t_point: &[f64],
    rate_point: &[f64],
    capacity: f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..t.len() {
        let d_point = t_point[i] - rate_point[i];
        let s = t[i] + rate[i];
        acc += s * s - 2.0 * d_point * (t[i] - rate[i]) + d_point * d_point;
    }
    acc - 4.0 * capacity
}

/// Tangent of the achievable-rate bound at `gamma_point`:
/// `rate/W - log2(1+gamma') - (gamma-gamma')/(ln2 (1+gamma'))`.
pub fn rate_surrogate(gamma: f64, rate: f64, gamma_point: f64, bandwidth: f64) -> f64 {
    rate / bandwidth
        - (1.0 + gamma_point).log2()
        - (gamma - gamma_point) / (std::f64::consts::LN_2 * (1.0 + gamma_point))
}

/// First-order lower bound of `||x||^2 / xi` around `(x', xi')`.
pub fn quad_over_lin_surrogate(
    x: &[Complex64],
    xi: f64,
    x_point: &[Complex64],
    xi_point: f64,
) -> Result<f64, McranError> {
    if !(xi_point > 0.0) {
        return Err(McranError::InvalidConfig(
            "quad_over_lin_surrogate: expansion denominator must be positive".into(),
        ));
    }
    let x_point_sqr: f64 = x_point.iter().map(|z| z.norm_sqr()).sum();
    Ok(2.0 * cdot(x_point, x).re / xi_point - xi / (xi_point * xi_point) * x_point_sqr)
}

/// Inner convex approximation of the SINR constraint of user `k`:
/// noise plus interference minus the linearized own-signal term. The value
/// is nonpositive exactly when the surrogate constraint holds.
pub fn sinr_surrogate(
    problem: &Problem,
    state: &BeamformingState,
    point: &BeamformingState,
    k: usize,
    scope: Scope,
) -> Result<f64, McranError> {
    let gamma_point = point.gamma[k];
    if !(gamma_point > 0.0) {
        return Err(McranError::InvalidConfig(
            "sinr_surrogate: degenerate expansion SINR".into(),
        ));
    }
    let c = problem.cloud_of(k);
    let mut value = problem.noise_w() + scope.external(k);
    for k2 in scope.users(problem) {
        if k2 == k {
            continue;
        }
        value += received_amplitude(problem, state, k2, k).norm_sqr();
    }
    // Linearized own-signal over the assigned cloud.
    let h = problem.instance.agg_channel(c, k);
    let v = state.combined(k);
    let v_point = point.combined(k);
    let s = cdot(&h, &v);
    let s_point = cdot(&h, &v_point);
    value -= 2.0 / gamma_point * (s_point.conj() * s).re;
    value += state.gamma[k] / (gamma_point * gamma_point) * s_point.norm_sqr();
    Ok(value)
}
