//! State evaluation: true SINRs, relaxed and exact energy efficiency, and
//! the constraint-family feasibility checker.

use num_complex::Complex64;

use crate::assoc::{cdot, norm_sqr};
use crate::fp::state::{BeamformingState, WeightSet};
use crate::fp::surrogate::{fronthaul_surrogate, rate_surrogate};
use crate::fp::Problem;

/// Which users transmit during an evaluation. `Network` sums interference
/// over every user; `Cloud` restricts to one cloud's users and adds the
/// exchanged per-user external interference constants.
#[derive(Clone, Copy)]
pub enum Scope<'a> {
    Network,
    Cloud { cloud: usize, external: &'a [f64] },
}

impl Scope<'_> {
    pub fn users(&self, problem: &Problem) -> Vec<usize> {
        match self {
            Scope::Network => (0..problem.num_users()).collect(),
            Scope::Cloud { cloud, .. } => problem.assoc.users_of_cloud[*cloud].clone(),
        }
    }

    pub fn contains(&self, problem: &Problem, k: usize) -> bool {
        match self {
            Scope::Network => true,
            Scope::Cloud { cloud, .. } => problem.cloud_of(k) == *cloud,
        }
    }

    pub fn external(&self, k: usize) -> f64 {
        match self {
            Scope::Network => 0.0,
            Scope::Cloud { external, .. } => external[k],
        }
    }

    pub fn clouds(&self, problem: &Problem) -> Vec<usize> {
        match self {
            Scope::Network => (0..problem.num_clouds()).collect(),
            Scope::Cloud { cloud, .. } => vec![*cloud],
        }
    }
}

/// Complex amplitude received at user `at` from the transmission intended
/// for user `from` (through `from`'s assigned cloud).
pub fn received_amplitude(
    problem: &Problem,
    state: &BeamformingState,
    from: usize,
    at: usize,
) -> Complex64 {
    let c = problem.cloud_of(from);
    let h = problem.instance.agg_channel(c, at);
    let v = state.combined(from);
    cdot(&h, &v)
}

/// True SINR of user `k` under the current beamformers.
pub fn true_sinr(problem: &Problem, state: &BeamformingState, k: usize, scope: Scope) -> f64 {
    let signal = received_amplitude(problem, state, k, k).norm_sqr();
    if signal <= 0.0 {
        return 0.0;
    }
    let mut denom = problem.noise_w() + scope.external(k);
    for k2 in scope.users(problem) {
        if k2 != k {
            denom += received_amplitude(problem, state, k2, k).norm_sqr();
        }
    }
    signal / denom
}

/// Left-hand side of the exact SINR constraint
/// `noise + interference - |h' v|^2 / gamma <= 0` (zero beams with zero
/// gamma count as satisfied).
pub fn exact_sinr_constraint_value(
    problem: &Problem,
    state: &BeamformingState,
    k: usize,
    scope: Scope,
) -> f64 {
    let mut value = problem.noise_w() + scope.external(k);
    for k2 in scope.users(problem) {
        if k2 != k {
            value += received_amplitude(problem, state, k2, k).norm_sqr();
        }
    }
    let signal = received_amplitude(problem, state, k, k).norm_sqr();
    if state.gamma[k] > 0.0 {
        value -= signal / state.gamma[k];
    } else if signal > 0.0 {
        value = f64::NEG_INFINITY; // gamma = 0 with live signal: no constraint
    } else {
        value = 0.0; // dead link, gamma pinned to zero
    }
    value
}

/// Numerator, denominator and ratio of the relaxed per-cloud energy
/// efficiency, evaluated from the state's slacks and rates.
#[derive(Clone, Debug)]
pub struct RelaxedEnergy {
    /// Sum rate per cloud in bits/s.
    pub g4: Vec<f64>,
    /// Modeled power per cloud in watts.
    pub g5: Vec<f64>,
    /// Ratio per cloud in bits/J.
    pub f3: Vec<f64>,
}

impl RelaxedEnergy {
    pub fn total_f3(&self) -> f64 {
        self.f3.iter().sum()
    }
}

pub fn relaxed_ee(problem: &Problem, state: &BeamformingState) -> RelaxedEnergy {
    let p = problem.params();
    let c_count = problem.num_clouds();
    let mut g4 = vec![0.0; c_count];
    let mut g5 = vec![p.p_fixed_w; c_count];
    for k in 0..problem.num_users() {
        let c = problem.cloud_of(k);
        g4[c] += state.rate[k];
        g5[c] += state.t[k].iter().sum::<f64>() * p.p_fthl_w;
        g5[c] += state.t_tilde[k].iter().sum::<f64>() * p.p_proc_w;
        g5[c] += state.u[k] * p.p_proc_w;
        g5[c] += (norm_sqr(&state.w[k]) + norm_sqr(&state.w_tilde[k])) / p.eta;
    }
    let f3 = g4.iter().zip(&g5).map(|(n, d)| n / d).collect();
    RelaxedEnergy { g4, g5, f3 }
}

/// Exact network metrics recomputed from true SINRs with the indicator
/// power model.
#[derive(Clone, Debug)]
pub struct ExactEnergy {
    pub ee_per_cloud: Vec<f64>,
    pub ee_total: f64,
    pub sum_rate_bps: f64,
    pub rates_bps: Vec<f64>,
    /// Amplifier-side transmit power per BS (Eq.-of-state: sum of beam
    /// norms over the amplifier efficiency).
    pub bs_power_w: Vec<f64>,
    /// Fronthaul load per BS in bits/s.
    pub bs_fronthaul_bps: Vec<f64>,
}

/// Evaluate the exact energy efficiency: beams with norm at most `delta`
/// are treated as off, rates come from true SINRs, and every cost term is
/// an indicator, never a relaxed slack.
pub fn exact_ee(problem: &Problem, state: &BeamformingState) -> ExactEnergy {
    let p = problem.params();
    let l = problem.antennas();
    let delta = p.delta;

    // Zero-out sub-threshold beams on a copy.
    let mut cleaned = state.clone();
    for k in 0..problem.num_users() {
        for slot in 0..problem.bs_slots(k) {
            if norm_sqr(cleaned.w_bs(k, slot, l)) <= delta {
                for z in &mut cleaned.w[k][slot * l..(slot + 1) * l] {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            if norm_sqr(cleaned.w_tilde_bs(k, slot, l)) <= delta {
                for z in &mut cleaned.w_tilde[k][slot * l..(slot + 1) * l] {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    let k_count = problem.num_users();
    let mut rates = vec![0.0; k_count];
    for k in 0..k_count {
        let sinr = true_sinr(problem, &cleaned, k, Scope::Network);
        rates[k] = p.bandwidth_hz * (1.0 + sinr).log2();
    }

    let c_count = problem.num_clouds();
    let b_count = problem.instance.num_bs();
    let mut numerator = vec![0.0; c_count];
    let mut denominator = vec![p.p_fixed_w; c_count];
    let mut bs_power = vec![0.0; b_count];
    let mut bs_fronthaul = vec![0.0; b_count];
    for k in 0..k_count {
        let c = problem.cloud_of(k);
        numerator[c] += rates[k];
        for (slot, &b) in problem.bs_list(k).iter().enumerate() {
            let wn = norm_sqr(cleaned.w_bs(k, slot, l));
            let wtn = norm_sqr(cleaned.w_tilde_bs(k, slot, l));
            bs_power[b] += (wn + wtn) / p.eta;
            denominator[c] += (wn + wtn) / p.eta;
            if wn > 0.0 {
                denominator[c] += p.p_fthl_w;
                bs_fronthaul[b] += rates[k];
            }
            if wtn > 0.0 {
                denominator[c] += p.p_proc_w;
                if !problem.is_caching(k, slot) {
                    bs_fronthaul[b] += rates[k];
                }
            }
        }
        if norm_sqr(&cleaned.w[k]) > 0.0 {
            denominator[c] += p.p_proc_w;
        }
    }

    let ee_per_cloud: Vec<f64> =
        numerator.iter().zip(&denominator).map(|(n, d)| n / d).collect();
    ExactEnergy {
        ee_total: ee_per_cloud.iter().sum(),
        ee_per_cloud,
        sum_rate_bps: rates.iter().sum(),
        rates_bps: rates,
        bs_power_w: bs_power,
        bs_fronthaul_bps: bs_fronthaul,
    }
}

/// One constraint family of the feasibility report.
#[derive(Clone, Debug)]
pub struct FamilyReport {
    pub name: &'static str,
    /// Worst violation in the family's natural units (<= 0 means feasible).
    pub worst_raw: f64,
    /// Worst violation relative to the constraint's own magnitude.
    pub worst_relative: f64,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub families: Vec<FamilyReport>,
}

impl FeasibilityReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.families.iter().all(|f| f.worst_relative <= tol)
    }

    pub fn worst_relative(&self) -> f64 {
        self.families.iter().map(|f| f.worst_relative).fold(0.0, f64::max)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.name == name)
    }
}

/// Check every constraint family of the convexified problem at `state`,
/// with surrogates expanded around `point` under `weights`.
pub fn check_feasibility(
    problem: &Problem,
    state: &BeamformingState,
    point: &BeamformingState,
    weights: &WeightSet,
    scope: Scope,
) -> FeasibilityReport {
    let p = problem.params();
    let l = problem.antennas();
    let w_hz = p.bandwidth_hz;
    let users: Vec<usize> = scope.users(problem);
    let mut families = Vec::new();
    let mut push = |name, worst_raw: f64, scale: f64| {
        families.push(FamilyReport { name, worst_raw, worst_relative: worst_raw / scale });
    };

    // Per-BS amplifier power.
    let mut worst_power = f64::NEG_INFINITY;
    for c in scope.clouds(problem) {
        for (slot, _b) in problem.instance.bs_of_cloud[c].iter().enumerate() {
            let mut total = 0.0;
            for &k in &problem.assoc.users_of_cloud[c] {
                total += norm_sqr(state.w_bs(k, slot, l)) + norm_sqr(state.w_tilde_bs(k, slot, l));
            }
            worst_power = worst_power.max(total / p.eta - p.p_max_w);
        }
    }
    push("power", worst_power, p.p_max_w);

    // Weighted exclusivity and the three slack inequalities.
    let (mut excl, mut s_cp, mut s_local, mut s_cloud) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &k in &users {
        let mut cloud_sum = 0.0;
        for slot in 0..problem.bs_slots(k) {
            let wn = norm_sqr(state.w_bs(k, slot, l));
            let wtn = norm_sqr(state.w_tilde_bs(k, slot, l));
            let b = weights.beta[k][slot];
            let bt = weights.beta_tilde[k][slot];
            excl = excl.max(b * wn + bt * wtn - 1.0);
            s_cp = s_cp.max(b * wn - state.t[k][slot]);
            s_local = s_local.max(bt * wtn - state.t_tilde[k][slot]);
            cloud_sum += b * wn;
        }
        s_cloud = s_cloud.max(cloud_sum - state.u[k]);
    }
    push("exclusivity", excl, 1.0);
    push("slack_cp", s_cp, 1.0);
    push("slack_local", s_local, 1.0);
    push("slack_cloud", s_cloud, 1.0);

    // Fronthaul surrogate per BS, in bandwidth-normalized units.
    let cap_norm = p.fronthaul_bps / w_hz;
    let mut worst_fh = f64::NEG_INFINITY;
    for c in scope.clouds(problem) {
        let cloud_users = &problem.assoc.users_of_cloud[c];
        for slot in 0..problem.instance.bs_of_cloud[c].len() {
            let t: Vec<f64> = cloud_users.iter().map(|&k| state.t[k][slot]).collect();
            let r: Vec<f64> = cloud_users.iter().map(|&k| state.rate[k] / w_hz).collect();
            let tp: Vec<f64> = cloud_users.iter().map(|&k| point.t[k][slot]).collect();
            let rp: Vec<f64> = cloud_users.iter().map(|&k| point.rate[k] / w_hz).collect();
            worst_fh = worst_fh.max(fronthaul_surrogate(&t, &r, &tp, &rp, cap_norm));
        }
    }
    push("fronthaul_surrogate", worst_fh, 1.0 + 4.0 * cap_norm);

    // Rate tangent per user.
    let mut worst_rate = f64::NEG_INFINITY;
    for &k in &users {
        worst_rate =
            worst_rate.max(rate_surrogate(state.gamma[k], state.rate[k], point.gamma[k], w_hz));
    }
    push("rate_surrogate", worst_rate, 1.0);

    // SINR surrogate per active user, relative to its own term magnitudes.
    let mut worst_sinr = f64::NEG_INFINITY;
    for &k in &users {
        if !point.is_active(k) {
            continue;
        }
        let g = crate::fp::surrogate::sinr_surrogate(problem, state, point, k, scope)
            .expect("active expansion point");
        let mut scale = problem.noise_w() + scope.external(k);
        for &k2 in &users {
            if k2 != k {
                scale += received_amplitude(problem, state, k2, k).norm_sqr();
            }
        }
        let gp = point.gamma[k];
        let h = problem.instance.agg_channel(problem.cloud_of(k), k);
        let s_point = cdot(&h, &point.combined(k));
        let s = cdot(&h, &state.combined(k));
        scale += (2.0 / gp * (s_point.conj() * s).re).abs();
        scale += state.gamma[k] / (gp * gp) * s_point.norm_sqr();
        worst_sinr = worst_sinr.max(g / scale);
    }
    // Already relative; report raw = relative here.
    push("sinr_surrogate", worst_sinr, 1.0);

    // Nonnegativity of slacks and auxiliaries.
    let mut worst_nn = f64::NEG_INFINITY;
    for &k in &users {
        for slot in 0..problem.bs_slots(k) {
            worst_nn = worst_nn.max(-state.t[k][slot]).max(-state.t_tilde[k][slot]);
        }
        worst_nn = worst_nn.max(-state.u[k]).max(-state.gamma[k]).max(-state.rate[k]);
    }
    push("nonnegativity", worst_nn, 1.0);

    FeasibilityReport { families }
}
