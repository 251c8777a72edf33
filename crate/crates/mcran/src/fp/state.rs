//! Optimization state: beamformers, processing-mode slacks and rate
//! auxiliaries, plus the reweighting weight set.

use num_complex::Complex64;

use crate::assoc::norm_sqr;
use crate::fp::Problem;

/// Full decision vector of one relaxed subproblem: per-user CP and local
/// beamformers, fronthaul/processing slacks, SINR auxiliaries and rates.
///
/// Beamformers exist only for the user's assigned cloud (the association is
/// realized by variable elimination, never by big-M constants), and local
/// beamformer entries are structurally zero at BSs that do not cache the
/// user's file. An instance of this type doubles as the expansion point of
/// the current outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingState {
    /// CP-processed aggregate beamformer per user, BS-major over the
    /// assigned cloud's BSs, `L` entries per BS.
    pub w: Vec<Vec<Complex64>>,
    /// Locally processed beamformer, same shape as `w`.
    pub w_tilde: Vec<Vec<Complex64>>,
    /// Fronthaul activity slack per (user, local BS slot).
    pub t: Vec<Vec<f64>>,
    /// Local-processing activity slack per (user, local BS slot).
    pub t_tilde: Vec<Vec<f64>>,
    /// Cloud-processing activity slack per user.
    pub u: Vec<f64>,
    /// SINR auxiliary per user.
    pub gamma: Vec<f64>,
    /// Rate per user in bits/s.
    pub rate: Vec<f64>,
}

impl BeamformingState {
    pub fn zeros(problem: &Problem) -> Self {
        let k_count = problem.num_users();
        let mut w = Vec::with_capacity(k_count);
        let mut t = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let slots = problem.bs_slots(k);
            w.push(vec![Complex64::new(0.0, 0.0); slots * problem.antennas()]);
            t.push(vec![0.0; slots]);
        }
        BeamformingState {
            w_tilde: w.clone(),
            t_tilde: t.clone(),
            w,
            t,
            u: vec![0.0; k_count],
            gamma: vec![0.0; k_count],
            rate: vec![0.0; k_count],
        }
    }

    /// Per-BS subvector of the CP beamformer (slot index within the cloud).
    pub fn w_bs(&self, k: usize, slot: usize, l: usize) -> &[Complex64] {
        &self.w[k][slot * l..(slot + 1) * l]
    }

    pub fn w_tilde_bs(&self, k: usize, slot: usize, l: usize) -> &[Complex64] {
        &self.w_tilde[k][slot * l..(slot + 1) * l]
    }

    /// Combined transmit vector w + w~ for user `k`.
    pub fn combined(&self, k: usize) -> Vec<Complex64> {
        self.w[k].iter().zip(&self.w_tilde[k]).map(|(a, b)| a + b).collect()
    }

    /// A user is active when its expansion-point SINR auxiliary is positive;
    /// inactive users are pinned to zero for the rest of the run.
    pub fn is_active(&self, k: usize) -> bool {
        self.gamma[k] > 0.0
    }
}

/// Reweighted-l1 weights, all in 1/W^2-free units of 1/(beam power).
#[derive(Clone, Debug)]
pub struct WeightSet {
    /// Per (user, BS slot): 1 / (delta + ||w'_{c,b,k}||^2).
    pub beta: Vec<Vec<f64>>,
    /// Per (user, BS slot): 1 / (delta + ||w~'_{c,b,k}||^2).
    pub beta_tilde: Vec<Vec<f64>>,
    /// Per user: 1 / (delta + ||w'_{c,k}||^2) over the aggregate beamformer.
    pub beta_cloud: Vec<f64>,
}

/// Weights from the expansion-point norms.
pub fn reweight(problem: &Problem, point: &BeamformingState, delta: f64) -> WeightSet {
    let l = problem.antennas();
    let k_count = problem.num_users();
    let mut beta = Vec::with_capacity(k_count);
    let mut beta_tilde = Vec::with_capacity(k_count);
    let mut beta_cloud = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let slots = problem.bs_slots(k);
        beta.push(
            (0..slots)
                .map(|s| 1.0 / (delta + norm_sqr(point.w_bs(k, s, l))))
                .collect(),
        );
        beta_tilde.push(
            (0..slots)
                .map(|s| 1.0 / (delta + norm_sqr(point.w_tilde_bs(k, s, l))))
                .collect(),
        );
        beta_cloud.push(1.0 / (delta + norm_sqr(&point.w[k])));
    }
    WeightSet { beta, beta_tilde, beta_cloud }
}

/// Processing mode of one (user, BS) link when clustering is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkMode {
    Off,
    Cp,
    Local,
}

/// A frozen serving-cluster plan: per (user, BS slot) link modes and the
/// slack constants they induce in the energy model.
#[derive(Clone, Debug)]
pub struct ClusterPlan {
    /// Per user, per BS slot of the assigned cloud.
    pub modes: Vec<Vec<LinkMode>>,
}

impl ClusterPlan {
    pub fn mode(&self, k: usize, slot: usize) -> LinkMode {
        self.modes[k][slot]
    }

    /// Serving set size of user `k`.
    pub fn cluster_size(&self, k: usize) -> usize {
        self.modes[k].iter().filter(|m| **m != LinkMode::Off).count()
    }

    pub fn fixed_t(&self, k: usize, slot: usize) -> f64 {
        if self.modes[k][slot] == LinkMode::Cp {
            1.0
        } else {
            0.0
        }
    }

    pub fn fixed_t_tilde(&self, k: usize, slot: usize) -> f64 {
        if self.modes[k][slot] == LinkMode::Local {
            1.0
        } else {
            0.0
        }
    }

    /// The cloud processes user `k` when any serving BS runs in CP mode.
    pub fn fixed_u(&self, k: usize) -> f64 {
        if self.modes[k].iter().any(|m| *m == LinkMode::Cp) {
            1.0
        } else {
            0.0
        }
    }
}
