//! Deterministic, seeded generation of network instances and unit conversions.
//!
//! Everything downstream of [`SimConfig::derive`] works in linear SI units
//! (watts, hertz, bits per second); dB/dBm only appear at configuration
//! ingestion. Randomness is split into independent sub-streams per concern so
//! that, e.g., changing the cache placement seed path never perturbs the
//! channel realization.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cache::PlacementStrategy;
use crate::error::McranError;

/// Log-normal shadowing standard deviation in dB.
pub const SHADOW_STD_DB: f64 = 8.0;

/// Total BS count used when `bs_per_cloud` is not given explicitly.
pub const DEFAULT_TOTAL_BS: usize = 10;

/// Random sub-streams derived from the master seed.
#[derive(Clone, Copy)]
pub enum Stream {
    Positions = 1,
    Shadowing = 2,
    Fading = 3,
    Requests = 4,
    Placement = 5,
    Clustering = 6,
}

/// ChaCha stream for one concern; same master seed, disjoint streams.
pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0) / 1000.0
}

pub fn watt_to_dbm(p_w: f64) -> f64 {
    10.0 * (p_w * 1000.0).log10()
}

/// Far-field path loss in dB at distance `d_km`, clamped below at 1 m.
pub fn path_loss_db(d_km: f64) -> f64 {
    let d = d_km.max(1.0e-3);
    128.1 + 37.6 * d.log10()
}

/// Simulation configuration in human units (dBm, MHz-ish fields as given).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub area_half_width_m: f64,
    pub num_clouds: usize,
    /// Per-cloud BS counts. Empty means: split [`DEFAULT_TOTAL_BS`] across
    /// the clouds as evenly as possible (larger clusters first).
    pub bs_per_cloud: Vec<usize>,
    pub num_users: usize,
    pub antennas_per_bs: usize,
    pub p_max_dbm: f64,
    pub fronthaul_mbps: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub noise_override_dbm: Option<f64>,
    pub amplifier_efficiency: f64,
    pub p_proc_dbm: f64,
    pub p_fthl_fraction: f64,
    pub p_fixed_dbm: f64,
    pub library_files: usize,
    pub cache_size: usize,
    pub zipf_a: f64,
    pub placement_strategy: PlacementStrategy,
    pub kc_max: Option<usize>,
    pub delta: f64,
    pub eps_outer: f64,
    pub eps_inner: f64,
    pub eps_auction: Option<f64>,
    pub fixed_cluster_size: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            area_half_width_m: 400.0,
            num_clouds: 3,
            bs_per_cloud: Vec::new(),
            num_users: 28,
            antennas_per_bs: 2,
            p_max_dbm: 32.0,
            fronthaul_mbps: 40.0,
            bandwidth_hz: 1.0e7,
            noise_figure_db: 15.0,
            noise_override_dbm: None,
            amplifier_efficiency: 0.25,
            p_proc_dbm: 20.0,
            p_fthl_fraction: 0.4,
            p_fixed_dbm: 38.0,
            library_files: 100,
            cache_size: 10,
            zipf_a: 0.15,
            placement_strategy: PlacementStrategy::PopularityAware,
            kc_max: None,
            delta: 1.0e-12,
            eps_outer: 0.2,
            eps_inner: 0.03,
            eps_auction: None,
            fixed_cluster_size: 3,
            seed: 1,
        }
    }
}

impl SimConfig {
    /// Per-cloud BS counts with the even-split default applied.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        if !self.bs_per_cloud.is_empty() {
            return self.bs_per_cloud.clone();
        }
        let c = self.num_clouds.max(1);
        let base = DEFAULT_TOTAL_BS / c;
        let extra = DEFAULT_TOTAL_BS % c;
        (0..c).map(|i| base + usize::from(i < extra)).collect()
    }

    pub fn total_bs(&self) -> usize {
        self.cluster_sizes().iter().sum()
    }

    /// Validate and convert to linear-unit parameters.
    pub fn derive(&self) -> Result<Params, McranError> {
        let bad = |key: &str, why: &str| {
            Err(McranError::InvalidConfig(format!("{key}: {why}")))
        };
        if self.num_clouds < 1 {
            return bad("num_clouds", "must be >= 1");
        }
        let sizes = self.cluster_sizes();
        if sizes.len() != self.num_clouds {
            return bad("bs_per_cloud", "length must equal num_clouds");
        }
        if sizes.iter().any(|&b| b < 1) {
            return bad("bs_per_cloud", "every cluster needs >= 1 BS");
        }
        if self.num_users < 1 {
            return bad("num_users", "must be >= 1");
        }
        if self.antennas_per_bs < 1 {
            return bad("antennas_per_bs", "must be >= 1");
        }
        if self.library_files < 1 {
            return bad("library_files", "must be >= 1");
        }
        if self.cache_size > self.library_files {
            return bad("cache_size", "must be <= library_files");
        }
        if !(self.amplifier_efficiency > 0.0 && self.amplifier_efficiency <= 1.0) {
            return bad("amplifier_efficiency", "must be in (0, 1]");
        }
        if !(self.delta > 0.0) {
            return bad("delta", "must be > 0");
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth_hz", "must be > 0");
        }
        if !(self.fronthaul_mbps >= 0.0) {
            return bad("fronthaul_mbps", "must be >= 0");
        }
        if !(self.zipf_a >= 0.0) {
            return bad("zipf_a", "must be >= 0");
        }
        if self.fixed_cluster_size < 1 {
            return bad("fixed_cluster_size", "must be >= 1");
        }
        for (key, v) in [
            ("area_half_width_m", self.area_half_width_m),
            ("p_max_dbm", self.p_max_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("p_proc_dbm", self.p_proc_dbm),
            ("p_fthl_fraction", self.p_fthl_fraction),
            ("p_fixed_dbm", self.p_fixed_dbm),
        ] {
            if !v.is_finite() {
                return bad(key, "must be finite");
            }
        }
        if let Some(n) = self.noise_override_dbm {
            if !n.is_finite() {
                return bad("noise_override_dbm", "must be finite");
            }
        }
        let p_proc_w = dbm_to_watt(self.p_proc_dbm);
        Ok(Params {
            p_max_w: dbm_to_watt(self.p_max_dbm),
            noise_w: noise_power_watt(self),
            bandwidth_hz: self.bandwidth_hz,
            fronthaul_bps: self.fronthaul_mbps * 1.0e6,
            eta: self.amplifier_efficiency,
            p_proc_w,
            p_fthl_w: self.p_fthl_fraction * p_proc_w,
            p_fixed_w: dbm_to_watt(self.p_fixed_dbm),
            delta: self.delta,
            eps_outer: self.eps_outer,
            eps_inner: self.eps_inner,
        })
    }
}

/// Linear-unit parameters; the only power/rate quantities used downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub p_max_w: f64,
    pub noise_w: f64,
    pub bandwidth_hz: f64,
    pub fronthaul_bps: f64,
    pub eta: f64,
    pub p_proc_w: f64,
    pub p_fthl_w: f64,
    pub p_fixed_w: f64,
    pub delta: f64,
    pub eps_outer: f64,
    pub eps_inner: f64,
}

/// Noise power in watts: override if given, otherwise the literal
/// `-102 + 10 log10(W_hz) + n_f` dBm reading.
pub fn noise_power_watt(config: &SimConfig) -> f64 {
    match config.noise_override_dbm {
        Some(dbm) => dbm_to_watt(dbm),
        None => dbm_to_watt(-102.0 + 10.0 * config.bandwidth_hz.log10() + config.noise_figure_db),
    }
}

/// Dense complex channel tensor: one length-L vector per (BS, user) link.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor {
    num_bs: usize,
    num_users: usize,
    antennas: usize,
    data: Vec<Complex64>,
}

impl ChannelTensor {
    pub fn new(num_bs: usize, num_users: usize, antennas: usize) -> Self {
        ChannelTensor {
            num_bs,
            num_users,
            antennas,
            data: vec![Complex64::new(0.0, 0.0); num_bs * num_users * antennas],
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Channel vector from BS `b` to user `k`.
    pub fn link(&self, b: usize, k: usize) -> &[Complex64] {
        let base = (b * self.num_users + k) * self.antennas;
        &self.data[base..base + self.antennas]
    }

    pub fn link_mut(&mut self, b: usize, k: usize) -> &mut [Complex64] {
        let base = (b * self.num_users + k) * self.antennas;
        &mut self.data[base..base + self.antennas]
    }
}

/// One realized network: geometry, clusters, channels, linear parameters.
#[derive(Clone, Debug)]
pub struct NetworkInstance {
    pub bs_pos: Vec<[f64; 2]>,
    pub user_pos: Vec<[f64; 2]>,
    /// Cloud index of each BS; clusters are contiguous index blocks.
    pub cloud_of_bs: Vec<usize>,
    pub bs_of_cloud: Vec<Vec<usize>>,
    pub channels: ChannelTensor,
    pub noise_w: f64,
    pub params: Params,
}

impl NetworkInstance {
    pub fn num_bs(&self) -> usize {
        self.bs_pos.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_pos.len()
    }

    pub fn num_clouds(&self) -> usize {
        self.bs_of_cloud.len()
    }

    pub fn antennas(&self) -> usize {
        self.channels.antennas()
    }

    /// Aggregated channel from cloud `c` to user `k` (BS-major concatenation).
    pub fn agg_channel(&self, c: usize, k: usize) -> Vec<Complex64> {
        let mut h = Vec::with_capacity(self.bs_of_cloud[c].len() * self.antennas());
        for &b in &self.bs_of_cloud[c] {
            h.extend_from_slice(self.channels.link(b, k));
        }
        h
    }
}

/// Draw one channel vector for a link of length `d_km`: path loss, one
/// log-normal shadowing value, then i.i.d. circularly-symmetric complex
/// Gaussian fading with unit per-entry variance.
pub fn sample_link<R: Rng, S: Rng>(
    d_km: f64,
    antennas: usize,
    shadow_rng: &mut R,
    fading_rng: &mut S,
) -> Vec<Complex64> {
    let shadow = Normal::new(0.0, SHADOW_STD_DB).expect("valid normal");
    let gauss = Normal::new(0.0, (0.5f64).sqrt()).expect("valid normal");
    let pl_db = path_loss_db(d_km);
    let x_shadow: f64 = shadow.sample(shadow_rng);
    let amp = 10f64.powf(-(pl_db + x_shadow) / 20.0);
    (0..antennas)
        .map(|_| {
            let re: f64 = gauss.sample(fading_rng);
            let im: f64 = gauss.sample(fading_rng);
            Complex64::new(amp * re, amp * im)
        })
        .collect()
}

fn dist_m(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Generate one instance. Same `(config, seed)` always yields the identical
/// instance, bit for bit.
pub fn generate_instance(config: &SimConfig, seed: u64) -> Result<NetworkInstance, McranError> {
    let params = config.derive()?;
    let sizes = config.cluster_sizes();
    let num_bs: usize = sizes.iter().sum();
    let num_users = config.num_users;
    let l = config.antennas_per_bs;
    let a = config.area_half_width_m;

    let mut pos_rng = substream(seed, Stream::Positions);
    let point = |rng: &mut ChaCha8Rng| {
        let x: f64 = rng.gen_range(-a..=a);
        let y: f64 = rng.gen_range(-a..=a);
        [x, y]
    };
    let bs_pos: Vec<[f64; 2]> = (0..num_bs).map(|_| point(&mut pos_rng)).collect();
    let user_pos: Vec<[f64; 2]> = (0..num_users).map(|_| point(&mut pos_rng)).collect();

    // Contiguous index blocks: BSs 0..sizes[0] belong to cloud 0, and so on.
    let mut cloud_of_bs = Vec::with_capacity(num_bs);
    let mut bs_of_cloud = Vec::with_capacity(sizes.len());
    let mut next = 0;
    for (c, &sz) in sizes.iter().enumerate() {
        bs_of_cloud.push((next..next + sz).collect::<Vec<_>>());
        cloud_of_bs.extend(std::iter::repeat(c).take(sz));
        next += sz;
    }

    let mut shadow_rng = substream(seed, Stream::Shadowing);
    let mut fading_rng = substream(seed, Stream::Fading);
    let mut channels = ChannelTensor::new(num_bs, num_users, l);
    for b in 0..num_bs {
        for k in 0..num_users {
            let d_km = dist_m(bs_pos[b], user_pos[k]) / 1000.0;
            let h = sample_link(d_km, l, &mut shadow_rng, &mut fading_rng);
            channels.link_mut(b, k).copy_from_slice(&h);
        }
    }

    Ok(NetworkInstance {
        bs_pos,
        user_pos,
        cloud_of_bs,
        bs_of_cloud,
        channels,
        noise_w: params.noise_w,
        params,
    })
}
