//! Stage-1 user-to-cloud assignment: MRC-based utility evaluation, an
//! auction solver for the capacitated assignment problem, and an exact
//! enumeration oracle.

use num_complex::Complex64;

use crate::error::McranError;
use crate::netgen::NetworkInstance;

/// Benefit of serving user `k` from cloud `c`, in bits/s/W.
#[derive(Clone, Debug)]
pub struct UtilityMatrix {
    num_clouds: usize,
    num_users: usize,
    data: Vec<f64>,
}

impl UtilityMatrix {
    pub fn new(num_clouds: usize, num_users: usize) -> Self {
        UtilityMatrix { num_clouds, num_users, data: vec![0.0; num_clouds * num_users] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let num_clouds = rows.len();
        let num_users = rows.first().map_or(0, Vec::len);
        let data = rows.into_iter().flatten().collect();
        UtilityMatrix { num_clouds, num_users, data }
    }

    pub fn get(&self, c: usize, k: usize) -> f64 {
        self.data[c * self.num_users + k]
    }

    pub fn set(&mut self, c: usize, k: usize, v: f64) {
        self.data[c * self.num_users + k] = v;
    }

    pub fn num_clouds(&self) -> usize {
        self.num_clouds
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Final user-to-cloud assignment and the induced per-cloud user sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociationMap {
    pub cloud_of_user: Vec<usize>,
    pub users_of_cloud: Vec<Vec<usize>>,
}

impl AssociationMap {
    pub fn from_assignment(cloud_of_user: Vec<usize>, num_clouds: usize) -> Self {
        let mut users_of_cloud = vec![Vec::new(); num_clouds];
        for (k, &c) in cloud_of_user.iter().enumerate() {
            users_of_cloud[c].push(k);
        }
        AssociationMap { cloud_of_user, users_of_cloud }
    }

    pub fn total_utility(&self, u: &UtilityMatrix) -> f64 {
        self.cloud_of_user.iter().enumerate().map(|(k, &c)| u.get(c, k)).sum()
    }
}

/// MRC beamformers per (cloud, user): w = h / ||h||^2, so h' w = 1 exactly.
#[derive(Clone, Debug)]
pub struct MrcBeams {
    num_users: usize,
    beams: Vec<Vec<Complex64>>,
}

impl MrcBeams {
    pub fn get(&self, c: usize, k: usize) -> &[Complex64] {
        &self.beams[c * self.num_users + k]
    }
}

pub(crate) fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Aggregate MRC beamformers for every (cloud, user) pair. Locally processed
/// beamformers are not part of stage 1 and start at zero.
pub fn mrc_beamformers(instance: &NetworkInstance) -> Result<MrcBeams, McranError> {
    let c_count = instance.num_clouds();
    let k_count = instance.num_users();
    let mut beams = Vec::with_capacity(c_count * k_count);
    for c in 0..c_count {
        for k in 0..k_count {
            let h = instance.agg_channel(c, k);
            let n2 = norm_sqr(&h);
            if n2 <= 0.0 {
                return Err(McranError::DegenerateChannel { cloud: c, user: k });
            }
            beams.push(h.into_iter().map(|z| z / n2).collect());
        }
    }
    Ok(MrcBeams { num_users: k_count, beams })
}

/// Cloud with the strongest aggregate channel per user (lowest index wins
/// ties); interim context while evaluating candidate associations.
fn strongest_cloud(instance: &NetworkInstance) -> Vec<usize> {
    (0..instance.num_users())
        .map(|k| {
            let mut best = 0;
            let mut best_norm = f64::NEG_INFINITY;
            for c in 0..instance.num_clouds() {
                let n = norm_sqr(&instance.agg_channel(c, k));
                if n > best_norm {
                    best_norm = n;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn utility_with_background(
    instance: &NetworkInstance,
    beams: &MrcBeams,
    background: &[usize],
    c: usize,
    k: usize,
) -> f64 {
    let w = beams.get(c, k);
    let h_own = instance.agg_channel(c, k);
    let signal = cdot(&h_own, w).norm_sqr();
    if signal <= 0.0 {
        return 0.0;
    }
    // Everyone else transmits from their strongest cloud under raw MRC.
    let mut interference = 0.0;
    for k2 in 0..instance.num_users() {
        if k2 == k {
            continue;
        }
        let c2 = background[k2];
        let h_cross = instance.agg_channel(c2, k);
        interference += cdot(&h_cross, beams.get(c2, k2)).norm_sqr();
    }
    let sinr = signal / (instance.noise_w + interference);
    let rate = instance.params.bandwidth_hz * (1.0 + sinr).log2();
    let power = norm_sqr(w) / instance.params.eta + instance.params.p_proc_w;
    rate / power
}

/// Rate-to-power utility of associating user `k` with cloud `c`, with all
/// other users served by their strongest cloud under MRC.
pub fn association_utility(
    instance: &NetworkInstance,
    beams: &MrcBeams,
    c: usize,
    k: usize,
) -> f64 {
    let background = strongest_cloud(instance);
    utility_with_background(instance, beams, &background, c, k)
}

/// Full utility matrix over (cloud, user) pairs.
pub fn utility_matrix(instance: &NetworkInstance) -> Result<UtilityMatrix, McranError> {
    let beams = mrc_beamformers(instance)?;
    let background = strongest_cloud(instance);
    let mut u = UtilityMatrix::new(instance.num_clouds(), instance.num_users());
    for c in 0..instance.num_clouds() {
        for k in 0..instance.num_users() {
            u.set(c, k, utility_with_background(instance, &beams, &background, c, k));
        }
    }
    Ok(u)
}

const AUCTION_ROUND_GUARD: usize = 10_000;

/// Price-based auction for the capacitated assignment problem.
///
/// Synchronous rounds: every cloud with free capacity bids on its best
/// positive-margin users, a contested user goes to the highest bidder
/// (lowest cloud index on exact bid ties) and its price rises by the bid.
/// The result is within `num_users * eps` of the optimal total utility;
/// leftover users (zero margin everywhere, or freed capacity) are assigned
/// to the best cloud with spare capacity so that stage 1 always completes.
pub fn auction_assign(
    u: &UtilityMatrix,
    caps: &[usize],
    eps: f64,
) -> Result<AssociationMap, McranError> {
    let num_clouds = u.num_clouds();
    let num_users = u.num_users();
    if caps.len() != num_clouds {
        return Err(McranError::InvalidConfig("caps: one entry per cloud required".into()));
    }
    if caps.iter().any(|&c| c < 1) {
        return Err(McranError::InvalidConfig("caps: every cloud cap must be >= 1".into()));
    }
    if caps.iter().sum::<usize>() < num_users {
        return Err(McranError::InvalidConfig("caps: capacities must sum to >= num_users".into()));
    }
    if !(eps > 0.0) {
        return Err(McranError::InvalidConfig("eps_auction: must be > 0".into()));
    }

    let mut price = vec![0.0f64; num_users];
    let mut owner: Vec<Option<usize>> = vec![None; num_users];
    let mut owned_count = vec![0usize; num_clouds];

    for _round in 0..AUCTION_ROUND_GUARD {
        // (user, bidding cloud, bid level), built cloud by cloud.
        let mut bids: Vec<(usize, usize, f64)> = Vec::new();
        for c in 0..num_clouds {
            let free = caps[c] - owned_count[c];
            if free == 0 {
                continue;
            }
            // Candidates: users not already owned by this cloud, positive margin.
            let mut cands: Vec<(usize, f64)> = (0..num_users)
                .filter(|&k| owner[k] != Some(c))
                .map(|k| (k, u.get(c, k) - price[k]))
                .filter(|&(_, m)| m > 0.0)
                .collect();
            cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let take = free.min(cands.len());
            // Opportunity cost: best excluded margin, floored at the outside
            // option of staying unassigned.
            let next_margin = if cands.len() > take { cands[take].1.max(0.0) } else { 0.0 };
            for &(k, m) in &cands[..take] {
                bids.push((k, c, price[k] + (m - next_margin) + eps));
            }
        }
        if bids.is_empty() {
            break;
        }
        // Highest bid wins each contested user; exact ties go to the lowest
        // cloud index. Previous owners are displaced.
        let mut winner: Vec<Option<(usize, f64)>> = vec![None; num_users];
        for &(k, c, bid) in &bids {
            match winner[k] {
                Some((wc, wb)) if bid < wb || (bid == wb && c > wc) => {}
                _ => winner[k] = Some((c, bid)),
            }
        }
        for (k, win) in winner.iter().enumerate() {
            if let &Some((c, bid)) = win {
                if let Some(prev) = owner[k] {
                    owned_count[prev] -= 1;
                }
                owner[k] = Some(c);
                owned_count[c] += 1;
                price[k] = bid;
            }
        }
        if _round + 1 == AUCTION_ROUND_GUARD {
            return Err(McranError::IterationLimit {
                what: "auction",
                limit: AUCTION_ROUND_GUARD,
            });
        }
    }

    // Completion: every user ends up with exactly one cloud.
    let mut cloud_of_user = vec![0usize; num_users];
    for k in 0..num_users {
        match owner[k] {
            Some(c) => cloud_of_user[k] = c,
            None => {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..num_clouds {
                    if owned_count[c] < caps[c] {
                        let v = u.get(c, k);
                        if best.map_or(true, |(_, bv)| v > bv) {
                            best = Some((c, v));
                        }
                    }
                }
                let (c, _) = best.expect("caps sum to >= num_users");
                cloud_of_user[k] = c;
                owned_count[c] += 1;
            }
        }
    }
    Ok(AssociationMap::from_assignment(cloud_of_user, num_clouds))
}

const ENUMERATION_GUARD: f64 = 1.0e7;

/// Exhaustive maximum-utility assignment (ties broken lexicographically by
/// the assignment vector). Verification oracle for the auction.
pub fn exact_assign(u: &UtilityMatrix, caps: &[usize]) -> Result<AssociationMap, McranError> {
    let num_clouds = u.num_clouds();
    let num_users = u.num_users();
    let combos = (num_clouds as f64).powi(num_users as i32);
    if combos > ENUMERATION_GUARD {
        return Err(McranError::InstanceTooLarge(combos));
    }
    if caps.iter().sum::<usize>() < num_users {
        return Err(McranError::InvalidConfig("caps: capacities must sum to >= num_users".into()));
    }

    let mut best_total = f64::NEG_INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut current = vec![0usize; num_users];
    let mut load = vec![0usize; num_clouds];

    fn recurse(
        k: usize,
        u: &UtilityMatrix,
        caps: &[usize],
        current: &mut Vec<usize>,
        load: &mut Vec<usize>,
        running: f64,
        best_total: &mut f64,
        best: &mut Vec<usize>,
    ) {
        if k == u.num_users() {
            if running > *best_total {
                *best_total = running;
                *best = current.clone();
            }
            return;
        }
        for c in 0..u.num_clouds() {
            if load[c] < caps[c] {
                load[c] += 1;
                current[k] = c;
                recurse(k + 1, u, caps, current, load, running + u.get(c, k), best_total, best);
                load[c] -= 1;
            }
        }
    }

    recurse(0, u, caps, &mut current, &mut load, 0.0, &mut best_total, &mut best);
    Ok(AssociationMap::from_assignment(best, num_clouds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{generate_instance, SimConfig};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_instance(seed: u64) -> NetworkInstance {
        let cfg = SimConfig {
            num_clouds: 2,
            bs_per_cloud: vec![1, 1],
            num_users: 2,
            noise_override_dbm: Some(-77.0),
            ..SimConfig::default()
        };
        generate_instance(&cfg, seed).unwrap()
    }

    #[test]
    fn mrc_norm_and_identity() {
        let inst = tiny_instance(4);
        let beams = mrc_beamformers(&inst).unwrap();
        for c in 0..2 {
            for k in 0..2 {
                let h = inst.agg_channel(c, k);
                let w = beams.get(c, k);
                // h' w = 1 exactly by the MRC formula.
                let dot = cdot(&h, w);
                assert_relative_eq!(dot.re, 1.0, max_relative = 1e-12);
                assert_relative_eq!(dot.im, 0.0, epsilon = 1e-12);
                assert_relative_eq!(
                    norm_sqr(w),
                    1.0 / norm_sqr(&h),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn mrc_unit_channel_is_fixed_point() {
        // ||h|| = 2 gives ||w|| = 0.5; h = e1 gives w = e1.
        let h = vec![Complex64::new(2.0, 0.0)];
        let n2 = norm_sqr(&h);
        let w: Vec<Complex64> = h.iter().map(|z| z / n2).collect();
        assert_relative_eq!(norm_sqr(&w).sqrt(), 0.5);
        let e1 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let w1: Vec<Complex64> = e1.iter().map(|z| z / norm_sqr(&e1)).collect();
        assert_eq!(w1, e1);
    }

    /// Single user, single BS: U = W log2(1 + 1/sigma^2) / (||w||^2/eta + P_proc).
    #[test]
    fn utility_single_link_closed_form() {
        let cfg = SimConfig {
            num_clouds: 1,
            bs_per_cloud: vec![1],
            num_users: 1,
            noise_override_dbm: Some(20.0), // 0.1 W
            ..SimConfig::default()
        };
        let mut inst = generate_instance(&cfg, 1).unwrap();
        // Overwrite the channel with h = 2 e1 so that ||w||^2 = 0.25.
        let l = inst.antennas();
        let link = inst.channels.link_mut(0, 0);
        link[0] = Complex64::new(2.0, 0.0);
        for z in link.iter_mut().skip(1).take(l - 1) {
            *z = Complex64::new(0.0, 0.0);
        }
        let beams = mrc_beamformers(&inst).unwrap();
        let u = association_utility(&inst, &beams, 0, 0);
        let expected = 1.0e7 * (11.0f64).log2() / (0.25 / 0.25 + 0.1);
        assert_relative_eq!(u, expected, max_relative = 1e-9);
        assert!((u - 3.145e7).abs() / 3.145e7 < 1e-3);
    }

    #[test]
    fn utility_zero_beam_is_zero() {
        let inst = tiny_instance(4);
        let mut beams = mrc_beamformers(&inst).unwrap();
        for z in beams.beams[0].iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        assert_eq!(association_utility(&inst, &beams, 0, 0), 0.0);
    }

    /// Independent re-evaluation of the utility ratio on a random instance.
    #[test]
    fn utility_matches_scripted_evaluation() {
        let inst = tiny_instance(8);
        let beams = mrc_beamformers(&inst).unwrap();
        let u = utility_matrix(&inst).unwrap();

        // Scripted oracle: explicit loops, no shared helpers.
        let strongest: Vec<usize> = (0..2)
            .map(|k| {
                let n0: f64 = inst.agg_channel(0, k).iter().map(|z| z.norm_sqr()).sum();
                let n1: f64 = inst.agg_channel(1, k).iter().map(|z| z.norm_sqr()).sum();
                if n1 > n0 {
                    1
                } else {
                    0
                }
            })
            .collect();
        for c in 0..2 {
            for k in 0..2 {
                let h = inst.agg_channel(c, k);
                let w = beams.get(c, k);
                let mut sig = Complex64::new(0.0, 0.0);
                for i in 0..h.len() {
                    sig += h[i].conj() * w[i];
                }
                let k2 = 1 - k;
                let c2 = strongest[k2];
                let hx = inst.agg_channel(c2, k);
                let wx = beams.get(c2, k2);
                let mut cross = Complex64::new(0.0, 0.0);
                for i in 0..hx.len() {
                    cross += hx[i].conj() * wx[i];
                }
                let sinr = sig.norm_sqr() / (inst.noise_w + cross.norm_sqr());
                let rate = inst.params.bandwidth_hz * (1.0 + sinr).log2();
                let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum();
                let expected = rate / (wn / inst.params.eta + inst.params.p_proc_w);
                assert_relative_eq!(u.get(c, k), expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn auction_two_by_two_matches_enumeration() {
        let u = UtilityMatrix::from_rows(vec![vec![3.0, 1.0], vec![2.0, 4.0]]);
        let map = auction_assign(&u, &[1, 1], 1e-6).unwrap();
        assert_eq!(map.cloud_of_user, vec![0, 1]);
        // Brute force over the 4 complete assignments: 3+4=7 is the optimum.
        assert_relative_eq!(map.total_utility(&u), 7.0, max_relative = 1e-12);
    }

    #[test]
    fn auction_uncapacitated_is_argmax() {
        let u = UtilityMatrix::from_rows(vec![vec![3.0, 1.0, 5.0], vec![2.0, 4.0, 5.5]]);
        let map = auction_assign(&u, &[3, 3], 1e-9).unwrap();
        assert_eq!(map.cloud_of_user, vec![0, 1, 1]);
    }

    #[test]
    fn auction_exact_tie_goes_to_lowest_cloud() {
        let u = UtilityMatrix::from_rows(vec![vec![2.0], vec![2.0]]);
        let map = auction_assign(&u, &[1, 1], 1e-6).unwrap();
        assert_eq!(map.cloud_of_user, vec![0]);
    }

    #[test]
    fn exact_assign_toy_cases() {
        let u = UtilityMatrix::from_rows(vec![vec![3.0, 1.0], vec![2.0, 4.0]]);
        let map = exact_assign(&u, &[1, 1]).unwrap();
        assert_relative_eq!(map.total_utility(&u), 7.0);

        // All-zero utilities: lexicographic tie-break fills cloud 0 first.
        let z = UtilityMatrix::from_rows(vec![vec![0.0; 3], vec![0.0; 3]]);
        let map = exact_assign(&z, &[2, 2]).unwrap();
        assert_eq!(map.cloud_of_user, vec![0, 0, 1]);

        // Single cloud takes everyone.
        let s = UtilityMatrix::from_rows(vec![vec![1.0, 2.0, 3.0]]);
        let map = exact_assign(&s, &[3]).unwrap();
        assert_eq!(map.cloud_of_user, vec![0, 0, 0]);
        assert_relative_eq!(map.total_utility(&s), 6.0);
    }

    #[test]
    fn exact_assign_guards_large_instances() {
        let u = UtilityMatrix::new(10, 10);
        assert!(matches!(
            exact_assign(&u, &[10; 10]),
            Err(McranError::InstanceTooLarge(_))
        ));
    }

    fn random_utilities(rng: &mut ChaCha8Rng, c: usize, k: usize) -> UtilityMatrix {
        let rows = (0..c)
            .map(|_| (0..k).map(|_| rng.gen_range(0.0..10.0)).collect())
            .collect();
        UtilityMatrix::from_rows(rows)
    }

    #[test]
    fn auction_feasible_and_near_optimal_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut exact_matches = 0;
        let total = 100;
        let mut ran = 0;
        while ran < total {
            let c = rng.gen_range(2..=3);
            let k = rng.gen_range(2..=8);
            let u = random_utilities(&mut rng, c, k);
            let caps: Vec<usize> = (0..c).map(|_| rng.gen_range(1..=k)).collect();
            if caps.iter().sum::<usize>() < k {
                continue;
            }
            ran += 1;
            let eps = 1e-9 * u.max_value();
            let auction = auction_assign(&u, &caps, eps).unwrap();
            let exact = exact_assign(&u, &caps).unwrap();

            // Feasibility: caps respected, one cloud per user.
            for (cloud, users) in auction.users_of_cloud.iter().enumerate() {
                assert!(users.len() <= caps[cloud]);
            }
            assert_eq!(auction.cloud_of_user.len(), k);

            let got = auction.total_utility(&u);
            let opt = exact.total_utility(&u);
            assert!(
                got >= opt - k as f64 * eps - 1e-12,
                "auction {got} below optimum {opt}"
            );
            if auction.cloud_of_user == exact.cloud_of_user {
                exact_matches += 1;
            }
        }
        assert!(
            exact_matches * 100 >= total * 95,
            "only {exact_matches}/{total} exact matches"
        );
    }

    #[test]
    fn argmax_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = random_utilities(&mut rng, 3, 5);
            let mut scaled = UtilityMatrix::new(3, 5);
            for c in 0..3 {
                for k in 0..5 {
                    scaled.set(c, k, 3.7 * u.get(c, k));
                }
            }
            let caps = [2, 2, 2];
            let a = exact_assign(&u, &caps).unwrap();
            let b = exact_assign(&scaled, &caps).unwrap();
            assert_eq!(a.cloud_of_user, b.cloud_of_user);
        }
    }
}
