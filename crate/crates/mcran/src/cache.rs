//! Zipf content popularity, cache placement strategies, user request
//! sampling, and cache-hit bookkeeping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::McranError;
use crate::netgen::{substream, Stream};

/// How the per-BS caches are filled during the placement phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementStrategy {
    /// Every BS caches the most popular files.
    Conservative,
    /// Disjoint round-robin blocks in popularity order, wrapping after every
    /// file has been placed once.
    MinimumRedundancy,
    /// Per BS, uniform draws without replacement.
    Random,
    /// Per BS, draws without replacement weighted by popularity.
    PopularityAware,
    /// Empty caches (the no-cache baseline).
    None,
}

impl std::fmt::Display for PlacementStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PlacementStrategy::Conservative => "conservative",
            PlacementStrategy::MinimumRedundancy => "minimum_redundancy",
            PlacementStrategy::Random => "random",
            PlacementStrategy::PopularityAware => "popularity_aware",
            PlacementStrategy::None => "none",
        };
        f.write_str(s)
    }
}

/// File request probabilities, descending by file index.
#[derive(Clone, Debug)]
pub struct Popularity {
    pub probabilities: Vec<f64>,
}

impl Popularity {
    pub fn num_files(&self) -> usize {
        self.probabilities.len()
    }
}

/// Zipf popularity: p_f proportional to f^(-a), f = 1..=num_files.
pub fn zipf_popularity(num_files: usize, a: f64) -> Popularity {
    assert!(num_files >= 1, "need at least one file");
    assert!(a >= 0.0, "zipf exponent must be nonnegative");
    let mut weights: Vec<f64> = (1..=num_files).map(|f| (f as f64).powf(-a)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Popularity { probabilities: weights }
}

/// Binary F x B placement matrix, stored column-major per BS.
#[derive(Clone, Debug)]
pub struct CachePlacement {
    pub num_files: usize,
    /// `cached[b]` lists the file indices cached at BS `b` (0-based).
    pub cached: Vec<Vec<usize>>,
}

impl CachePlacement {
    pub fn contains(&self, file: usize, b: usize) -> bool {
        self.cached[b].contains(&file)
    }

    pub fn column_sum(&self, b: usize) -> usize {
        self.cached[b].len()
    }
}

/// Weighted sampling without replacement: successive draws with
/// renormalization over the remaining items.
fn sample_without_replacement<R: Rng>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let mut u: f64 = rng.gen::<f64>() * total;
        let mut chosen = remaining.len() - 1;
        for (pos, &i) in remaining.iter().enumerate() {
            u -= weights[i];
            if u <= 0.0 {
                chosen = pos;
                break;
            }
        }
        picked.push(remaining.swap_remove(chosen));
    }
    picked.sort_unstable();
    picked
}

/// Fill each BS cache according to `strategy`.
pub fn place_cache(
    strategy: PlacementStrategy,
    popularity: &Popularity,
    cache_size: usize,
    num_bs: usize,
    seed: u64,
) -> Result<CachePlacement, McranError> {
    let f = popularity.num_files();
    if cache_size > f {
        return Err(McranError::InvalidConfig(format!(
            "cache_size: {cache_size} exceeds library of {f} files"
        )));
    }
    let mut rng = substream(seed, Stream::Placement);
    let cached = match strategy {
        PlacementStrategy::None => vec![Vec::new(); num_bs],
        PlacementStrategy::Conservative => {
            // Popularity is descending by index, so the top files are 0..size.
            vec![(0..cache_size).collect::<Vec<_>>(); num_bs]
        }
        PlacementStrategy::MinimumRedundancy => {
            let mut cols = Vec::with_capacity(num_bs);
            for b in 0..num_bs {
                let mut col: Vec<usize> =
                    (0..cache_size).map(|i| (b * cache_size + i) % f).collect();
                col.sort_unstable();
                cols.push(col);
            }
            cols
        }
        PlacementStrategy::Random => {
            let uniform = vec![1.0; f];
            (0..num_bs)
                .map(|_| sample_without_replacement(&uniform, cache_size, &mut rng))
                .collect()
        }
        PlacementStrategy::PopularityAware => (0..num_bs)
            .map(|_| sample_without_replacement(&popularity.probabilities, cache_size, &mut rng))
            .collect(),
    };
    Ok(CachePlacement { num_files: f, cached })
}

/// Requested file per user (0-based file indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestProfile {
    pub requested: Vec<usize>,
}

/// I.i.d. categorical draws from the popularity distribution.
pub fn sample_requests(popularity: &Popularity, num_users: usize, seed: u64) -> RequestProfile {
    let mut rng = substream(seed, Stream::Requests);
    let requested = (0..num_users)
        .map(|_| {
            let mut u: f64 = rng.gen();
            for (file, &p) in popularity.probabilities.iter().enumerate() {
                u -= p;
                if u <= 0.0 {
                    return file;
                }
            }
            popularity.num_files() - 1
        })
        .collect();
    RequestProfile { requested }
}

/// Per-(BS, user) hit flags plus the induced hit/miss user sets.
#[derive(Clone, Debug)]
pub struct HitProfile {
    num_bs: usize,
    num_users: usize,
    /// `hit[b * K + k]` is true when BS b caches the file requested by k.
    hit: Vec<bool>,
    pub cache_hit_users: Vec<usize>,
    pub cache_miss_users: Vec<usize>,
}

impl HitProfile {
    pub fn is_hit(&self, b: usize, k: usize) -> bool {
        self.hit[b * self.num_users + k]
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn hit_ratio(&self) -> f64 {
        self.cache_hit_users.len() as f64 / self.num_users.max(1) as f64
    }

    /// All-miss profile (used by the no-cache baseline).
    pub fn empty(num_bs: usize, num_users: usize) -> Self {
        HitProfile {
            num_bs,
            num_users,
            hit: vec![false; num_bs * num_users],
            cache_hit_users: Vec::new(),
            cache_miss_users: (0..num_users).collect(),
        }
    }
}

/// Evaluate hit flags and the hit/miss partition of the user set.
pub fn hit_profile(placement: &CachePlacement, requests: &RequestProfile) -> HitProfile {
    let num_bs = placement.cached.len();
    let num_users = requests.requested.len();
    let mut hit = vec![false; num_bs * num_users];
    for b in 0..num_bs {
        for (k, &f) in requests.requested.iter().enumerate() {
            hit[b * num_users + k] = placement.contains(f, b);
        }
    }
    let mut cache_hit_users = Vec::new();
    let mut cache_miss_users = Vec::new();
    for k in 0..num_users {
        if (0..num_bs).any(|b| hit[b * num_users + k]) {
            cache_hit_users.push(k);
        } else {
            cache_miss_users.push(k);
        }
    }
    HitProfile { num_bs, num_users, hit, cache_hit_users, cache_miss_users }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zipf_uniform_at_zero_exponent() {
        let p = zipf_popularity(4, 0.0);
        for &q in &p.probabilities {
            assert_relative_eq!(q, 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn zipf_two_files_unit_exponent() {
        let p = zipf_popularity(2, 1.0);
        assert_relative_eq!(p.probabilities[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(p.probabilities[1], 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn zipf_head_matches_direct_summation() {
        let p = zipf_popularity(100, 0.15);
        let norm: f64 = (1..=100).map(|f| (f as f64).powf(-0.15)).sum();
        assert_relative_eq!(p.probabilities[0], 1.0 / norm, max_relative = 1e-12);
        let total: f64 = p.probabilities.iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        for w in p.probabilities.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn conservative_caches_top_files_everywhere() {
        let pop = zipf_popularity(5, 0.5);
        let pl = place_cache(PlacementStrategy::Conservative, &pop, 2, 3, 1).unwrap();
        for b in 0..3 {
            assert_eq!(pl.cached[b], vec![0, 1]);
        }
    }

    #[test]
    fn minimum_redundancy_disjoint_blocks() {
        let pop = zipf_popularity(6, 0.5);
        let pl = place_cache(PlacementStrategy::MinimumRedundancy, &pop, 2, 3, 1).unwrap();
        assert_eq!(pl.cached[0], vec![0, 1]);
        assert_eq!(pl.cached[1], vec![2, 3]);
        assert_eq!(pl.cached[2], vec![4, 5]);
    }

    #[test]
    fn minimum_redundancy_wraps_to_most_popular() {
        let pop = zipf_popularity(4, 0.5);
        let pl = place_cache(PlacementStrategy::MinimumRedundancy, &pop, 2, 3, 1).unwrap();
        assert_eq!(pl.cached[2], vec![0, 1]);
    }

    #[test]
    fn every_strategy_fills_columns_exactly() {
        let pop = zipf_popularity(20, 0.8);
        for strategy in [
            PlacementStrategy::Conservative,
            PlacementStrategy::MinimumRedundancy,
            PlacementStrategy::Random,
            PlacementStrategy::PopularityAware,
        ] {
            for seed in 0..20 {
                let pl = place_cache(strategy, &pop, 3, 5, seed).unwrap();
                for b in 0..5 {
                    assert_eq!(pl.column_sum(b), 3, "{strategy:?} seed {seed}");
                    let mut col = pl.cached[b].clone();
                    col.dedup();
                    assert_eq!(col.len(), 3, "duplicate file in column");
                }
            }
        }
    }

    #[test]
    fn oversized_cache_is_rejected() {
        let pop = zipf_popularity(2, 0.0);
        assert!(place_cache(PlacementStrategy::Random, &pop, 3, 2, 0).is_err());
    }

    #[test]
    fn degenerate_popularity_requests() {
        let pop = Popularity { probabilities: vec![1.0, 0.0, 0.0] };
        let req = sample_requests(&pop, 50, 3);
        assert!(req.requested.iter().all(|&f| f == 0));
    }

    #[test]
    fn requests_are_deterministic() {
        let pop = zipf_popularity(10, 0.5);
        assert_eq!(sample_requests(&pop, 100, 9), sample_requests(&pop, 100, 9));
    }

    #[test]
    fn uniform_request_frequencies_within_three_sigma() {
        let f = 10usize;
        let n = 100_000usize;
        let pop = zipf_popularity(f, 0.0);
        let req = sample_requests(&pop, n, 17);
        let mut counts = vec![0usize; f];
        for &r in &req.requested {
            counts[r] += 1;
        }
        let p = 1.0 / f as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "freq {freq} vs {p}");
        }
    }

    #[test]
    fn hit_profile_all_zero_and_full() {
        let pop = zipf_popularity(4, 0.0);
        let req = sample_requests(&pop, 6, 5);
        let empty = CachePlacement { num_files: 4, cached: vec![Vec::new(); 3] };
        let hp = hit_profile(&empty, &req);
        assert!(hp.cache_hit_users.is_empty());
        assert_eq!(hp.cache_miss_users.len(), 6);

        // Every file cached somewhere: miss set empty.
        let full = CachePlacement {
            num_files: 4,
            cached: vec![vec![0, 1], vec![2, 3], vec![]],
        };
        let hp = hit_profile(&full, &req);
        assert!(hp.cache_miss_users.is_empty());
        assert_eq!(hp.cache_hit_users.len(), 6);
    }

    #[test]
    fn hit_profile_single_bs_example() {
        let placement = CachePlacement { num_files: 5, cached: vec![vec![2]] };
        let requests = RequestProfile { requested: vec![2, 0] };
        let hp = hit_profile(&placement, &requests);
        assert!(hp.is_hit(0, 0));
        assert!(!hp.is_hit(0, 1));
        assert_eq!(hp.cache_hit_users, vec![0]);
        assert_eq!(hp.cache_miss_users, vec![1]);
    }

    #[test]
    fn hit_miss_sets_partition_users() {
        for seed in 0..1000 {
            let pop = zipf_popularity(12, 0.7);
            let pl = place_cache(PlacementStrategy::Random, &pop, 3, 4, seed).unwrap();
            let req = sample_requests(&pop, 9, seed);
            let hp = hit_profile(&pl, &req);
            let mut all: Vec<usize> =
                hp.cache_hit_users.iter().chain(hp.cache_miss_users.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..9).collect::<Vec<_>>());
            for k in &hp.cache_hit_users {
                assert!(!hp.cache_miss_users.contains(k));
            }
        }
    }

    #[test]
    fn popularity_aware_concentrates_on_popular_files() {
        let pop = zipf_popularity(20, 5.0);
        let mut first = 0usize;
        let mut last = 0usize;
        for seed in 0..1000 {
            let pl = place_cache(PlacementStrategy::PopularityAware, &pop, 3, 1, seed).unwrap();
            if pl.contains(0, 0) {
                first += 1;
            }
            if pl.contains(19, 0) {
                last += 1;
            }
        }
        assert!(first > last, "file 1 cached {first} vs file 20 cached {last}");
    }
}
