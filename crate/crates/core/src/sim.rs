//! Monte-Carlo ground truth: i.i.d. request streams driving exact LRU,
//! random, FIFO and static-LFU caches, tandem (two-level) hierarchies, and
//! direct samplers for the occupancy count and catalog fill time.
//!
//! Simulation is restricted to catalogs that fit in memory; the huge
//! mixed-traffic scenarios are analytic-only by design.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lru::HitProfile;
use crate::numeric::KahanSum;
use crate::popularity::PopularityLaw;

/// Largest explicit catalog the simulator accepts.
pub const MAX_SIM_POPULATION: u64 = 2_000_000;

/// Per-rank estimates are only trustworthy once a rank has been requested
/// this often; reporting layers drop sparser ranks.
pub const MIN_RANK_OBSERVATIONS: u64 = 100;

const Z95: f64 = 1.959963984540054;

/// Replacement policy of a simulated cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Evict the least recently requested resident on a miss.
    Lru,
    /// Overwrite a uniformly random resident on a miss.
    Random,
    /// Evict the oldest insertion on a miss.
    Fifo,
    /// Pin the `C` largest-weight objects; no replacement ever happens.
    LfuStatic,
}

/// One simulation run: law, policy, capacity and run lengths.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub law: PopularityLaw,
    pub policy: Policy,
    pub capacity: u64,
    /// Total requests drawn, including warmup.
    pub requests: u64,
    /// Leading requests discarded before measuring.
    pub warmup: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Config with the default warmup: `max(10 C, 1e6)` requests, clamped
    /// so short exploratory runs still measure something.
    pub fn new(law: PopularityLaw, policy: Policy, capacity: u64, requests: u64, seed: u64) -> Self {
        let warmup = (10 * capacity).max(1_000_000).min(requests / 2);
        SimConfig {
            law,
            policy,
            capacity,
            requests,
            warmup,
            seed,
        }
    }

    fn validate(&self) -> Result<u64> {
        let population = self.law.population();
        if population > MAX_SIM_POPULATION {
            return Err(Error::PopulationTooLarge {
                population,
                limit: MAX_SIM_POPULATION,
            });
        }
        if self.capacity == 0 || self.capacity >= population {
            return Err(Error::InvalidParameter(format!(
                "capacity must satisfy 1 <= C < N, got C = {}, N = {population}",
                self.capacity
            )));
        }
        if self.warmup >= self.requests {
            return Err(Error::InvalidParameter(format!(
                "warmup ({}) must be below the request count ({})",
                self.warmup, self.requests
            )));
        }
        Ok(population)
    }
}

/// Post-warmup per-rank and overall hit counts.
#[derive(Clone, Debug)]
pub struct SimEstimate {
    rank_requests: Vec<u64>,
    rank_hits: Vec<u64>,
    requests: u64,
    hits: u64,
}

impl SimEstimate {
    fn new(population: usize) -> Self {
        SimEstimate {
            rank_requests: vec![0; population],
            rank_hits: vec![0; population],
            requests: 0,
            hits: 0,
        }
    }

    #[inline]
    fn record(&mut self, id: usize, hit: bool) {
        self.rank_requests[id] += 1;
        self.requests += 1;
        if hit {
            self.rank_hits[id] += 1;
            self.hits += 1;
        }
    }

    pub fn population(&self) -> u64 {
        self.rank_requests.len() as u64
    }

    pub fn measured_requests(&self) -> u64 {
        self.requests
    }

    /// Overall hit ratio across all measured requests.
    pub fn overall(&self) -> f64 {
        self.hits as f64 / self.requests as f64
    }

    /// 95% normal-approximation half-width of [`Self::overall`].
    pub fn overall_halfwidth(&self) -> f64 {
        let p = self.overall();
        Z95 * (p * (1.0 - p) / self.requests as f64).sqrt()
    }

    pub fn requests_at(&self, rank: u64) -> u64 {
        self.rank_requests[rank as usize - 1]
    }

    pub fn hits_at(&self, rank: u64) -> u64 {
        self.rank_hits[rank as usize - 1]
    }

    /// Hit-rate estimate for one rank; `None` before the first request.
    pub fn rate_at(&self, rank: u64) -> Option<f64> {
        let n = self.requests_at(rank);
        (n > 0).then(|| self.hits_at(rank) as f64 / n as f64)
    }

    /// 95% half-width of [`Self::rate_at`].
    pub fn halfwidth_at(&self, rank: u64) -> Option<f64> {
        let n = self.requests_at(rank);
        let p = self.rate_at(rank)?;
        Some(Z95 * (p * (1.0 - p) / n as f64).sqrt())
    }

    /// The estimate as a per-rank hit profile (unobserved ranks report 0).
    pub fn to_profile(&self) -> Result<HitProfile> {
        let rates: Vec<f64> = self
            .rank_requests
            .iter()
            .zip(&self.rank_hits)
            .map(|(&n, &h)| if n == 0 { 0.0 } else { h as f64 / n as f64 })
            .collect();
        HitProfile::from_rates(rates, self.overall())
    }
}

/// Walker/Vose alias table: O(N) build, O(1) sample.
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut total = KahanSum::new();
        for &w in weights {
            total.add(w);
        }
        let scale = n as f64 / total.value();
        let mut prob: Vec<f64> = weights.iter().map(|&w| w * scale).collect();
        let mut alias = vec![0u32; n];
        let mut small: Vec<u32> = Vec::new();
        let mut large: Vec<u32> = Vec::new();
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            alias[s as usize] = l;
            let leftover = prob[l as usize] + prob[s as usize] - 1.0;
            prob[l as usize] = leftover;
            if leftover < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Rounding leftovers: both stacks drain to cells of weight ~1.
        for i in small.into_iter().chain(large) {
            prob[i as usize] = 1.0;
        }
        AliasTable { prob, alias }
    }

    #[inline]
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

const NONE: u32 = u32::MAX;

/// Doubly linked recency list over dense object ids; O(1) everywhere.
struct RecencyList {
    prev: Vec<u32>,
    next: Vec<u32>,
    head: u32,
    tail: u32,
    len: u64,
}

impl RecencyList {
    fn new(population: usize) -> Self {
        RecencyList {
            prev: vec![NONE; population],
            next: vec![NONE; population],
            head: NONE,
            tail: NONE,
            len: 0,
        }
    }

    #[inline]
    fn push_front(&mut self, id: u32) {
        self.prev[id as usize] = NONE;
        self.next[id as usize] = self.head;
        if self.head != NONE {
            self.prev[self.head as usize] = id;
        } else {
            self.tail = id;
        }
        self.head = id;
        self.len += 1;
    }

    #[inline]
    fn unlink(&mut self, id: u32) {
        let (p, n) = (self.prev[id as usize], self.next[id as usize]);
        if p != NONE {
            self.next[p as usize] = n;
        } else {
            self.head = n;
        }
        if n != NONE {
            self.prev[n as usize] = p;
        } else {
            self.tail = p;
        }
        self.len -= 1;
    }

    #[inline]
    fn pop_back(&mut self) -> u32 {
        let id = self.tail;
        self.unlink(id);
        id
    }
}

enum CacheState {
    List {
        list: RecencyList,
        resident: Vec<bool>,
        move_on_hit: bool,
    },
    Random {
        slots: Vec<u32>,
        pos: Vec<u32>,
        capacity: usize,
    },
    Pinned {
        resident: Vec<bool>,
    },
}

impl CacheState {
    fn new(policy: Policy, capacity: u64, weights: &[f64]) -> Self {
        let population = weights.len();
        match policy {
            Policy::Lru | Policy::Fifo => CacheState::List {
                list: RecencyList::new(population),
                resident: vec![false; population],
                move_on_hit: policy == Policy::Lru,
            },
            Policy::Random => CacheState::Random {
                slots: Vec::with_capacity(capacity as usize),
                pos: vec![NONE; population],
                capacity: capacity as usize,
            },
            Policy::LfuStatic => {
                // Top-C by weight, ties to the lower rank.
                let mut order: Vec<u32> = (0..population as u32).collect();
                order.sort_by(|&a, &b| {
                    weights[b as usize]
                        .total_cmp(&weights[a as usize])
                        .then(a.cmp(&b))
                });
                let mut resident = vec![false; population];
                for &id in order.iter().take(capacity as usize) {
                    resident[id as usize] = true;
                }
                CacheState::Pinned { resident }
            }
        }
    }

    /// Serve one request; returns whether it hit.
    #[inline]
    fn access(&mut self, id: usize, capacity: u64, rng: &mut ChaCha8Rng) -> bool {
        match self {
            CacheState::List {
                list,
                resident,
                move_on_hit,
            } => {
                if resident[id] {
                    if *move_on_hit {
                        list.unlink(id as u32);
                        list.push_front(id as u32);
                    }
                    true
                } else {
                    if list.len == capacity {
                        let evicted = list.pop_back();
                        resident[evicted as usize] = false;
                    }
                    list.push_front(id as u32);
                    resident[id] = true;
                    false
                }
            }
            CacheState::Random {
                slots,
                pos,
                capacity,
            } => {
                if pos[id] != NONE {
                    true
                } else {
                    if slots.len() == *capacity {
                        let j = rng.gen_range(0..slots.len());
                        let evicted = slots[j];
                        pos[evicted as usize] = NONE;
                        slots[j] = id as u32;
                        pos[id] = j as u32;
                    } else {
                        pos[id] = slots.len() as u32;
                        slots.push(id as u32);
                    }
                    false
                }
            }
            CacheState::Pinned { resident } => resident[id],
        }
    }
}

/// Run one cache simulation; deterministic for a given config and seed.
pub fn run_cache_sim(config: &SimConfig) -> Result<SimEstimate> {
    let population = config.validate()?;
    let weights = config.law.to_explicit_weights(MAX_SIM_POPULATION)?;
    let table = AliasTable::new(&weights);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = CacheState::new(config.policy, config.capacity, &weights);
    let mut stats = SimEstimate::new(population as usize);

    for i in 0..config.requests {
        let id = table.sample(&mut rng);
        let hit = cache.access(id, config.capacity, &mut rng);
        if i >= config.warmup {
            stats.record(id, hit);
        }
    }
    Ok(stats)
}

/// Two-level result: per-level estimates plus the measured level-1 miss
/// stream (the requests the second level actually sees).
#[derive(Clone, Debug)]
pub struct TandemResult {
    pub level1: SimEstimate,
    pub level2: SimEstimate,
    pub miss_counts: Vec<u64>,
    pub miss_total: u64,
}

impl TandemResult {
    /// Empirical frequency of rank `n` in the level-1 miss stream.
    pub fn miss_frequency(&self, rank: u64) -> f64 {
        self.miss_counts[rank as usize - 1] as f64 / self.miss_total as f64
    }
}

/// Simulate a tandem of two caches; misses of the first feed the second.
/// `capacity1` may be zero (a degenerate front cache that misses
/// everything, so the miss stream reproduces the request law).
pub fn run_tandem_sim(
    law: &PopularityLaw,
    capacity1: u64,
    capacity2: u64,
    policy: Policy,
    requests: u64,
    warmup: u64,
    seed: u64,
) -> Result<TandemResult> {
    let population = law.population();
    if population > MAX_SIM_POPULATION {
        return Err(Error::PopulationTooLarge {
            population,
            limit: MAX_SIM_POPULATION,
        });
    }
    if capacity1 >= population || capacity2 == 0 || capacity2 >= population {
        return Err(Error::InvalidParameter(format!(
            "tandem capacities must satisfy C1 < N and 1 <= C2 < N, got C1 = {capacity1}, C2 = {capacity2}, N = {population}"
        )));
    }
    if warmup >= requests {
        return Err(Error::InvalidParameter(format!(
            "warmup ({warmup}) must be below the request count ({requests})"
        )));
    }
    let weights = law.to_explicit_weights(MAX_SIM_POPULATION)?;
    let table = AliasTable::new(&weights);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut front = (capacity1 > 0).then(|| CacheState::new(policy, capacity1, &weights));
    let mut back = CacheState::new(policy, capacity2, &weights);
    let mut level1 = SimEstimate::new(population as usize);
    let mut level2 = SimEstimate::new(population as usize);
    let mut miss_counts = vec![0u64; population as usize];
    let mut miss_total = 0u64;

    for i in 0..requests {
        let id = table.sample(&mut rng);
        let hit1 = match &mut front {
            Some(cache) => cache.access(id, capacity1, &mut rng),
            None => false,
        };
        let measured = i >= warmup;
        if measured {
            level1.record(id, hit1);
        }
        if !hit1 {
            let hit2 = back.access(id, capacity2, &mut rng);
            if measured {
                miss_counts[id] += 1;
                miss_total += 1;
                level2.record(id, hit2);
            }
        }
    }
    Ok(TandemResult {
        level1,
        level2,
        miss_counts,
        miss_total,
    })
}

/// Sample the occupancy count `X(t)`: the number of distinct objects whose
/// independent exponential clocks (rates `q(n)`) fire before `t`.
pub fn sample_occupancy_counts(
    law: &PopularityLaw,
    t: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<u32>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "occupancy time must be nonnegative, got {t}"
        )));
    }
    let weights = law.to_explicit_weights(MAX_SIM_POPULATION)?;
    let probs: Vec<f64> = weights.iter().map(|&q| -(-q * t).exp_m1()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let mut count = 0u32;
        for &p in &probs {
            if rng.gen::<f64>() < p {
                count += 1;
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Sample the fill time `T_C`: the `capacity`-th order statistic of the
/// exponential clocks, i.e. the instant the `C`-th distinct object is
/// requested.
pub fn sample_fill_times(
    law: &PopularityLaw,
    capacity: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    fill_times(law, capacity, None, trials, seed)
}

/// [`sample_fill_times`] with one object's clock excluded from the count.
pub fn sample_fill_times_excluding(
    law: &PopularityLaw,
    capacity: u64,
    exclude_rank: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    law.weight(exclude_rank)?;
    fill_times(law, capacity, Some(exclude_rank as usize - 1), trials, seed)
}

fn fill_times(
    law: &PopularityLaw,
    capacity: u64,
    exclude: Option<usize>,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let weights = law.to_explicit_weights(MAX_SIM_POPULATION)?;
    let active = weights.len() - usize::from(exclude.is_some());
    if capacity == 0 || capacity as usize > active {
        return Err(Error::InvalidParameter(format!(
            "fill time needs 1 <= C <= {active}, got C = {capacity}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clocks = vec![0.0f64; active];
    let mut out = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let mut k = 0;
        for (i, &q) in weights.iter().enumerate() {
            if Some(i) == exclude {
                continue;
            }
            // Exponential via inverse CDF; 1 - U stays clear of ln(0).
            clocks[k] = -(1.0 - rng.gen::<f64>()).ln() / q;
            k += 1;
        }
        let (_, kth, _) = clocks.select_nth_unstable_by(capacity as usize - 1, f64::total_cmp);
        out.push(*kth);
    }
    Ok(out)
}
