//! LRU hit rates via the characteristic-time (Che) approximation.
//!
//! The cache's characteristic time `t_C` is the unique root of
//! `sum_n (1 - exp(-q(n) t)) = C`; each object then hits with probability
//! `h(n) = 1 - exp(-q(n) t_C)`. Variable-size objects weight each term of
//! the root equation by the object size, which is identical to applying the
//! unit-size equation to the chunk-expanded catalog.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{solve_increasing, KahanSum};
use crate::popularity::{PopularityLaw, DEFAULT_SUM_EPSILON};

/// Default solver residual, relative to the capacity.
pub const DEFAULT_RESIDUAL_REL: f64 = 1e-9;

/// What the capacity of a solution counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapacityUnits {
    Items,
    Chunks,
}

/// Solver knobs; the defaults match the library-wide tolerances.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Residual target `|m(t_C) - C| <= max(residual_rel * C, 1e-12)`.
    pub residual_rel: f64,
    /// Segmentation accuracy for catalogs evaluated through rank grouping.
    pub sum_epsilon: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_rel: DEFAULT_RESIDUAL_REL,
            sum_epsilon: DEFAULT_SUM_EPSILON,
        }
    }
}

/// A solved characteristic time with solver diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct CheSolution {
    pub t_c: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub capacity: f64,
    pub units: CapacityUnits,
}

/// Expected cache occupancy `m(t) = sum_n (1 - exp(-q(n) t))`.
pub fn mean_occupancy(law: &PopularityLaw, t: f64) -> f64 {
    assert!(t >= 0.0, "occupancy time must be nonnegative");
    law.sum_path().sum(|q| -(-q * t).exp_m1())
}

/// Occupancy variance `sigma^2(t) = sum_n exp(-q(n) t)(1 - exp(-q(n) t))`.
pub fn occupancy_variance(law: &PopularityLaw, t: f64) -> f64 {
    assert!(t >= 0.0, "occupancy time must be nonnegative");
    law.sum_path().sum(|q| {
        let e = (-q * t).exp();
        e * -(-q * t).exp_m1()
    })
}

/// `(m(t), sigma^2(t))` in a single catalog pass.
pub fn occupancy_moments(law: &PopularityLaw, t: f64) -> (f64, f64) {
    assert!(t >= 0.0, "occupancy time must be nonnegative");
    law.sum_path().sum_pair(|q| {
        let e = (-q * t).exp();
        let one_minus = -(-q * t).exp_m1();
        (one_minus, e * one_minus)
    })
}

/// Hit probability of an object of weight `q` given a characteristic time.
#[inline]
pub fn hit_rate(q: f64, t_c: f64) -> f64 {
    -(-q * t_c).exp_m1()
}

/// Solve for the characteristic time of a cache holding `capacity` items.
pub fn solve_characteristic_time(law: &PopularityLaw, capacity: f64) -> Result<CheSolution> {
    solve_characteristic_time_with(law, capacity, CapacityUnits::Items, &SolveOptions::default())
}

pub fn solve_characteristic_time_with(
    law: &PopularityLaw,
    capacity: f64,
    units: CapacityUnits,
    opts: &SolveOptions,
) -> Result<CheSolution> {
    let path = law.sum_path_with(opts.sum_epsilon);
    let total = path.sum(|q| q);
    solve_occupancy_root(
        capacity,
        law.population() as f64,
        total,
        units,
        opts,
        |t| {
            path.sum_pair(|q| {
                let e = (-q * t).exp();
                (-(-q * t).exp_m1(), q * e)
            })
        },
    )
}

/// Characteristic time with object `exclude` removed from the root equation
/// (the per-object refinement that the single-`t_C` approximation
/// collapses). Always at least as large as the full law's `t_C`.
pub fn solve_characteristic_time_excluding(
    law: &PopularityLaw,
    capacity: f64,
    exclude: u64,
) -> Result<CheSolution> {
    let q_ex = law.weight(exclude)?;
    let opts = SolveOptions::default();
    let path = law.sum_path_with(opts.sum_epsilon);
    let total = path.sum(|q| q) - q_ex;
    solve_occupancy_root(
        capacity,
        (law.population() - 1) as f64,
        total,
        CapacityUnits::Items,
        &opts,
        |t| {
            let (m, dm) = path.sum_pair(|q| {
                let e = (-q * t).exp();
                (-(-q * t).exp_m1(), q * e)
            });
            let e = (-q_ex * t).exp();
            (m + (-q_ex * t).exp_m1(), dm - q_ex * e)
        },
    )
}

/// Characteristic time for variable-size objects: each term of the root
/// equation is weighted by `sizes(rank)` and `capacity` is in chunks. The
/// law must be object-level (no chunk multiplicity) and small enough to
/// enumerate; constant-size catalogs at any scale are handled by
/// [`PopularityLaw::chunked`] instead.
pub fn solve_characteristic_time_sized<F>(
    law: &PopularityLaw,
    capacity: f64,
    sizes: F,
) -> Result<CheSolution>
where
    F: Fn(u64) -> f64,
{
    let weights = law.to_explicit_weights(crate::popularity::DENSE_LIMIT)?;
    let theta: Vec<f64> = (1..=weights.len() as u64).map(sizes).collect();
    if let Some(bad) = theta.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "object sizes must be positive and finite, got {bad}"
        )));
    }
    let mut size_total = KahanSum::new();
    let mut rate_total = KahanSum::new();
    for (&q, &th) in weights.iter().zip(&theta) {
        size_total.add(th);
        rate_total.add(q * th);
    }
    let opts = SolveOptions::default();
    solve_occupancy_root(
        capacity,
        size_total.value(),
        rate_total.value(),
        CapacityUnits::Chunks,
        &opts,
        |t| {
            let mut m = KahanSum::new();
            let mut dm = KahanSum::new();
            for (&q, &th) in weights.iter().zip(&theta) {
                m.add(th * -(-q * t).exp_m1());
                dm.add(th * q * (-q * t).exp());
            }
            (m.value(), dm.value())
        },
    )
}

/// Shared monotone-root driver: `occupancy(t)` must return the increasing
/// map and its derivative; `limit` is its supremum and `rate_total` its
/// slope at zero.
fn solve_occupancy_root<F>(
    capacity: f64,
    limit: f64,
    rate_total: f64,
    units: CapacityUnits,
    opts: &SolveOptions,
    occupancy: F,
) -> Result<CheSolution>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacity must be positive and finite, got {capacity}"
        )));
    }
    if capacity >= limit {
        return Err(Error::CapacitySaturated { capacity, limit });
    }

    // 1 - e^{-x} <= x makes capacity/rate_total a guaranteed lower bound.
    let mut t_lo = capacity / rate_total;
    while occupancy(t_lo).0 > capacity {
        t_lo *= 0.5;
    }
    let mut t_hi = t_lo;
    for _ in 0..2000 {
        t_hi *= 2.0;
        if occupancy(t_hi).0 > capacity {
            break;
        }
    }
    let tol = (opts.residual_rel * capacity).max(1e-12);
    let root = solve_increasing(|t| occupancy(t), capacity, t_lo, t_hi, tol)?;
    Ok(CheSolution {
        t_c: root.x,
        residual: root.residual,
        bracket: root.bracket,
        iterations: root.iterations,
        capacity,
        units,
    })
}

/// How hit rates were produced; drives analytic filtering.
#[derive(Clone, Debug)]
pub enum ProfileKind {
    /// LRU via characteristic time.
    Che { t_c: f64 },
    /// Random/FIFO via the fixed-point constant.
    RandomFp { tau_c: f64, total_mass: f64 },
    /// Measured or externally supplied per-rank rates.
    PerRank(Arc<[f64]>),
}

/// Hit rates evaluated at chosen ranks plus the request-weighted overall
/// rate for the whole catalog.
#[derive(Clone, Debug)]
pub struct HitProfile {
    ranks: Vec<u64>,
    rates: Vec<f64>,
    overall: f64,
    kind: ProfileKind,
    population: u64,
}

impl HitProfile {
    pub(crate) fn new(
        ranks: Vec<u64>,
        rates: Vec<f64>,
        overall: f64,
        kind: ProfileKind,
        population: u64,
    ) -> Self {
        HitProfile {
            ranks,
            rates,
            overall,
            kind,
            population,
        }
    }

    /// Profile from per-rank rates (rank `n`'s rate at index `n - 1`),
    /// typically a simulation estimate. `overall` must be supplied by the
    /// caller since an empirical profile carries no weights.
    pub fn from_rates(rates: Vec<f64>, overall: f64) -> Result<Self> {
        if let Some(bad) = rates.iter().find(|h| !(0.0..=1.0).contains(*h)) {
            return Err(Error::InvalidParameter(format!(
                "hit rates must lie in [0, 1], got {bad}"
            )));
        }
        let population = rates.len() as u64;
        Ok(HitProfile {
            ranks: Vec::new(),
            rates: Vec::new(),
            overall,
            kind: ProfileKind::PerRank(rates.into()),
            population,
        })
    }

    /// Ranks the profile was evaluated at.
    pub fn ranks(&self) -> &[u64] {
        &self.ranks
    }

    /// Hit rates at [`Self::ranks`], in the same order.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Request-weighted overall hit rate.
    pub fn overall(&self) -> f64 {
        self.overall
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// Rate at a specific evaluated rank, if present.
    pub fn rate_at(&self, rank: u64) -> Option<f64> {
        if let ProfileKind::PerRank(all) = &self.kind {
            return all.get(rank as usize - 1).copied();
        }
        self.ranks
            .iter()
            .position(|&r| r == rank)
            .map(|i| self.rates[i])
    }
}

/// Per-object hit rates `h(n) = 1 - exp(-q(n) t_C)` at the requested ranks,
/// with the catalog-wide request-weighted overall rate.
pub fn hit_profile(law: &PopularityLaw, solution: &CheSolution, ranks: &[u64]) -> Result<HitProfile> {
    let t_c = solution.t_c;
    let rates = ranks
        .iter()
        .map(|&n| law.weight(n).map(|q| hit_rate(q, t_c)))
        .collect::<Result<Vec<_>>>()?;
    let (mass, hit_mass) = law.sum_path().sum_pair(|q| (q, q * hit_rate(q, t_c)));
    Ok(HitProfile::new(
        ranks.to_vec(),
        rates,
        hit_mass / mass,
        ProfileKind::Che { t_c },
        law.population(),
    ))
}
