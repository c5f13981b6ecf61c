//! Hit rates under random replacement (stationarily identical to FIFO).
//!
//! Modeling an object's sojourn time as inversely proportional to the
//! request rate of the other objects gives
//! `h(n) = q(n) tau_C / (sum_{i != n} q(i) + q(n) tau_C)` for a single
//! dimensionless constant `tau_C`, pinned by requiring the hit rates to sum
//! to the cache capacity.

use crate::error::{Error, Result};
use crate::lru::{HitProfile, ProfileKind, SolveOptions};
use crate::numeric::solve_increasing;
use crate::popularity::PopularityLaw;

/// Solved fixed-point constant with diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct RandomSolution {
    pub tau_c: f64,
    pub residual: f64,
    pub iterations: u32,
    pub capacity: f64,
}

/// Hit probability of an object of weight `q` under random replacement.
#[inline]
pub fn hit_rate(q: f64, tau_c: f64, total_mass: f64) -> f64 {
    let rest = total_mass - q;
    q * tau_c / (rest + q * tau_c)
}

/// Solve for `tau_C` of a random-replacement cache of `capacity` items.
pub fn solve_characteristic_constant(law: &PopularityLaw, capacity: f64) -> Result<RandomSolution> {
    solve_characteristic_constant_with(law, capacity, &SolveOptions::default())
}

pub fn solve_characteristic_constant_with(
    law: &PopularityLaw,
    capacity: f64,
    opts: &SolveOptions,
) -> Result<RandomSolution> {
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacity must be positive and finite, got {capacity}"
        )));
    }
    let population = law.population() as f64;
    if capacity >= population {
        return Err(Error::CapacitySaturated {
            capacity,
            limit: population,
        });
    }
    if law.population() < 2 {
        return Err(Error::InvalidParameter(
            "random replacement needs at least two objects".into(),
        ));
    }

    let path = law.sum_path_with(opts.sum_epsilon);
    let total = path.sum(|q| q);
    // Hit-rate sum and its tau-derivative in one catalog pass.
    let eval = |tau: f64| {
        path.sum_pair(|q| {
            let rest = total - q;
            let denom = rest + q * tau;
            (q * tau / denom, q * rest / (denom * denom))
        })
    };

    let mut tau_hi = 1.0;
    for _ in 0..2000 {
        if eval(tau_hi).0 > capacity {
            break;
        }
        tau_hi *= 2.0;
    }
    let tol = (opts.residual_rel * capacity).max(1e-12);
    let root = solve_increasing(eval, capacity, 0.0, tau_hi, tol)?;
    Ok(RandomSolution {
        tau_c: root.x,
        residual: root.residual,
        iterations: root.iterations,
        capacity,
    })
}

/// Per-object random-replacement hit rates at the requested ranks plus the
/// request-weighted overall rate.
pub fn hit_profile(
    law: &PopularityLaw,
    solution: &RandomSolution,
    ranks: &[u64],
) -> Result<HitProfile> {
    let total = law.total_mass();
    let tau = solution.tau_c;
    let rates = ranks
        .iter()
        .map(|&n| law.weight(n).map(|q| hit_rate(q, tau, total)))
        .collect::<Result<Vec<_>>>()?;
    let (mass, hit_mass) = law
        .sum_path()
        .sum_pair(|q| (q, q * hit_rate(q, tau, total)));
    Ok(HitProfile::new(
        ranks.to_vec(),
        rates,
        hit_mass / mass,
        ProfileKind::RandomFp {
            tau_c: tau,
            total_mass: total,
        },
        law.population(),
    ))
}
