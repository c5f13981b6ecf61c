//! Gaussian machinery behind the characteristic-time approximation: the
//! normal-approximation error bound for the occupancy count, the exact
//! erfc-integral hit rate it implies, and the large-catalog asymptotics of
//! the characteristic time for Zipf and geometric popularity.

use crate::error::{Error, Result};
use crate::lru::{self, occupancy_moments};
use crate::numeric::adaptive_quadrature;
use crate::popularity::PopularityLaw;

/// Berry-Esseen constant for sums of independent, non-identically
/// distributed variables.
pub const BERRY_ESSEEN_K: f64 = 0.56;

/// Upper bound `K / sigma(t)` on the Kolmogorov distance between the
/// standardized occupancy count and a standard normal.
pub fn berry_esseen_bound(law: &PopularityLaw, t: f64) -> Result<f64> {
    let sigma2 = lru::occupancy_variance(law, t);
    if sigma2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "occupancy variance is zero at t = {t}; the normal-approximation bound is undefined"
        )));
    }
    Ok(BERRY_ESSEEN_K / sigma2.sqrt())
}

/// Hit rate of an object of weight `q` under the Gaussian occupancy model:
/// `h = 1 - 1/2 int_0^inf erfc((C - m(u)) / (sqrt(2) sigma(u))) q e^{-qu} du`.
///
/// The erfc factor is an S-curve switching from 0 to 1 across a window of
/// width `sigma(t_C) / m'(t_C)` around the characteristic time — far
/// narrower than the exponential weight when `q` is small — so blind
/// adaptive quadrature would sample straight past it. The window is located
/// first; outside it the erfc factor is 0 or 1 to below 1e-30 and the
/// exponential weight integrates in closed form. Where `sigma(u) = 0` the
/// integrand degenerates to a step in `C - m(u)`.
pub fn erfc_hit_rate(law: &PopularityLaw, capacity: f64, q: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "object weight must be positive, got {q}"
        )));
    }
    if !(capacity.is_finite() && 1.0 <= capacity && capacity < law.population() as f64) {
        return Err(Error::InvalidParameter(format!(
            "capacity must satisfy 1 <= C < N, got C = {capacity}, N = {}",
            law.population()
        )));
    }
    let exceed_probability = |u: f64| -> f64 {
        let (m, sigma2) = occupancy_moments(law, u);
        if sigma2 > 0.0 {
            0.5 * libm::erfc((capacity - m) / (2.0 * sigma2).sqrt())
        } else if m > capacity {
            1.0
        } else if m < capacity {
            0.0
        } else {
            0.5
        }
    };

    let solution = lru::solve_characteristic_time(law, capacity)?;
    let t_c = solution.t_c;
    let (m_tc, sigma2_tc) = occupancy_moments(law, t_c);
    let slope = law.sum_path().sum(|w| w * (-w * t_c).exp());
    let width = (sigma2_tc.sqrt() / slope).max(1e-12 * t_c);
    debug_assert!((m_tc - capacity).abs() <= 1e-6 * capacity + 1e-9);

    let u_lo = (t_c - 16.0 * width).max(0.0);
    let u_hi = t_c + 16.0 * width;
    let window = adaptive_quadrature(
        |u| exceed_probability(u) * q * (-q * u).exp(),
        u_lo,
        u_hi,
        1e-8 * (q * (u_hi - u_lo)).min(1.0),
    )?;
    // Beyond the window the erfc factor is 1 up to ~erfc(16/sqrt(2)).
    let miss = window.value + (-q * u_hi).exp();
    Ok((1.0 - miss).clamp(0.0, 1.0))
}

/// Absolute gap between the erfc-integral hit rate and the plain
/// characteristic-time hit rate: the cost of flattening erfc to a step.
pub fn step_function_gap(law: &PopularityLaw, capacity: f64, q: f64) -> Result<f64> {
    let exact = erfc_hit_rate(law, capacity, q)?;
    let solution = lru::solve_characteristic_time(law, capacity)?;
    Ok((exact - lru::hit_rate(q, solution.t_c)).abs())
}

/// Scaling function `psi_alpha(beta) = 1 - int_0^1 exp(-beta / x^alpha) dx`:
/// the fraction of a Zipf(alpha) catalog requested within time
/// `beta N^alpha`, in the large-N limit.
///
/// Evaluated after the substitution `x = e^{-v}`, which stretches the
/// superpolynomially flat x -> 0 endpoint into a plain exponential tail.
pub fn psi(alpha: f64, beta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "psi argument must be nonnegative, got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    // Integrand exp(-beta e^{alpha v}) e^{-v}; beyond cutoff the first
    // factor alone is below e^{-beta - 60}.
    let cutoff = (60.0 / beta).ln_1p() / alpha;
    let kept = adaptive_quadrature(
        |v| (-beta * (alpha * v).exp()).exp() * (-v).exp(),
        0.0,
        cutoff,
        1e-12,
    )?;
    Ok(1.0 - kept.value)
}

/// `psi_alpha'(beta) = int_0^1 x^{-alpha} exp(-beta / x^alpha) dx`,
/// differentiated under the integral sign.
pub fn psi_derivative(alpha: f64, beta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "psi derivative needs beta > 0, got {beta}"
        )));
    }
    // Below x_lo the inner exponent exceeds beta/x^alpha = 35 and the
    // remaining head contributes less than e^{-35} of the integral's scale.
    let x_lo = (beta / 35.0).powf(1.0 / alpha).min(0.5);
    let f = |x: f64| x.powf(-alpha) * (-beta * x.powf(-alpha)).exp();
    let rough = adaptive_quadrature(&f, x_lo, 1.0, f64::INFINITY)?;
    let tol = (1e-11 * rough.value.abs()).max(1e-14);
    Ok(adaptive_quadrature(&f, x_lo, 1.0, tol)?.value)
}

/// Inverse of [`psi`] in its second argument: the unique `beta` with
/// `psi_alpha(beta) = delta`, for `delta` in (0, 1).
pub fn psi_inverse(alpha: f64, delta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(delta.is_finite() && 0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cache fraction must lie in (0, 1), got {delta}"
        )));
    }
    let mut hi = 1.0;
    while psi(alpha, hi)? < delta {
        hi *= 4.0;
        if hi > 1e9 {
            return Err(Error::NoConvergence(format!(
                "psi inverse bracket for delta = {delta} exceeded 1e9"
            )));
        }
    }
    let root = crate::numeric::solve_increasing(
        |beta| {
            let value = psi(alpha, beta).unwrap_or(f64::NAN);
            let slope = if beta > 0.0 {
                psi_derivative(alpha, beta).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            (value, slope)
        },
        delta,
        0.0,
        hi,
        1e-10,
    )?;
    Ok(root.x)
}

/// Leading-order characteristic time of a Zipf(alpha) catalog of `n`
/// objects at cache fraction `delta = C/N`:
/// `t_C ~ psi_alpha^{-1}(delta) N^alpha`.
pub fn tc_asymptotic(alpha: f64, population: u64, delta: f64) -> Result<f64> {
    Ok(psi_inverse(alpha, delta)? * (population as f64).powf(alpha))
}

/// Standard-deviation scale of the catalog fill time around
/// [`tc_asymptotic`]:
/// `N^{alpha - 1/2} sqrt(psi(2 psi^{-1}(delta)) - delta) / psi'(psi^{-1}(delta))`.
/// The ratio to `t_C` shrinks like `N^{-1/2}`, which is why treating the
/// fill time as deterministic works for large caches.
pub fn tc_fluctuation(alpha: f64, population: u64, delta: f64) -> Result<f64> {
    let beta = psi_inverse(alpha, delta)?;
    let spread = psi(alpha, 2.0 * beta)? - delta;
    debug_assert!(spread > 0.0);
    Ok((population as f64).powf(alpha - 0.5) * spread.sqrt() / psi_derivative(alpha, beta)?)
}

/// Large-t behaviour of the occupancy moments under geometric popularity:
/// the mean grows like `ln t / ln(1/rho)` while the variance flattens onto
/// the constant `ln 2 / ln(1/rho)`.
#[derive(Clone, Copy, Debug)]
pub struct GeometricAsymptotics {
    pub mean_estimate: f64,
    pub variance_plateau: f64,
}

pub fn geometric_asymptotics(rho: f64, t: f64) -> Result<GeometricAsymptotics> {
    if !(rho.is_finite() && 0.0 < rho && rho < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric ratio must lie in (0,1), got {rho}"
        )));
    }
    if !(t.is_finite() && t > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric asymptotics need t > 1, got {t}"
        )));
    }
    let log_inv_rho = (1.0 / rho).ln();
    Ok(GeometricAsymptotics {
        mean_estimate: t.ln() / log_inv_rho,
        variance_plateau: std::f64::consts::LN_2 / log_inv_rho,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "zipf exponent must be positive, got {alpha}"
        )));
    }
    Ok(())
}
