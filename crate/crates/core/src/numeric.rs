//! Shared numerical machinery: compensated summation, a safeguarded
//! Newton/bisection root finder for monotone maps, and adaptive
//! Gauss-Kronrod quadrature.

use crate::error::{Error, Result};

/// Kahan-compensated accumulator. The sums here mix terms spanning many
/// orders of magnitude (catalogs up to 1e12 items), so plain accumulation
/// would lose digits the occupancy identities need.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Outcome of a monotone root solve.
#[derive(Clone, Copy, Debug)]
pub struct RootResult {
    pub x: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: u32,
}

const MAX_ROOT_ITERATIONS: u32 = 200;

/// Solve `f(x) = target` for a strictly increasing `f` on a bracket
/// `[lo, hi]` with `f(lo) <= target <= f(hi)`.
///
/// `eval` returns `(f(x), f'(x))`. Newton steps are taken whenever they stay
/// inside the current bracket and the derivative is usable; otherwise the
/// step falls back to bisection, so convergence is guaranteed. Terminates
/// when `|f(x) - target| <= tol` or the bracket collapses to adjacent
/// floats.
pub fn solve_increasing<F>(mut eval: F, target: f64, lo: f64, hi: f64, tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> (f64, f64),
{
    debug_assert!(lo <= hi);
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    let mut iterations = 0;

    loop {
        let (fx, dfx) = eval(x);
        let residual = fx - target;
        iterations += 1;
        if residual.abs() <= tol {
            return Ok(RootResult {
                x,
                residual,
                bracket: (a, b),
                iterations,
            });
        }
        if residual > 0.0 {
            b = x;
        } else {
            a = x;
        }
        if iterations >= MAX_ROOT_ITERATIONS {
            return Err(Error::NoConvergence(format!(
                "residual {residual:.3e} after {iterations} iterations (tol {tol:.3e})"
            )));
        }

        let newton = x - residual / dfx;
        x = if dfx.is_finite() && dfx > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        // Bracket reduced to adjacent floats: accept the best endpoint.
        if x <= a || x >= b {
            let (fa, _) = eval(a);
            let (fb, _) = eval(b);
            let (x, residual) = if (fa - target).abs() <= (fb - target).abs() {
                (a, fa - target)
            } else {
                (b, fb - target)
            };
            return Ok(RootResult {
                x,
                residual,
                bracket: (a, b),
                iterations,
            });
        }
    }
}

/// Result of an adaptive quadrature pass.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u32,
}

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule,
// on [-1, 1]. Standard QUADPACK constants.
const KRONROD_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const KRONROD_W: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GAUSS_W: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 15(7) evaluation over `[a, b]`.
/// Returns `(kronrod_value, |kronrod - gauss|)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let f_mid = f(mid);
    let mut kronrod = KRONROD_W[7] * f_mid;
    let mut gauss = GAUSS_W[3] * f_mid;
    for i in 0..7 {
        let dx = half * KRONROD_X[i];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += KRONROD_W[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_W[i / 2] * pair;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

const MAX_QUAD_INTERVALS: usize = 4096;

/// Adaptive quadrature of `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Splits the interval with the largest embedded error estimate until the
/// total estimate is below target; errors out (with the achieved estimate
/// attached) if the subdivision budget runs out first.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParameter(format!(
            "quadrature interval [{a}, {b}] is not finite and increasing"
        )));
    }
    struct Interval {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = gk15(&f, a, b);
    let mut intervals = vec![Interval { a, b, value, err }];
    let mut evaluations = 15u32;

    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.err).sum();
        if total_err <= abs_tol {
            let mut sum = KahanSum::new();
            for iv in &intervals {
                sum.add(iv.value);
            }
            return Ok(QuadResult {
                value: sum.value(),
                error_estimate: total_err,
                evaluations,
            });
        }
        if intervals.len() >= MAX_QUAD_INTERVALS {
            let mut sum = KahanSum::new();
            for iv in &intervals {
                sum.add(iv.value);
            }
            return Err(Error::QuadratureAccuracy {
                target: abs_tol,
                achieved: total_err,
                estimate: sum.value(),
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("non-empty interval list");
        let iv = intervals.swap_remove(worst);
        let mid = 0.5 * (iv.a + iv.b);
        if mid <= iv.a || mid >= iv.b {
            // Interval shrunk to adjacent floats; keep its estimate as-is.
            intervals.push(Interval { err: 0.0, ..iv });
            continue;
        }
        let (lv, le) = gk15(&f, iv.a, mid);
        let (rv, re) = gk15(&f, mid, iv.b);
        evaluations += 30;
        intervals.push(Interval {
            a: iv.a,
            b: mid,
            value: lv,
            err: le,
        });
        intervals.push(Interval {
            a: mid,
            b: iv.b,
            value: rv,
            err: re,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_handles_spread_magnitudes() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..10_000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10_000.0);
    }

    #[test]
    fn root_finds_exponential_crossing() {
        // Solve 1 - e^{-x} = 0.5 -> x = ln 2.
        let r = solve_increasing(|x| (-(-x as f64).exp_m1(), (-x).exp()), 0.5, 0.0, 10.0, 1e-14).unwrap();
        assert!((r.x - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(r.residual.abs() <= 1e-14);
        assert!(r.bracket.0 <= r.x && r.x <= r.bracket.1);
    }

    #[test]
    fn root_survives_flat_derivative() {
        // Derivative deliberately reported as zero: pure bisection path.
        let r = solve_increasing(|x| (x * x * x, 0.0), 8.0, 0.0, 10.0, 1e-10).unwrap();
        assert!((r.x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_polynomial_is_exact() {
        let r = adaptive_quadrature(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn quadrature_gaussian_tail() {
        // \int_0^8 e^{-x^2} dx = sqrt(pi)/2 to within the tail beyond 8.
        let r = adaptive_quadrature(|x| (-x * x).exp(), 0.0, 8.0, 1e-12).unwrap();
        let expect = std::f64::consts::PI.sqrt() / 2.0;
        assert!((r.value - expect).abs() < 1e-11);
    }

    #[test]
    fn quadrature_rejects_bad_interval() {
        assert!(adaptive_quadrature(|x| x, 1.0, 1.0, 1e-6).is_err());
    }
}
