//! Closed-form eigenvalue bounds.
//!
//! With `c = (n − 1)/(n + 1)` the bound function is
//!
//! ```text
//! F(n, d, δ, a) = 8πd (1 + (2a²δ − c) / ((2a − 1)² + c))
//! ```
//!
//! Its derivative in `a` has numerator proportional to the quadratic
//! `2δa² − (δ(1 + c) + 2c)a + c`; the smaller root is the minimizer and the
//! minimum collapses to `F_min = 2πd(β − √Δ)/c` with `β = δ(1 + c) + 2c`,
//! `Δ = β² − 8δc`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

/// Extra degrees scanned above `d(g, n)`.
pub const DEFAULT_D_SPAN: usize = 50;

/// Agreement required between the analytic minimizer and the bisection root.
const CROSS_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("bound function needs n >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("delta must be nonnegative, got {0}")]
    NegativeDelta(f64),
    #[error("degree must be positive")]
    ZeroDegree,
    #[error("genus must be at least 3, got {0}")]
    GenusTooSmall(usize),
    #[error("n_max must be at least 3, got {0}")]
    NMaxTooSmall(usize),
    #[error("Rayleigh bound denominator vanishes at a = {0}")]
    DegenerateDenominator(f64),
    #[error("branching b = {b} violates b/2 <= g + d - 1 (g = {g}, d = {d})")]
    BranchingTooLarge { g: usize, d: usize, b: usize },
    #[error("analytic minimizer {analytic} and bisection root {bisection} disagree")]
    CrossCheck { analytic: f64, bisection: f64 },
}

fn ratio_c(n: usize) -> f64 {
    (n as f64 - 1.0) / (n as f64 + 1.0)
}

/// `F(n, d, δ, a)`.
pub fn bound_function(n: usize, d: usize, delta: f64, a: f64) -> Result<f64, BoundsError> {
    if n < 2 {
        return Err(BoundsError::DimensionTooSmall(n));
    }
    if d == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    let c = ratio_c(n);
    Ok(8.0 * PI * d as f64 * (1.0 + (2.0 * a * a * delta - c) / ((2.0 * a - 1.0).powi(2) + c)))
}

/// Energy of `φ_a` over its squared sphere radius,
/// `8πd{(2a − 1)² + 2a²δ} / ((2a − 1)² + c)`. Equals [`bound_function`] for
/// `n ≥ 2` and also covers `n = 1` away from `a = 1/2`.
pub fn rayleigh_rhs(n: usize, d: usize, delta: f64, a: f64) -> Result<f64, BoundsError> {
    if d == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    let c = if n == 0 { -1.0 } else { ratio_c(n) };
    let denom = (2.0 * a - 1.0).powi(2) + c;
    if denom <= 0.0 {
        return Err(BoundsError::DegenerateDenominator(a));
    }
    Ok(8.0 * PI * d as f64 * ((2.0 * a - 1.0).powi(2) + 2.0 * a * a * delta) / denom)
}

/// Numerator of `dF/da` up to the positive factor `8πd / D²`, evaluated from
/// `N = 2δa² − c` and `D = (2a − 1)² + c` directly.
fn derivative_numerator(c: f64, delta: f64, a: f64) -> f64 {
    let num = 2.0 * delta * a * a - c;
    let den = (2.0 * a - 1.0).powi(2) + c;
    4.0 * delta * a * den - num * (8.0 * a - 4.0)
}

/// `dF/da`.
pub fn bound_derivative(n: usize, d: usize, delta: f64, a: f64) -> Result<f64, BoundsError> {
    if n < 2 {
        return Err(BoundsError::DimensionTooSmall(n));
    }
    let c = ratio_c(n);
    let den = (2.0 * a - 1.0).powi(2) + c;
    Ok(8.0 * PI * d as f64 * derivative_numerator(c, delta, a) / (den * den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundMinimum {
    pub a_min: f64,
    pub value: f64,
    /// Independent root of the derivative numerator by bisection on `[0, 1/2]`.
    pub a_bisection: f64,
    /// Minimum found by golden-section search on `[0, 1/2]`.
    pub golden_value: f64,
}

/// Minimizes `F(n, d, δ, ·)`.
///
/// For `δ > 0` the minimizer lies in `(0, 1/2)`. For `δ = 0` the quadratic
/// degenerates and the minimum `F = 0` sits at `a = 1/2`.
pub fn minimize_bound(n: usize, d: usize, delta: f64) -> Result<BoundMinimum, BoundsError> {
    if n < 2 {
        return Err(BoundsError::DimensionTooSmall(n));
    }
    if d == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    if !(delta >= 0.0) {
        return Err(BoundsError::NegativeDelta(delta));
    }
    let c = ratio_c(n);
    let beta = delta * (1.0 + c) + 2.0 * c;
    let disc = (beta * beta - 8.0 * delta * c).max(0.0);
    // smaller root of 2δa² − βa + c, written without cancellation
    let a_min = 2.0 * c / (beta + disc.sqrt());
    let value = bound_function(n, d, delta, a_min)?;

    let a_bisection = if delta == 0.0 {
        0.5
    } else {
        bisect_root(|a| derivative_numerator(c, delta, a), 0.0, 0.5)
    };
    if (a_bisection - a_min).abs() > CROSS_CHECK_TOL {
        return Err(BoundsError::CrossCheck {
            analytic: a_min,
            bisection: a_bisection,
        });
    }
    let (_, golden_value) = golden_section(
        |a| bound_function(n, d, delta, a).unwrap_or(f64::INFINITY),
        0.0,
        0.5,
        1e-10,
    );
    Ok(BoundMinimum {
        a_min,
        value,
        a_bisection,
        golden_value,
    })
}

/// Root of `f` on `[lo, hi]` with `f(lo) < 0 < f(hi)`, to machine resolution.
pub(crate) fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let lo_negative = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let candidates = [(lo, f(lo)), (x1, f1), (x2, f2), (hi, f(hi))];
    candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty")
}

/// A value `(p − q√s)π` with rational `p`, `q` and squarefree `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolicPi {
    pub tag: String,
    /// `p − q√s`, evaluated.
    pub over_pi: f64,
}

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Writes `m = k² s` with `s` squarefree; `None` if `m` is too large to factor by trial division.
fn square_split(m: &BigInt) -> Option<(BigInt, BigInt)> {
    let limit = BigInt::from(10u64).pow(14);
    if m.is_negative() || m > &limit {
        return None;
    }
    let mut rest = m.to_u64()?;
    let (mut k, mut s) = (1u64, 1u64);
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        k *= p.pow(e / 2);
        if e % 2 == 1 {
            s *= p;
        }
        p += 1;
    }
    s *= rest;
    Some((BigInt::from(k), BigInt::from(s)))
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact `F_min/π` for rational `δ > 0` as `p − q√s`.
pub fn symbolic_minimum(n: usize, d: usize, delta: &BigRational) -> Option<SymbolicPi> {
    if n < 2 || d == 0 || !delta.is_positive() {
        return None;
    }
    let c = rat(n as i64 - 1, n as i64 + 1);
    let beta = delta * (BigRational::one() + &c) + &c * rat(2, 1);
    let disc = &beta * &beta - delta * &c * rat(8, 1);
    let scale = rat(2 * d as i64, 1) / &c;
    let p = &scale * &beta;
    let r = &scale * &scale * disc;
    let m = r.numer() * r.denom();
    let (k, s) = square_split(&m)?;
    let q = BigRational::new(k, r.denom().clone());
    let over_pi = p.to_f64()? - q.to_f64()? * s.to_f64()?.sqrt();
    let tag = if s.is_one() {
        format!("{}π", fmt_rational(&(p - q)))
    } else if q.is_zero() {
        format!("{}π", fmt_rational(&p))
    } else if p.is_integer() && q.is_integer() {
        let g = p.to_integer().gcd(&q.to_integer());
        let (pp, qq) = (p.to_integer() / &g, q.to_integer() / &g);
        let qs = if qq.is_one() { String::new() } else { qq.to_string() };
        if g.is_one() {
            format!("({pp} - {qs}√{s})π")
        } else {
            format!("{g}({pp} - {qs}√{s})π")
        }
    } else {
        format!("({} - {}√{s})π", fmt_rational(&p), fmt_rational(&q))
    };
    Some(SymbolicPi { tag, over_pi })
}

/// Closed-form smaller root `2c/(β + √Δ)` from the exact inputs.
fn symbolic_root(n: usize, delta: &BigRational) -> Option<f64> {
    let c = ratio_c(n);
    let dl = delta.to_f64()?;
    let beta = dl * (1.0 + c) + 2.0 * c;
    Some(2.0 * c / (beta + (beta * beta - 8.0 * dl * c).max(0.0).sqrt()))
}

/// `Λ₁(g) ≤ [(g + 3)/2] 8π`.
pub fn yang_yau_bound(g: usize) -> f64 {
    ((g + 3) / 2) as f64 * 8.0 * PI
}

/// Brill–Noether constant `ρ = g − (n + 1)(g − d + n)`.
pub fn brill_noether_rho(g: usize, d: usize, n: usize) -> i64 {
    g as i64 - (n as i64 + 1) * (g as i64 - d as i64 + n as i64)
}

/// Smallest admissible degree `d(g, n) = [(g + 1)n/(n + 1)] + n`.
pub fn brill_noether_degree(g: usize, n: usize) -> usize {
    (g + 1) * n / (n + 1) + n
}

/// Default `n_max = [√(g + 1)] + 10`.
pub fn default_n_max(g: usize) -> usize {
    (g + 1).isqrt() + 10
}

/// Exact `δ = 1 + (g − 1 − b/2)/d`.
fn delta_exact(g: usize, d: usize, b: usize) -> BigRational {
    BigRational::new(
        BigInt::from(2 * d as i64 + 2 * g as i64 - 2 - b as i64),
        BigInt::from(2 * d as i64),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub g: usize,
    pub value: f64,
    pub a_star: f64,
    pub n_star: usize,
    pub d_star: usize,
    pub baseline_yy: f64,
    pub symbolic: Option<String>,
}

impl BoundResult {
    pub fn value_over_pi(&self) -> f64 {
        self.value / PI
    }

    pub fn improves_yang_yau(&self) -> bool {
        self.value <= self.baseline_yy
    }
}

/// Bound for one `(g, n, d, b)`: minimizes `F(n, d, δ, ·)` with `δ = 1 + (g − 1 − b/2)/d`.
pub fn forced_bound(g: usize, n: usize, d: usize, b: usize) -> Result<BoundResult, BoundsError> {
    if d == 0 {
        return Err(BoundsError::ZeroDegree);
    }
    if b > 2 * (g + d - 1) {
        return Err(BoundsError::BranchingTooLarge { g, d, b });
    }
    let delta = delta_exact(g, d, b);
    let m = minimize_bound(n, d, delta.to_f64().unwrap_or(f64::NAN))?;
    let symbolic = symbolic_root(n, &delta)
        .filter(|root| (root - m.a_bisection).abs() <= CROSS_CHECK_TOL)
        .and_then(|_| symbolic_minimum(n, d, &delta))
        .map(|s| s.tag);
    Ok(BoundResult {
        g,
        value: m.value,
        a_star: m.a_min,
        n_star: n,
        d_star: d,
        baseline_yy: yang_yau_bound(g),
        symbolic,
    })
}

/// Minimum over `n ∈ [3, n_max]` and `d ∈ [d(g, n), d(g, n) + d_span]` of the
/// unbranched bound. Ties break on `(value, n, d)`.
pub fn lambda1_bound(g: usize, n_max: usize, d_span: usize) -> Result<BoundResult, BoundsError> {
    if g < 3 {
        return Err(BoundsError::GenusTooSmall(g));
    }
    if n_max < 3 {
        return Err(BoundsError::NMaxTooSmall(n_max));
    }
    let mut best: Option<(f64, usize, usize, f64)> = None;
    for n in 3..=n_max {
        let d0 = brill_noether_degree(g, n);
        for d in d0..=d0 + d_span {
            let delta = 1.0 + (g as f64 - 1.0) / d as f64;
            let m = minimize_bound(n, d, delta)?;
            let better = match best {
                None => true,
                Some((v, bn, bd, _)) => (m.value, n, d) < (v, bn, bd),
            };
            if better {
                best = Some((m.value, n, d, m.a_min));
            }
        }
    }
    let (_, n, d, _) = best.expect("scan is nonempty");
    forced_bound(g, n, d, 0)
}

/// `G(a) = 8π(1 + (4a² − 1)/((2a − 1)² + 1))`, the `g → ∞` limit of `F/g`.
pub fn asymptotic_g(a: f64) -> f64 {
    8.0 * PI * (1.0 + (4.0 * a * a - 1.0) / ((2.0 * a - 1.0).powi(2) + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticMinimum {
    pub a_min: f64,
    pub value: f64,
    /// Numerical minimizer (bisection on the derivative numerator).
    pub a_numeric: f64,
}

/// `a_min = (3 − √5)/4`, `G(a_min) = 4(3 − √5)π`.
pub fn minimize_asymptotic_g() -> AsymptoticMinimum {
    let a_min = (3.0 - 5f64.sqrt()) / 4.0;
    let value = 4.0 * (3.0 - 5f64.sqrt()) * PI;
    // numerator of G' over 8π: 8a((2a−1)²+1) − (4a²−1)(8a−4)
    let a_numeric = bisect_root(
        |a| {
            let den = (2.0 * a - 1.0).powi(2) + 1.0;
            8.0 * a * den - (4.0 * a * a - 1.0) * (8.0 * a - 4.0)
        },
        0.0,
        0.5,
    );
    AsymptoticMinimum {
        a_min,
        value,
        a_numeric,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub g: usize,
    pub n: usize,
    pub d: usize,
    pub bound: f64,
    pub ratio: f64,
}

/// Bound along `d = g + 1`, `n = [√(g + 1)]`, with the ratio to `g`.
pub fn asymptotic_convergence_table(g_list: &[usize]) -> Result<Vec<ScheduleRow>, BoundsError> {
    g_list
        .iter()
        .map(|&g| {
            if g < 3 {
                return Err(BoundsError::GenusTooSmall(g));
            }
            let n = (g + 1).isqrt();
            let d = g + 1;
            let delta = 1.0 + (g as f64 - 1.0) / d as f64;
            let m = minimize_bound(n, d, delta)?;
            Ok(ScheduleRow {
                g,
                n,
                d,
                bound: m.value,
                ratio: m.value / g as f64,
            })
        })
        .collect()
}
