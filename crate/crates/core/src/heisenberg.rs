//! Commuting rotations on the Heisenberg nilmanifold `H / Gamma`.
//!
//! `H = R^3` with `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`. Points of the
//! quotient are kept in the chart `[0,1)^3` given by
//! `({a}, {b}, {c - a floor(b)})`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HPoint {
    pub const IDENTITY: HPoint = HPoint { a: 0.0, b: 0.0, c: 0.0 };

    pub fn new(a: f64, b: f64, c: f64) -> HPoint {
        HPoint { a, b, c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NilPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NilPoint {
    pub const ORIGIN: NilPoint = NilPoint { a: 0.0, b: 0.0, c: 0.0 };

    pub fn lift(self) -> HPoint {
        HPoint { a: self.a, b: self.b, c: self.c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationParams {
    pub alpha: f64,
    pub s: HPoint,
    pub t: HPoint,
}

impl RotationParams {
    /// `s = (alpha, 0, 0)`, `t = (0, 1/alpha, alpha)`. The rational
    /// independence of `1, alpha, 1/alpha` is the caller's responsibility.
    pub fn new(alpha: f64) -> Result<RotationParams> {
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(Error::Contract(format!("alpha must be finite and non-zero, got {alpha}")));
        }
        Ok(RotationParams { alpha, s: HPoint::new(alpha, 0.0, 0.0), t: HPoint::new(0.0, 1.0 / alpha, alpha) })
    }
}

impl Default for RotationParams {
    fn default() -> Self {
        RotationParams::new(default_alpha()).expect("valid alpha")
    }
}

pub fn default_alpha() -> f64 {
    2f64.cbrt()
}

pub fn mul(g: HPoint, h: HPoint) -> HPoint {
    HPoint { a: g.a + h.a, b: g.b + h.b, c: g.c + h.c + g.a * h.b }
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

pub fn canonical(h: HPoint) -> NilPoint {
    NilPoint { a: frac(h.a), b: frac(h.b), c: frac(h.c - h.a * h.b.floor()) }
}

pub fn apply_s(p: NilPoint, params: &RotationParams) -> NilPoint {
    canonical(mul(params.s, p.lift()))
}

pub fn apply_t(p: NilPoint, params: &RotationParams) -> NilPoint {
    canonical(mul(params.t, p.lift()))
}

/// `s^n = (n alpha, 0, 0)`.
pub fn s_power(n: i64, params: &RotationParams) -> HPoint {
    HPoint::new(n as f64 * params.alpha, 0.0, 0.0)
}

/// `t^m = (0, m / alpha, m alpha)`.
pub fn t_power(m: i64, params: &RotationParams) -> HPoint {
    HPoint::new(0.0, m as f64 / params.alpha, m as f64 * params.alpha)
}

pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = frac(x - y);
    d.min(1.0 - d)
}

/// Maximum of the circle distances of the three chart coordinates.
pub fn distance(p: NilPoint, q: NilPoint) -> f64 {
    circle_distance(p.a, q.a).max(circle_distance(p.b, q.b)).max(circle_distance(p.c, q.c))
}

/// `(x, S^n x, T^m x, S^n T^m x)` for `x = h Gamma`.
pub fn quadruple(h: HPoint, n: i64, m: i64, params: &RotationParams) -> [NilPoint; 4] {
    let sn = s_power(n, params);
    let tm = t_power(m, params);
    [canonical(h), canonical(mul(sn, h)), canonical(mul(tm, h)), canonical(mul(sn, mul(tm, h)))]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchLimits {
    pub nmax: u64,
    pub mmax: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { nmax: 10_000_000, mmax: 100_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub c: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub n: i64,
    pub m: i64,
    /// Lift of the base point `x`.
    pub x: HPoint,
    pub distances: [f64; 4],
    pub max: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Builds `x = (0, c/(n alpha), 0) Gamma` and exponents `(n, m)` such that
/// `(x, S^n x, T^m x, S^n T^m x)` is close to
/// `(Gamma, (0,0,c) Gamma, (0,0,c) Gamma, (0,0,c) Gamma)`.
///
/// `n` is the least positive integer with `{n alpha} < eps` and
/// `c/(n alpha) < eps`; `m` the least non-negative integer with
/// `{m alpha}` within `eps` of `c` and `m/alpha + c/(n alpha)` within
/// `eps/(1 + n alpha)` of an integer.
pub fn witness_search(c: f64, epsilon: f64, params: &RotationParams) -> Result<WitnessReport> {
    witness_search_limited(c, epsilon, params, SearchLimits::default())
}

pub fn witness_search_limited(
    c: f64,
    epsilon: f64,
    params: &RotationParams,
    limits: SearchLimits,
) -> Result<WitnessReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Contract(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::Contract(format!("c must lie in [0, 1), got {c}")));
    }
    let alpha = params.alpha;
    let report = |n: i64, m: i64, x: HPoint| {
        let target = NilPoint { a: 0.0, b: 0.0, c };
        let q = quadruple(x, n, m, params);
        let distances =
            [distance(q[0], NilPoint::ORIGIN), distance(q[1], target), distance(q[2], target), distance(q[3], target)];
        let max = distances.iter().copied().fold(0.0, f64::max);
        let bound = 6.0 * epsilon;
        WitnessReport { c, alpha, epsilon, n, m, x, distances, max, bound, pass: max < bound }
    };
    if c == 0.0 {
        return Ok(report(0, 0, HPoint::IDENTITY));
    }
    let n = (1..=limits.nmax as i64)
        .find(|&n| {
            let na = n as f64 * alpha;
            frac(na) < epsilon && c / na < epsilon
        })
        .ok_or_else(|| Error::Resource(format!("no n <= {} satisfies the S-conditions", limits.nmax)))?;
    let na = n as f64 * alpha;
    let beta = c / na;
    let x = HPoint::new(0.0, beta, 0.0);
    let tight = epsilon / (1.0 + na);
    let mut best: Option<(f64, i64)> = None;
    for m in 0..=limits.mmax as i64 {
        let mf = m as f64;
        let d_c = circle_distance(mf * alpha, c);
        let d_b = circle_distance(mf / alpha + beta, 0.0);
        if d_c < epsilon && d_b < tight {
            return Ok(report(n, m, x));
        }
        let score = (d_c / epsilon).max(d_b / tight);
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, m));
        }
    }
    let (_, m) = best.expect("at least one m scanned");
    let r = report(n, m, x);
    Err(Error::Resource(format!(
        "no m <= {} satisfies the T-conditions; best candidate n={n} m={m} max distance {:.3e}",
        limits.mmax, r.max
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongScan {
    pub found: bool,
    /// Closest anchored quadruple seen, as `(n, m, max distance)`.
    pub closest: (i64, i64, f64),
    pub bound: u64,
}

/// Scans `(Gamma, S^n Gamma, T^m Gamma, S^n T^m Gamma)` for `|n|, |m| <= bound`
/// for a quadruple within `eps` of `(Gamma, (0,0,c), (0,0,c), (0,0,c))`.
pub fn strong_witness_scan(c: f64, epsilon: f64, params: &RotationParams, bound: u64) -> StrongScan {
    let target = NilPoint { a: 0.0, b: 0.0, c: frac(c) };
    let big = bound as i64;
    let mut closest = (0, 0, f64::INFINITY);
    for n in -big..=big {
        let sn = canonical(s_power(n, params));
        let d1 = distance(sn, target);
        if d1 >= epsilon {
            // the remaining coordinates cannot bring the maximum below d1
            if d1 < closest.2 {
                closest = (n, 0, d1);
            }
            continue;
        }
        for m in -big..=big {
            let q = quadruple(HPoint::IDENTITY, n, m, params);
            let d = distance(q[0], NilPoint::ORIGIN).max(d1).max(distance(q[2], target)).max(distance(q[3], target));
            if d < closest.2 {
                closest = (n, m, d);
            }
            if d < epsilon {
                return StrongScan { found: true, closest, bound };
            }
        }
    }
    StrongScan { found: false, closest, bound }
}
