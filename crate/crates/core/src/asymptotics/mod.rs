//! Moments of the Gaussian limit of `√n (R̂ − R_C)(u)`.
//!
//! The limit is `X(u) = −(1/u) ∫₀¹ 𝓖_C(u, v) dv`, where `𝓖_C` has mean
//! `d·b(u, v)` and covariance `E[h(u,v) h(u',v')]`. Two independent
//! routes to the covariance are provided:
//!
//! * [`limit_covariance_printed`] / [`limit_variance_printed`]: the
//!   closed-form expressions in `R_C`, `H₁`, `H₂`, `H₃`, taken term by term;
//! * [`limit_covariance_hkernel`]: `(1/(uu')) ∫∫ E[h h'] dv dv'` with the
//!   indicator moments expanded and each term reduced to a single integral,
//!   cross-checked by [`limit_covariance_hkernel_tensor`] (direct 2-D
//!   quadrature) and [`limit_covariance_hkernel_mc`] (Monte Carlo).
//!
//! For the independence copula the h-kernel route gives `(1−u)/(12u)` while
//! the closed-form variance evaluates to `(1−u)/(4u)`; bands use the
//! h-kernel route and [`compare_covariance_paths`] reports the gap.

mod band;
mod paths;

pub use band::{confidence_band, confidence_band_with, normal_quantile, AsymptoticBand};
pub use paths::{CovarianceOptions, CovariancePath, CovarianceRegistry};
pub(crate) use paths::HKernelPath;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ccef::{reference_ccef, CcefQuery};
use crate::copula::{require_interior, Copula, PartialKind, UnitPoint};
use crate::error::{Error, Result};
use crate::mc::rng_from_seed;
use crate::quadrature::{try_integrate_1d_split, try_integrate_2d_min_kink, QuadratureSpec};

/// Variances in `(−VARIANCE_NOISE, 0)` are quadrature noise and clamp to 0.
pub const VARIANCE_NOISE: f64 = 1e-9;

/// Threshold above which printed and h-kernel values are flagged.
pub const DISCREPANCY_THRESHOLD: f64 = 1e-6;

/// How a [`LimitMoments`] variance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    PrintedFormula,
    HKernelQuadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMoments {
    pub u: f64,
    pub mean: f64,
    pub variance: f64,
    pub method: MomentMethod,
}

pub(crate) fn clamp_variance(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value > -VARIANCE_NOISE {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance { value })
    }
}

fn interior_u(u: f64) -> Result<f64> {
    if u > 0.0 && u < 1.0 {
        Ok(u)
    } else {
        Err(Error::InvalidDomain(format!("u = {u} must lie in (0, 1)")))
    }
}

/// `∫₀¹ f(v) dv`, splitting at the kinks of `C(a, ·)` for each `a` in `at`.
fn integrate_v<F>(copula: &dyn Copula, at: &[f64], f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let breaks: Vec<f64> = at.iter().flat_map(|&a| copula.kinks(a)).collect();
    try_integrate_1d_split(f, 0.0, 1.0, &breaks, spec)
}

fn d1(c: &dyn Copula, u: f64, v: f64) -> Result<f64> {
    c.partial(PartialKind::D1, u, v)
}

fn d2(c: &dyn Copula, u: f64, v: f64) -> Result<f64> {
    c.partial(PartialKind::D2, u, v)
}

/// `b(u,v) = ½ (u(1−u) C^{(1,1)} + v(1−v) C^{(2,2)})`.
pub fn bias_b(copula: &dyn Copula, p: UnitPoint) -> Result<f64> {
    let (u, v) = (p.u, p.v);
    require_interior(u, v)?;
    let c11 = copula.partial(PartialKind::D11, u, v)?;
    let c22 = copula.partial(PartialKind::D22, u, v)?;
    Ok(0.5 * (u * (1.0 - u) * c11 + v * (1.0 - v) * c22))
}

/// `d(½ − R_C(u)) + d(u−1)/2 ∫₀¹ C^{(1,1)}(u, v) dv`.
pub fn limit_mean(copula: &dyn Copula, u: f64, d: f64, spec: &QuadratureSpec) -> Result<f64> {
    let u = interior_u(u)?;
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidDomain(format!("ratio d = {d} must be >= 0")));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    let r = reference_ccef(copula, CcefQuery::new(u)?, spec)?;
    let c11 = integrate_v(copula, &[u], |v| copula.partial(PartialKind::D11, u, v), spec)?;
    Ok(d * (0.5 - r) + d * (u - 1.0) / 2.0 * c11)
}

/// `−(d/u) ∫₀¹ b(u, v) dv`: the mean of `X(u)` straight from the mean
/// function of `𝓖_C`.
pub fn limit_mean_from_bias(copula: &dyn Copula, u: f64, d: f64, spec: &QuadratureSpec) -> Result<f64> {
    let u = interior_u(u)?;
    let integral = integrate_v(copula, &[u], |v| bias_b(copula, UnitPoint { u, v }), spec)?;
    Ok(-d / u * integral)
}

/// `h(u,v) = 1{U≤u,V≤v} − C(u,v) − C^{(1)}(u,v)(1{U≤u} − u) − C^{(2)}(u,v)(1{V≤v} − v)`
/// for one observation `(U, V)`.
pub fn h_kernel(copula: &dyn Copula, u: f64, v: f64, obs: (f64, f64)) -> Result<f64> {
    require_interior(u, v)?;
    let iu = f64::from(u8::from(obs.0 <= u));
    let iv = f64::from(u8::from(obs.1 <= v));
    Ok(iu * iv - copula.cdf(u, v) - d1(copula, u, v)? * (iu - u) - d2(copula, u, v)? * (iv - v))
}

// ---------------------------------------------------------------------------
// Closed-form ("printed") expressions

fn ccef(copula: &dyn Copula, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    reference_ccef(copula, CcefQuery::new(u)?, spec)
}

fn int_c1(copula: &dyn Copula, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_v(copula, &[u], |v| d1(copula, u, v), spec)
}

/// Closed-form variance, term by term:
///
/// `−4R² + (4 − 1/u)R − 4(2 − 1/u) R H₁ + 2(3 − 2/u) H₁ − 4(1 − 1/u) H₁²
///  − 2 + 1/u + (1/u²) ∫₀¹ (C^{(2)}(u,v))² v dv`, with `2H₁ = ∫₀¹ C^{(1)}(u,v) dv`.
pub fn limit_variance_printed(copula: &dyn Copula, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    let u = interior_u(u)?;
    let r = ccef(copula, u, spec)?;
    let h1 = 0.5 * int_c1(copula, u, spec)?;
    let tail = integrate_v(copula, &[u], |v| Ok(d2(copula, u, v)?.powi(2) * v), spec)?;
    let inv = 1.0 / u;
    Ok(-4.0 * r * r + (4.0 - inv) * r - 4.0 * (2.0 - inv) * r * h1 + 2.0 * (3.0 - 2.0 * inv) * h1
        - 4.0 * (1.0 - inv) * h1 * h1
        - 2.0
        + inv
        + inv * inv * tail)
}

/// `H₁(w₁,w₂) = (1/(w₁w₂)) ∫₀¹ C^{(1)}(w₁,v) dv ∫₀¹ C(w₁,v) C^{(2)}(w₂,v) dv`.
pub fn printed_h1(copula: &dyn Copula, w1: f64, w2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let a = int_c1(copula, w1, spec)?;
    let b = integrate_v(copula, &[w1, w2], |v| Ok(copula.cdf(w1, v) * d2(copula, w2, v)?), spec)?;
    Ok(a * b / (w1 * w2))
}

/// `H₂(w₁,w₂) = (1/(w₁w₂)) ∫∫ C^{(2)}(w₂,v) C(w₁, v∧v') dv dv' − (1 − R(w₁)) R(w₂)`.
pub fn printed_h2(copula: &dyn Copula, w1: f64, w2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let dbl = try_integrate_2d_min_kink(|v, vp| Ok(d2(copula, w2, v)? * copula.cdf(w1, v.min(vp))), spec)?;
    Ok(dbl / (w1 * w2) - (1.0 - ccef(copula, w1, spec)?) * ccef(copula, w2, spec)?)
}

/// `H₃(w₁,w₂) = ((1/(w₁∨w₂))(R(w₁∧w₂) − 1) + 1 − 2R(w₁)) ∫₀¹ C^{(1)}(w₂,v) dv`.
pub fn printed_h3(copula: &dyn Copula, w1: f64, w2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let lead = (ccef(copula, w1.min(w2), spec)? - 1.0) / w1.max(w2) + 1.0 - 2.0 * ccef(copula, w1, spec)?;
    Ok(lead * int_c1(copula, w2, spec)?)
}

/// Closed-form covariance built from `R_C`, `H₁`, `H₂` and `H₃`, term by term.
pub fn limit_covariance_printed(copula: &dyn Copula, u: f64, u2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let (u, u2) = (interior_u(u)?, interior_u(u2)?);
    let (lo, hi) = (u.min(u2), u.max(u2));
    let (r, r2) = (ccef(copula, u, spec)?, ccef(copula, u2, spec)?);
    let joint = try_integrate_2d_min_kink(|v, vp| Ok(copula.cdf(lo, v.min(vp))), spec)?;
    let cross = try_integrate_2d_min_kink(
        |v, vp| Ok(d2(copula, u2, vp)? * d2(copula, u, v)? * v.min(vp)),
        spec,
    )?;
    let (a, a2) = (int_c1(copula, u, spec)?, int_c1(copula, u2, spec)?);
    Ok(joint / (u * u2) + (1.0 - r) * (r2 - 1.0)
        + printed_h3(copula, u, u2, spec)?
        + printed_h3(copula, u2, u, spec)?
        + (1.0 / hi - 1.0) * a2 * a
        - printed_h2(copula, u, u2, spec)?
        - printed_h2(copula, u2, u, spec)?
        + cross / (u * u2)
        - r * r2
        + printed_h1(copula, u, u2, spec)?
        + printed_h1(copula, u2, u, spec)?)
}

// ---------------------------------------------------------------------------
// h-kernel covariance

/// Single integrals over `v` of one section `C(a, ·)`.
struct Section {
    a: f64,
    /// `C(a, 1)`
    top: f64,
    /// `∫ C(a,v) dv`
    area: f64,
    /// `∫ C^{(1)}(a,v) dv`
    d1: f64,
    /// `∫ C^{(2)}(a,v) v dv`
    d2v: f64,
}

impl Section {
    fn new(copula: &dyn Copula, a: f64, spec: &QuadratureSpec) -> Result<Self> {
        Ok(Self {
            a,
            top: copula.cdf(a, 1.0),
            area: integrate_v(copula, &[a], |v| Ok(copula.cdf(a, v)), spec)?,
            d1: int_c1(copula, a, spec)?,
            d2v: integrate_v(copula, &[a], |v| Ok(d2(copula, a, v)? * v), spec)?,
        })
    }
}

/// `∫∫ E[h(u,v) h(u',v')] dv dv'` from the nine indicator moments
///
/// ```text
/// E[A A'] = C(u∧u', v∧v') − C C'      E[B B'] = u∧u' − uu'
/// E[A B'] = C(u∧u', v) − C u'          E[B D'] = C(u, v') − u v'
/// E[A D'] = C(u, v∧v') − C v'          E[D D'] = v∧v' − vv'
/// ```
///
/// (and their mirror images), with `A = 1{U≤u,V≤v} − C`, `B = 1{U≤u} − u`,
/// `D = 1{V≤v} − v`. The `v∧v'` terms reduce to single integrals through
/// `∫∫ g(v∧v') = 2∫ g(t)(1−t) dt`, `min(v,v') = ∫ 1{s<v}1{s<v'} ds` and one
/// integration by parts.
fn hkernel_double_integral(copula: &dyn Copula, u: f64, u2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let s = Section::new(copula, u, spec)?;
    let s2 = if u2 == u { None } else { Some(Section::new(copula, u2, spec)?) };
    let t = s2.as_ref().unwrap_or(&s);
    let lo = u.min(u2);
    let at = [u, u2];
    let int = |f: &mut dyn FnMut(f64) -> Result<f64>| integrate_v(copula, &at, f, spec);

    let area_lo = if lo == u { s.area } else { t.area };
    // ∫∫ C(u∧u', v∧v') = 2 ∫ C(u∧u', w)(1 − w) dw
    let joint = 2.0 * int(&mut |w| Ok(copula.cdf(lo, w) * (1.0 - w)))?;
    // L(a, b) = ∫ C(a,w)(1−w) C^{(2)}(b,w) dw
    let l_ab = int(&mut |w| Ok(copula.cdf(s.a, w) * (1.0 - w) * d2(copula, t.a, w)?))?;
    let l_ba = int(&mut |w| Ok(copula.cdf(t.a, w) * (1.0 - w) * d2(copula, s.a, w)?))?;
    // X(a, b) = ∫ C^{(2)}(a,w) C(b,w) dw
    let x_ba = int(&mut |w| Ok(d2(copula, t.a, w)? * copula.cdf(s.a, w)))?;
    let x_ab = int(&mut |w| Ok(d2(copula, s.a, w)? * copula.cdf(t.a, w)))?;
    // ∫∫ C^{(2)}(u,v) C^{(2)}(u',v') (v∧v') = ∫ (C(u,1) − C(u,w))(C(u',1) − C(u',w)) dw
    let dd = int(&mut |w| Ok((s.top - copula.cdf(s.a, w)) * (t.top - copula.cdf(t.a, w))))?;

    let aa = joint - s.area * t.area;
    let ab = -t.d1 * (area_lo - u2 * s.area);
    let ad = -(t.top * s.area - l_ba - s.area * t.d2v);
    let ba = -s.d1 * (area_lo - u * t.area);
    let bb = s.d1 * t.d1 * (lo - u * u2);
    let bd = s.d1 * (x_ba - u * t.d2v);
    let da = -(s.top * t.area - l_ab - s.d2v * t.area);
    let db = t.d1 * (x_ab - u2 * s.d2v);
    let ddd = dd - s.d2v * t.d2v;
    Ok(aa + ab + ad + ba + bb + bd + da + db + ddd)
}

/// Authoritative covariance of the limit process:
/// `(1/(uu')) ∫₀¹∫₀¹ E[h(u,v) h(u',v')] dv dv'`.
pub fn limit_covariance_hkernel(copula: &dyn Copula, u: f64, u2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let (u, u2) = (interior_u(u)?, interior_u(u2)?);
    // evaluate in a canonical order so that the result is exactly symmetric
    let (a, b) = if u <= u2 { (u, u2) } else { (u2, u) };
    Ok(hkernel_double_integral(copula, a, b, spec)? / (u * u2))
}

pub fn limit_variance_hkernel(copula: &dyn Copula, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    clamp_variance(limit_covariance_hkernel(copula, u, u, spec)?)
}

/// `E[h(u,v) h(u',v')]` with the nine moments written out pointwise.
pub fn hkernel_moment(copula: &dyn Copula, u: f64, v: f64, u2: f64, v2: f64) -> Result<f64> {
    let c = |a: f64, b: f64| copula.cdf(a, b);
    let (c0, c0p) = (c(u, v), c(u2, v2));
    let (c1, c1p) = (d1(copula, u, v)?, d1(copula, u2, v2)?);
    let (c2, c2p) = (d2(copula, u, v)?, d2(copula, u2, v2)?);
    let (ul, vl) = (u.min(u2), v.min(v2));
    let e_aa = c(ul, vl) - c0 * c0p;
    let e_ab = c(ul, v) - c0 * u2;
    let e_ad = c(u, vl) - c0 * v2;
    let e_ba = c(ul, v2) - u * c0p;
    let e_bb = ul - u * u2;
    let e_bd = c(u, v2) - u * v2;
    let e_da = c(u2, vl) - v * c0p;
    let e_db = c(u2, v) - v * u2;
    let e_dd = vl - v * v2;
    Ok(e_aa - c1p * e_ab - c2p * e_ad - c1 * e_ba + c1 * c1p * e_bb + c1 * c2p * e_bd - c2 * e_da
        + c2 * c1p * e_db
        + c2 * c2p * e_dd)
}

/// The same covariance by direct two-dimensional quadrature of
/// [`hkernel_moment`], split along `v = v'`.
pub fn limit_covariance_hkernel_tensor(
    copula: &dyn Copula,
    u: f64,
    u2: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (u, u2) = (interior_u(u)?, interior_u(u2)?);
    let total = try_integrate_2d_min_kink(|v, vp| hkernel_moment(copula, u, v, u2, vp), spec)?;
    Ok(total / (u * u2))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Monte Carlo version of the h-kernel covariance: averages
/// `h(u,v;O) h(u',v';O) / (uu')` over observations `O` drawn from the
/// copula and independent uniform `v, v'`.
pub fn limit_covariance_hkernel_mc(
    copula: &dyn Copula,
    u: f64,
    u2: f64,
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    let (u, u2) = (interior_u(u)?, interior_u(u2)?);
    if draws < 2 {
        return Err(Error::InvalidDomain("Monte Carlo needs at least 2 draws".into()));
    }
    let mut rng = rng_from_seed(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let obs = copula.sample_pair(&mut rng)?;
        let v: f64 = rng.sample(Open01);
        let vp: f64 = rng.sample(Open01);
        let x = h_kernel(copula, u, v, obs)? * h_kernel(copula, u2, vp, obs)? / (u * u2);
        sum += x;
        sum_sq += x * x;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { mean, std_error: (var / n).sqrt(), draws })
}

/// Mean (at ratio `d`) and variance of `X(u)` through a covariance path.
pub fn limit_moments(
    copula: &dyn Copula,
    u: f64,
    d: f64,
    spec: &QuadratureSpec,
    path: &dyn CovariancePath,
) -> Result<LimitMoments> {
    Ok(LimitMoments {
        u,
        mean: limit_mean(copula, u, d, spec)?,
        variance: path.variance(copula, u)?,
        method: path.method(),
    })
}

/// One row of the printed-versus-h-kernel comparison report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceComparison {
    pub u: f64,
    pub u2: f64,
    pub printed_covariance: f64,
    /// Printed variance display, on diagonal rows only.
    pub printed_variance: Option<f64>,
    pub hkernel: f64,
    pub abs_diff: f64,
    pub flagged: bool,
}

/// Evaluates both covariance routes on every pair `u ≤ u'` of `grid`.
pub fn compare_covariance_paths(
    copula: &dyn Copula,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<CovarianceComparison>> {
    let mut rows = Vec::new();
    for (i, &u) in grid.iter().enumerate() {
        for &u2 in &grid[i..] {
            let printed = limit_covariance_printed(copula, u, u2, spec)?;
            let printed_variance =
                if u == u2 { Some(limit_variance_printed(copula, u, spec)?) } else { None };
            let hkernel = limit_covariance_hkernel(copula, u, u2, spec)?;
            let abs_diff = (printed - hkernel)
                .abs()
                .max(printed_variance.map_or(0.0, |p| (p - hkernel).abs()));
            rows.push(CovarianceComparison {
                u,
                u2,
                printed_covariance: printed,
                printed_variance,
                hkernel,
                abs_diff,
                flagged: abs_diff > DISCREPANCY_THRESHOLD,
            });
        }
    }
    Ok(rows)
}
