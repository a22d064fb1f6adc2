//! Bivariate copulas: the [`Copula`] evaluation trait, the concrete
//! families, and [`CopulaModel`], the serializable description that is
//! validated and compiled into a `dyn Copula`.

mod families;
mod model;

use std::fmt;

use rand::distr::Open01;
use rand::{Rng, RngCore};

pub use families::{
    FrechetLower, FrechetUpper, Fgm, Independence, LinIteratedFgm, Mixture,
    PolynomialCrossSection,
};
pub use model::{CopulaModel, MixtureComponent};

use crate::error::{Error, Result};

/// Steps of the central finite-difference fallback, for first and second
/// derivatives.
pub const FD_STEP: f64 = 1e-5;
pub const FD_STEP_SECOND: f64 = 1e-4;
const FD_CLAMP: f64 = 1e-8;

/// A point `(u, v)` of the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub u: f64,
    pub v: f64,
}

impl UnitPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        let inside = |x: f64| (0.0..=1.0).contains(&x);
        if !inside(u) || !inside(v) {
            return Err(Error::InvalidDomain(format!("({u}, {v}) is outside [0,1]^2")));
        }
        Ok(Self { u, v })
    }

    pub fn is_interior(&self) -> bool {
        self.u > 0.0 && self.u < 1.0 && self.v > 0.0 && self.v < 1.0
    }
}

/// Which partial derivative of `C(u, v)` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartialKind {
    /// ∂C/∂u
    D1,
    /// ∂C/∂v
    D2,
    /// ∂²C/∂u²
    D11,
    /// ∂²C/∂v²
    D22,
}

impl PartialKind {
    pub const ALL: [PartialKind; 4] = [Self::D1, Self::D2, Self::D11, Self::D22];
}

/// A two-dimensional copula.
///
/// `cdf` is defined on the closed unit square; `partial` only on its
/// interior. Implementations without analytic derivatives inherit the
/// central finite-difference fallback.
pub trait Copula: Send + Sync + fmt::Debug {
    /// Short family name used in messages and reports.
    fn family(&self) -> &'static str;

    fn cdf(&self, u: f64, v: f64) -> f64;

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        finite_difference_partial(|a, b| self.cdf(a, b), kind, u, v)
    }

    /// Locations `v` at which `v ↦ C(u, v)` or its partials are not smooth.
    /// Quadrature over `v` uses them as panel boundaries.
    fn kinks(&self, _u: f64) -> Vec<f64> {
        Vec::new()
    }

    /// `E[V | U ≤ u]` in closed form, when the family has one.
    fn closed_form_ccef(&self, _u: f64) -> Option<f64> {
        None
    }

    /// Coefficient vectors of `α_i(v)` (powers of `v`) such that
    /// `C(u, v) = Σ_{i≥1} α_i(v) uⁱ`; entry `0` holds `α_1`.
    fn cross_sections(&self) -> Option<Vec<Vec<f64>>> {
        None
    }

    /// Inverse in `v` of the conditional distribution `v ↦ ∂C/∂u (u, v)`
    /// at level `t`. The default bisects the analytic `D1` to 1e-12.
    fn conditional_quantile(&self, u: f64, t: f64) -> Result<f64> {
        bisect_conditional(self, u, t)
    }

    /// Draws one pair `(U, V)` by conditional inversion.
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        let u: f64 = rng.sample(Open01);
        let t: f64 = rng.sample(Open01);
        Ok((u, self.conditional_quantile(u, t)?))
    }
}

pub(crate) fn require_interior(u: f64, v: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::BoundaryPoint { u, v })
    }
}

/// Central finite differences with stencil points clamped into
/// `[1e-8, 1 - 1e-8]`; the divisor is the realized stencil width.
pub fn finite_difference_partial<F>(cdf: F, kind: PartialKind, u: f64, v: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    require_interior(u, v)?;
    let clamp = |x: f64| x.clamp(FD_CLAMP, 1.0 - FD_CLAMP);
    let h = match kind {
        PartialKind::D1 | PartialKind::D2 => FD_STEP,
        PartialKind::D11 | PartialKind::D22 => FD_STEP_SECOND,
    };
    Ok(match kind {
        PartialKind::D1 => {
            let (lo, hi) = (clamp(u - h), clamp(u + h));
            (cdf(hi, v) - cdf(lo, v)) / (hi - lo)
        }
        PartialKind::D2 => {
            let (lo, hi) = (clamp(v - h), clamp(v + h));
            (cdf(u, hi) - cdf(u, lo)) / (hi - lo)
        }
        PartialKind::D11 => {
            let (lo, hi) = (clamp(u - h), clamp(u + h));
            let c = 0.5 * (lo + hi);
            let step = 0.5 * (hi - lo);
            (cdf(hi, v) - 2.0 * cdf(c, v) + cdf(lo, v)) / (step * step)
        }
        PartialKind::D22 => {
            let (lo, hi) = (clamp(v - h), clamp(v + h));
            let c = 0.5 * (lo + hi);
            let step = 0.5 * (hi - lo);
            (cdf(u, hi) - 2.0 * cdf(u, c) + cdf(u, lo)) / (step * step)
        }
    })
}

fn bisect_conditional<C: Copula + ?Sized>(copula: &C, u: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidDomain(format!("probability level {t}")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let f = copula.partial(PartialKind::D1, u, mid).map_err(|_| Error::UnsupportedFamily {
            family: copula.family().to_string(),
        })?;
        if f < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluates a polynomial given by ascending coefficients.
pub(crate) fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub(crate) fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| j as f64 * c)
        .collect()
}

/// `∫₀¹ p(v) dv` for ascending coefficients.
pub fn poly_integral_unit(coeffs: &[f64]) -> f64 {
    coeffs.iter().enumerate().map(|(j, c)| c / (j as f64 + 1.0)).sum()
}
