//! Exact cumulative conditional expectation `R_C(u) = E[V | U ≤ u]` through
//! its integral representation, the regression-function average, the
//! polynomial cross-section formula and family closed forms.

mod method;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use method::{CcefMethod, MethodOptions, MethodRegistry};

use crate::copula::{poly_integral_unit, Copula, PartialKind};
use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_1d, try_integrate_1d_split, QuadratureSpec};

/// Smallest `u` accepted by [`CcefQuery`]: the `1/u` factor amplifies
/// quadrature error below it.
pub const MIN_QUERY_U: f64 = 1e-3;

/// A threshold `u` strictly inside the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CcefQuery(f64);

impl CcefQuery {
    pub fn new(u: f64) -> Result<Self> {
        if !(MIN_QUERY_U..1.0).contains(&u) {
            return Err(Error::InvalidDomain(format!(
                "u = {u} must lie in [{MIN_QUERY_U}, 1)"
            )));
        }
        Ok(Self(u))
    }

    pub fn u(self) -> f64 {
        self.0
    }
}

/// Where the values of a curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Bernstein { m: usize },
    Estimate { n: usize, m: usize },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact => f.write_str("exact"),
            Self::Bernstein { m } => write!(f, "bernstein({m})"),
            Self::Estimate { n, m } => write!(f, "estimate({n},{m})"),
        }
    }
}

/// CCEF values on an increasing grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcefCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    provenance: Provenance,
}

impl CcefCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::GridMismatch);
        }
        if grid.is_empty() {
            return Err(Error::Empty("curve grid"));
        }
        if grid.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return Err(Error::InvalidDomain("curve grid must lie inside (0, 1)".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDomain("curve grid must be strictly increasing".into()));
        }
        Ok(Self { grid, values, provenance })
    }

    /// Evaluates `f` at every grid point.
    pub fn tabulate<F>(grid: &[f64], provenance: Provenance, mut f: F) -> Result<Self>
    where
        F: FnMut(CcefQuery) -> Result<f64>,
    {
        let values = grid
            .iter()
            .map(|&u| f(CcefQuery::new(u)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid.to_vec(), values, provenance)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().copied().zip(self.values.iter().copied())
    }

    /// Clamps each value into the Fréchet envelope `[u/2, 1 − u/2]`.
    pub fn clamp_to_envelope(&mut self) {
        for (u, r) in self.grid.iter().zip(self.values.iter_mut()) {
            *r = r.clamp(u / 2.0, 1.0 - u / 2.0);
        }
    }
}

/// `1 − (1/u) ∫₀¹ C(u, v) dv`.
pub fn ccef_by_integral(copula: &dyn Copula, q: CcefQuery, spec: &QuadratureSpec) -> Result<f64> {
    let u = q.u();
    let area = try_integrate_1d_split(|v| Ok(copula.cdf(u, v)), 0.0, 1.0, &copula.kinks(u), spec)?;
    Ok(1.0 - area / u)
}

pub fn ccef_closed_form(copula: &dyn Copula, q: CcefQuery) -> Result<f64> {
    copula
        .closed_form_ccef(q.u())
        .ok_or_else(|| Error::NoClosedForm { family: copula.family().to_string() })
}

/// `1 − Σ_{i=0}^{k−1} uⁱ ∫₀¹ α_{i+1}(v) dv`.
pub fn ccef_polynomial(alpha_integrals: &[f64], q: CcefQuery) -> Result<f64> {
    if alpha_integrals.is_empty() {
        return Err(Error::Empty("alpha integrals"));
    }
    let u = q.u();
    let sum = alpha_integrals.iter().rev().fold(0.0, |acc, a| acc * u + a);
    Ok(1.0 - sum)
}

/// `∫₀¹ α_i(v) dv` for every cross section of `copula`.
pub fn cross_section_integrals(copula: &dyn Copula) -> Result<Vec<f64>> {
    let sections = copula
        .cross_sections()
        .ok_or_else(|| Error::NoCrossSections { family: copula.family().to_string() })?;
    Ok(sections.iter().map(|a| poly_integral_unit(a)).collect())
}

/// `(1/u) ∫₀ᵘ E[V | U = w] dw` with `E[V | U = w] = 1 − ∫₀¹ C^{(1)}(w, v) dv`.
pub fn ccef_by_regression_average(
    copula: &dyn Copula,
    q: CcefQuery,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let u = q.u();
    let regression = |w: f64| -> Result<f64> {
        let inner = try_integrate_1d_split(
            |v| copula.partial(PartialKind::D1, w, v),
            0.0,
            1.0,
            &copula.kinks(w),
            spec,
        )?;
        Ok(1.0 - inner)
    };
    Ok(try_integrate_1d(regression, 0.0, u, spec)? / u)
}

/// Pointwise convex combination of curves sharing one grid.
pub fn ccef_mixture(curves: &[(f64, CcefCurve)]) -> Result<CcefCurve> {
    let (_, first) = curves.first().ok_or(Error::Empty("mixture curves"))?;
    if curves.iter().any(|(_, c)| c.grid != first.grid) {
        return Err(Error::GridMismatch);
    }
    if curves.iter().any(|(w, _)| !(0.0..=1.0).contains(w)) {
        return Err(Error::ParamOutOfRange { constraint: "mixture weights must lie in [0, 1]".into() });
    }
    let total: f64 = curves.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::ParamOutOfRange {
            constraint: format!("mixture weights sum to {total}, not 1"),
        });
    }
    let mut values = vec![0.0; first.grid.len()];
    for (w, c) in curves {
        for (acc, r) in values.iter_mut().zip(&c.values) {
            *acc += w * r;
        }
    }
    CcefCurve::new(first.grid.clone(), values, first.provenance)
}

/// Best available exact value: closed form, else the integral representation.
pub fn reference_ccef(copula: &dyn Copula, q: CcefQuery, spec: &QuadratureSpec) -> Result<f64> {
    match copula.closed_form_ccef(q.u()) {
        Some(r) => Ok(r),
        None => ccef_by_integral(copula, q, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{CopulaModel, Fgm, FrechetLower, FrechetUpper, Independence, LinIteratedFgm, Mixture};

    fn q(u: f64) -> CcefQuery {
        CcefQuery::new(u).unwrap()
    }

    #[test]
    fn query_domain() {
        assert!(CcefQuery::new(0.0).is_err());
        assert!(CcefQuery::new(1.0).is_err());
        assert!(CcefQuery::new(5e-4).is_err());
        assert!(CcefQuery::new(1e-3).is_ok());
    }

    #[test]
    fn integral_examples() {
        let spec = QuadratureSpec::default();
        assert!((ccef_by_integral(&Independence, q(0.37), &spec).unwrap() - 0.5).abs() < 1e-12);
        assert!((ccef_by_integral(&FrechetUpper, q(0.4), &spec).unwrap() - 0.2).abs() < 1e-12);
        let fgm = Fgm::new(1.0).unwrap();
        assert!((ccef_by_integral(&fgm, q(0.5), &spec).unwrap() - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let lin = LinIteratedFgm::new(1.0, -1.0).unwrap();
        assert!((ccef_closed_form(&lin, q(0.5)).unwrap() - 0.4375).abs() < 1e-15);
        assert!((ccef_closed_form(&FrechetLower, q(0.25)).unwrap() - 0.875).abs() < 1e-15);
        for theta in [-0.5, 0.3, 1.0] {
            let a = LinIteratedFgm::new(theta, 0.0).unwrap();
            let b = Fgm::new(theta).unwrap();
            for u in [0.1, 0.6] {
                assert!((ccef_closed_form(&a, q(u)).unwrap() - ccef_closed_form(&b, q(u)).unwrap()).abs() < 1e-15);
            }
        }
        let bern = CopulaModel::BernsteinOf { order: 4, inner: Box::new(CopulaModel::Independence) }
            .build()
            .unwrap();
        assert!(matches!(ccef_closed_form(bern.as_ref(), q(0.5)), Err(Error::NoClosedForm { .. })));
    }

    #[test]
    fn polynomial_examples() {
        assert_eq!(ccef_polynomial(&[0.5], q(0.3)).unwrap(), 0.5);
        assert!(ccef_polynomial(&[], q(0.3)).is_err());
        let fgm = Fgm::new(0.8).unwrap();
        let ints = cross_section_integrals(&fgm).unwrap();
        let want = (3.0 + 0.8 * (0.5 - 1.0)) / 6.0;
        assert!((ccef_polynomial(&ints, q(0.5)).unwrap() - want).abs() < 1e-15);
        let lin = LinIteratedFgm::new(1.0, -1.0).unwrap();
        let ints = cross_section_integrals(&lin).unwrap();
        assert!((ccef_polynomial(&ints, q(0.5)).unwrap() - 0.4375).abs() < 1e-15);
        assert!(cross_section_integrals(&FrechetUpper).is_err());
    }

    #[test]
    fn regression_examples() {
        let spec = QuadratureSpec::default();
        assert!((ccef_by_regression_average(&Independence, q(0.6), &spec).unwrap() - 0.5).abs() < 1e-12);
        let fgm = Fgm::new(1.0).unwrap();
        assert!((ccef_by_regression_average(&fgm, q(0.5), &spec).unwrap() - 5.0 / 12.0).abs() < 1e-12);
        let mix = Mixture::new(vec![
            (0.5, Box::new(Fgm::new(1.0).unwrap())),
            (0.5, Box::new(Fgm::new(-1.0).unwrap())),
        ])
        .unwrap();
        for u in [0.1, 0.45, 0.9] {
            assert!((ccef_by_regression_average(&mix, q(u), &spec).unwrap() - 0.5).abs() < 1e-12);
        }
        assert!((ccef_by_regression_average(&FrechetUpper, q(0.3), &spec).unwrap() - 0.15).abs() < 1e-10);
        assert!((ccef_by_regression_average(&FrechetLower, q(0.3), &spec).unwrap() - 0.85).abs() < 1e-10);
    }

    fn curve_of(c: &dyn Copula, grid: &[f64]) -> CcefCurve {
        CcefCurve::tabulate(grid, Provenance::Exact, |x| ccef_closed_form(c, x)).unwrap()
    }

    #[test]
    fn mixture_of_curves() {
        let grid = [0.1, 0.3, 0.5, 0.9];
        let a = curve_of(&Fgm::new(1.0).unwrap(), &grid);
        let b = curve_of(&Fgm::new(-1.0).unwrap(), &grid);
        let mixed = ccef_mixture(&[(0.5, a.clone()), (0.5, b)]).unwrap();
        assert!(mixed.values().iter().all(|r| (r - 0.5).abs() < 1e-15));
        assert_eq!(ccef_mixture(&[(1.0, a.clone())]).unwrap(), a);
        let m = curve_of(&FrechetUpper, &grid);
        let w = curve_of(&FrechetLower, &grid);
        let mw = ccef_mixture(&[(0.3, m), (0.7, w)]).unwrap();
        for (u, r) in mw.points() {
            assert!((r - (0.3 * u / 2.0 + 0.7 * (1.0 - u / 2.0))).abs() < 1e-15);
        }
        let other = curve_of(&Independence, &[0.2, 0.4]);
        assert_eq!(ccef_mixture(&[(0.5, a), (0.5, other)]).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn curve_invariants() {
        assert!(CcefCurve::new(vec![0.3, 0.2], vec![0.5, 0.5], Provenance::Exact).is_err());
        assert!(CcefCurve::new(vec![0.0, 0.2], vec![0.5, 0.5], Provenance::Exact).is_err());
        let mut c = CcefCurve::new(vec![0.2, 0.6], vec![0.01, 0.99], Provenance::Exact).unwrap();
        c.clamp_to_envelope();
        assert_eq!(c.values(), &[0.1, 0.7]);
        assert_eq!(Provenance::Estimate { n: 10, m: 3 }.to_string(), "estimate(10,3)");
    }

    #[test]
    fn fgm_is_decreasing_in_theta() {
        for u in [0.1, 0.5, 0.9] {
            let vals: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0]
                .iter()
                .map(|&t| ccef_closed_form(&Fgm::new(t).unwrap(), q(u)).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
