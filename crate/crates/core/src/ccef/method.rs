use std::collections::BTreeMap;

use super::{
    ccef_by_integral, ccef_by_regression_average, ccef_closed_form, ccef_polynomial,
    cross_section_integrals, CcefCurve, CcefQuery, Provenance,
};
use crate::bernstein::{BernsteinCcef, BernsteinOrder};
use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// One way of computing `R_C(u)` for a known copula.
pub trait CcefMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn provenance(&self) -> Provenance {
        Provenance::Exact
    }

    fn evaluate(&self, copula: &dyn Copula, q: CcefQuery) -> Result<f64>;

    /// Tabulates the method on a grid. Methods with per-copula setup
    /// override this to share it across grid points.
    fn curve(&self, copula: &dyn Copula, grid: &[f64]) -> Result<CcefCurve> {
        CcefCurve::tabulate(grid, self.provenance(), |q| self.evaluate(copula, q))
    }
}

/// Settings handed to method constructors.
#[derive(Debug, Clone)]
pub struct MethodOptions {
    pub quadrature: QuadratureSpec,
    pub bernstein_order: BernsteinOrder,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            bernstein_order: BernsteinOrder::new(50).expect("50 is a valid order"),
        }
    }
}

struct ClosedForm;

impl CcefMethod for ClosedForm {
    fn name(&self) -> &'static str {
        "closed"
    }

    fn evaluate(&self, copula: &dyn Copula, q: CcefQuery) -> Result<f64> {
        ccef_closed_form(copula, q)
    }
}

struct Integral(QuadratureSpec);

impl CcefMethod for Integral {
    fn name(&self) -> &'static str {
        "integral"
    }

    fn evaluate(&self, copula: &dyn Copula, q: CcefQuery) -> Result<f64> {
        ccef_by_integral(copula, q, &self.0)
    }
}

struct RegressionAverage(QuadratureSpec);

impl CcefMethod for RegressionAverage {
    fn name(&self) -> &'static str {
        "regression"
    }

    fn evaluate(&self, copula: &dyn Copula, q: CcefQuery) -> Result<f64> {
        ccef_by_regression_average(copula, q, &self.0)
    }
}

struct Polynomial;

impl CcefMethod for Polynomial {
    fn name(&self) -> &'static str {
        "polynomial"
    }

    fn evaluate(&self, copula: &dyn Copula, q: CcefQuery) -> Result<f64> {
        ccef_polynomial(&cross_section_integrals(copula)?, q)
    }

    fn curve(&self, copula: &dyn Copula, grid: &[f64]) -> Result<CcefCurve> {
        let ints = cross_section_integrals(copula)?;
        CcefCurve::tabulate(grid, self.provenance(), |q| ccef_polynomial(&ints, q))
    }
}

struct Bernstein(BernsteinOrder);

impl CcefMethod for Bernstein {
    fn name(&self) -> &'static str {
        "bernstein"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Bernstein { m: self.0.get() }
    }

    fn evaluate(&self, copula: &dyn Copula, q: CcefQuery) -> Result<f64> {
        Ok(BernsteinCcef::new(copula, self.0).eval(q))
    }

    fn curve(&self, copula: &dyn Copula, grid: &[f64]) -> Result<CcefCurve> {
        let approx = BernsteinCcef::new(copula, self.0);
        CcefCurve::tabulate(grid, self.provenance(), |q| Ok(approx.eval(q)))
    }
}

type Factory = fn(&MethodOptions) -> Box<dyn CcefMethod>;

/// Name → constructor table of CCEF methods.
pub struct MethodRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("closed", |_| Box::new(ClosedForm));
        r.register("integral", |o| Box::new(Integral(o.quadrature.clone())));
        r.register("regression", |o| Box::new(RegressionAverage(o.quadrature.clone())));
        r.register("polynomial", |_| Box::new(Polynomial));
        r.register("bernstein", |o| Box::new(Bernstein(o.bernstein_order)));
        r
    }
}

impl MethodRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, options: &MethodOptions) -> Result<Box<dyn CcefMethod>> {
        self.factories
            .get(name)
            .map(|f| f(options))
            .ok_or_else(|| Error::UnknownName { kind: "method", name: name.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{Fgm, FrechetUpper};

    #[test]
    fn every_registered_method_agrees_on_fgm() {
        let reg = MethodRegistry::default();
        let opts = MethodOptions {
            bernstein_order: BernsteinOrder::new(2000).unwrap(),
            ..Default::default()
        };
        let c = Fgm::new(0.5).unwrap();
        let q = CcefQuery::new(0.3).unwrap();
        let want = ccef_closed_form(&c, q).unwrap();
        for name in reg.names() {
            let m = reg.create(name, &opts).unwrap();
            assert_eq!(m.name(), name);
            let tol = if name == "bernstein" { 1e-3 } else { 1e-10 };
            assert!((m.evaluate(&c, q).unwrap() - want).abs() < tol, "{name}");
        }
    }

    #[test]
    fn unknown_method_is_reported() {
        let reg = MethodRegistry::default();
        assert!(matches!(
            reg.create("simpson", &MethodOptions::default()),
            Err(Error::UnknownName { .. })
        ));
    }

    #[test]
    fn curve_carries_provenance() {
        let reg = MethodRegistry::default();
        let m = reg.create("bernstein", &MethodOptions::default()).unwrap();
        let curve = m.curve(&FrechetUpper, &[0.2, 0.4]).unwrap();
        assert_eq!(curve.provenance(), Provenance::Bernstein { m: 50 });
        assert!(reg.create("polynomial", &MethodOptions::default()).unwrap().curve(&FrechetUpper, &[0.2]).is_err());
    }
}
