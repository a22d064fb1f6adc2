//! Named self-check suites, runnable from the library or the command line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    compare_covariance_paths, limit_mean, limit_mean_from_bias, printed_h1, CovarianceComparison,
};
use crate::bernstein::{empirical_rate_sweep, estimate_lipschitz_constant, BernsteinOrder};
use crate::ccef::{
    ccef_by_integral, ccef_by_regression_average, ccef_closed_form, ccef_polynomial,
    cross_section_integrals, CcefQuery,
};
use crate::copula::{Copula, Fgm, FrechetLower, FrechetUpper, Independence, LinIteratedFgm, PartialKind};
use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_1d_split, QuadratureSpec};

pub const REPRESENTATION_TOL: f64 = 1e-8;
pub const MEAN_IDENTITY_TOL: f64 = 1e-8;
pub const H1_IDENTITY_TOL: f64 = 1e-9;
pub const RATE_RATIO_RANGE: (f64, f64) = (1.6, 2.4);

#[derive(Debug, Clone, Default)]
pub struct ValidationContext {
    pub quadrature: QuadratureSpec,
    pub seed: u64,
}

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value <= limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub comparison: Vec<ComparisonBlock>,
}

/// Printed-versus-h-kernel rows for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBlock {
    pub model: String,
    pub rows: Vec<CovarianceComparison>,
}

impl SuiteReport {
    fn from_checks(suite: &str, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { suite: suite.to_string(), passed, checks, comparison: Vec::new() }
    }
}

pub trait ValidationSuite: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, ctx: &ValidationContext) -> Result<SuiteReport>;
}

/// `0.05, 0.10, …, 0.95`.
pub fn default_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

type Named = (String, Box<dyn Copula>);

fn lin(theta: f64, phi: f64) -> Named {
    (format!("lin({theta},{phi})"), Box::new(LinIteratedFgm::new(theta, phi).expect("admissible pair")))
}

fn fgm(theta: f64) -> Named {
    (format!("fgm({theta})"), Box::new(Fgm::new(theta).expect("admissible theta")))
}

/// FGM over a θ grid, five admissible Lin pairs and the three classical copulas.
pub fn reference_models() -> Vec<Named> {
    let mut models: Vec<Named> = [-1.0, -0.5, 0.0, 0.5, 1.0].into_iter().map(fgm).collect();
    for (t, p) in [(1.0, -1.0), (0.5, 1.0), (-1.0, -2.0), (0.25, 3.0), (0.8, 0.2)] {
        models.push(lin(t, p));
    }
    models.push(("independence".into(), Box::new(Independence)));
    models.push(("frechet_upper".into(), Box::new(FrechetUpper)));
    models.push(("frechet_lower".into(), Box::new(FrechetLower)));
    models
}

struct Representations;

impl ValidationSuite for Representations {
    fn name(&self) -> &'static str {
        "representations"
    }

    fn run(&self, ctx: &ValidationContext) -> Result<SuiteReport> {
        let spec = &ctx.quadrature;
        let mut checks = Vec::new();
        for (label, c) in reference_models() {
            let poly = cross_section_integrals(c.as_ref()).ok();
            let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
            for u in default_grid() {
                let q = CcefQuery::new(u)?;
                let closed = ccef_closed_form(c.as_ref(), q)?;
                let mut values = vec![
                    ("integral", ccef_by_integral(c.as_ref(), q, spec)?),
                    ("regression", ccef_by_regression_average(c.as_ref(), q, spec)?),
                ];
                if let Some(ints) = &poly {
                    values.push(("polynomial", ccef_polynomial(ints, q)?));
                }
                for (name, v) in values {
                    let e = worst.entry(name).or_insert(0.0);
                    *e = e.max((v - closed).abs());
                }
            }
            for (name, err) in worst {
                checks.push(Check::at_most(format!("{label} {name} vs closed"), err, REPRESENTATION_TOL));
            }
        }
        Ok(SuiteReport::from_checks(self.name(), checks))
    }
}

struct BernsteinRate;

impl ValidationSuite for BernsteinRate {
    fn name(&self) -> &'static str {
        "bernstein-rate"
    }

    fn run(&self, ctx: &ValidationContext) -> Result<SuiteReport> {
        let c = Fgm::new(1.0)?;
        let u_list: Vec<f64> = (0..=75).map(|i| 0.2 + i as f64 * 0.01).collect();
        let orders = [50, 100, 200, 400].map(|m| BernsteinOrder::new(m).expect("positive order"));
        let lipschitz = estimate_lipschitz_constant(&c)?;
        let rows = empirical_rate_sweep(&c, &u_list, &orders, Some(lipschitz), &ctx.quadrature)?;
        let mut checks = Vec::new();
        let mut sup = Vec::new();
        for m in orders {
            let block: Vec<_> = rows.iter().filter(|r| r.m == m.get()).collect();
            let err = block.iter().map(|r| r.abs_error).fold(0.0, f64::max);
            let bound = block[0].bound.expect("bound requested");
            checks.push(Check::at_most(format!("m={} max error vs bound", m.get()), err, bound));
            sup.push((m.get(), err));
        }
        for w in sup.windows(2) {
            let ratio = w[0].1 / w[1].1;
            let (lo, hi) = RATE_RATIO_RANGE;
            checks.push(Check {
                name: format!("ratio m={}→{}", w[0].0, w[1].0),
                value: ratio,
                limit: hi,
                passed: (lo..=hi).contains(&ratio),
            });
        }
        Ok(SuiteReport::from_checks(self.name(), checks))
    }
}

struct Asymptotics;

impl ValidationSuite for Asymptotics {
    fn name(&self) -> &'static str {
        "asymptotics"
    }

    fn run(&self, ctx: &ValidationContext) -> Result<SuiteReport> {
        let spec = &ctx.quadrature;
        let mut checks = Vec::new();
        let smooth: Vec<Named> = vec![fgm(1.0), fgm(-0.5), lin(0.5, 1.0), lin(-1.0, -2.0), ("independence".into(), Box::new(Independence))];
        for (label, c) in &smooth {
            let mut worst = 0.0f64;
            for u in default_grid() {
                for d in [0.5, 1.0, 2.0] {
                    let a = limit_mean(c.as_ref(), u, d, spec)?;
                    let b = limit_mean_from_bias(c.as_ref(), u, d, spec)?;
                    worst = worst.max((a - b).abs());
                }
            }
            checks.push(Check::at_most(format!("{label} mean identity"), worst, MEAN_IDENTITY_TOL));
        }
        for (label, c) in reference_models() {
            let worst = h1_identity_error(c.as_ref(), spec)?;
            checks.push(Check::at_most(format!("{label} H1 diagonal identity"), worst, H1_IDENTITY_TOL));
        }
        Ok(SuiteReport::from_checks(self.name(), checks))
    }
}

/// Largest `|H₁(u,u) − ½∫C^{(1)}(u,v)dv|` over the default grid.
pub fn h1_identity_error(c: &dyn Copula, spec: &QuadratureSpec) -> Result<f64> {
    let mut worst = 0.0f64;
    for u in default_grid() {
        let h1 = printed_h1(c, u, u, spec)?;
        let half = 0.5
            * try_integrate_1d_split(|v| c.partial(PartialKind::D1, u, v), 0.0, 1.0, &c.kinks(u), spec)?;
        worst = worst.max((h1 - half).abs());
    }
    Ok(worst)
}

struct CovarianceConsistency;

impl ValidationSuite for CovarianceConsistency {
    fn name(&self) -> &'static str {
        "covariance-consistency"
    }

    /// Informational: the report passes once it has been produced.
    fn run(&self, ctx: &ValidationContext) -> Result<SuiteReport> {
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        let models: Vec<Named> = vec![("independence".into(), Box::new(Independence)), fgm(1.0)];
        let mut comparison = Vec::new();
        let mut checks = Vec::new();
        for (label, c) in models {
            let rows = compare_covariance_paths(c.as_ref(), &grid, &ctx.quadrature)?;
            let flagged = rows.iter().filter(|r| r.flagged).count();
            checks.push(Check { name: format!("{label} flagged rows"), value: flagged as f64, limit: rows.len() as f64, passed: true });
            comparison.push(ComparisonBlock { model: label, rows });
        }
        let mut report = SuiteReport::from_checks(self.name(), checks);
        report.comparison = comparison;
        Ok(report)
    }
}

type Factory = fn() -> Box<dyn ValidationSuite>;

/// Name → constructor table of validation suites.
pub struct SuiteRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("representations", || Box::new(Representations));
        r.register("bernstein-rate", || Box::new(BernsteinRate));
        r.register("asymptotics", || Box::new(Asymptotics));
        r.register("covariance-consistency", || Box::new(CovarianceConsistency));
        r
    }
}

impl SuiteRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn ValidationSuite>> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::UnknownName { kind: "suite", name: name.to_string() })
    }
}
