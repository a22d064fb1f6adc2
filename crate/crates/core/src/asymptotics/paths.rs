use std::collections::BTreeMap;

use super::{
    clamp_variance, limit_covariance_hkernel, limit_covariance_hkernel_mc,
    limit_covariance_hkernel_tensor, limit_covariance_printed, limit_variance_printed, MomentMethod,
};
use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// A route to the covariance function of the limit process.
pub trait CovariancePath: Send + Sync {
    fn name(&self) -> &'static str;

    fn method(&self) -> MomentMethod;

    fn covariance(&self, copula: &dyn Copula, u: f64, u2: f64) -> Result<f64>;

    fn variance(&self, copula: &dyn Copula, u: f64) -> Result<f64> {
        clamp_variance(self.covariance(copula, u, u)?)
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceOptions {
    pub quadrature: QuadratureSpec,
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        Self { quadrature: QuadratureSpec::default(), mc_draws: 1_000_000, seed: 0 }
    }
}

struct Printed(QuadratureSpec);

impl CovariancePath for Printed {
    fn name(&self) -> &'static str {
        "printed"
    }

    fn method(&self) -> MomentMethod {
        MomentMethod::PrintedFormula
    }

    fn covariance(&self, copula: &dyn Copula, u: f64, u2: f64) -> Result<f64> {
        limit_covariance_printed(copula, u, u2, &self.0)
    }

    fn variance(&self, copula: &dyn Copula, u: f64) -> Result<f64> {
        clamp_variance(limit_variance_printed(copula, u, &self.0)?)
    }
}

pub(crate) struct HKernelPath(pub(crate) QuadratureSpec);

impl CovariancePath for HKernelPath {
    fn name(&self) -> &'static str {
        "hkernel"
    }

    fn method(&self) -> MomentMethod {
        MomentMethod::HKernelQuadrature
    }

    fn covariance(&self, copula: &dyn Copula, u: f64, u2: f64) -> Result<f64> {
        limit_covariance_hkernel(copula, u, u2, &self.0)
    }
}

struct HKernelTensor(QuadratureSpec);

impl CovariancePath for HKernelTensor {
    fn name(&self) -> &'static str {
        "hkernel-tensor"
    }

    fn method(&self) -> MomentMethod {
        MomentMethod::HKernelQuadrature
    }

    fn covariance(&self, copula: &dyn Copula, u: f64, u2: f64) -> Result<f64> {
        limit_covariance_hkernel_tensor(copula, u, u2, &self.0)
    }
}

struct HKernelMc {
    draws: usize,
    seed: u64,
}

impl CovariancePath for HKernelMc {
    fn name(&self) -> &'static str {
        "hkernel-mc"
    }

    fn method(&self) -> MomentMethod {
        MomentMethod::MonteCarlo
    }

    fn covariance(&self, copula: &dyn Copula, u: f64, u2: f64) -> Result<f64> {
        Ok(limit_covariance_hkernel_mc(copula, u, u2, self.draws, self.seed)?.mean)
    }

    // a Monte Carlo variance can be slightly negative without being wrong
    fn variance(&self, copula: &dyn Copula, u: f64) -> Result<f64> {
        Ok(self.covariance(copula, u, u)?.max(0.0))
    }
}

type Factory = fn(&CovarianceOptions) -> Box<dyn CovariancePath>;

/// Name → constructor table of covariance routes.
pub struct CovarianceRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for CovarianceRegistry {
    fn default() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("printed", |o| Box::new(Printed(o.quadrature.clone())));
        r.register("hkernel", |o| Box::new(HKernelPath(o.quadrature.clone())));
        r.register("hkernel-tensor", |o| Box::new(HKernelTensor(o.quadrature.clone())));
        r.register("hkernel-mc", |o| Box::new(HKernelMc { draws: o.mc_draws, seed: o.seed }));
        r
    }
}

impl CovarianceRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, options: &CovarianceOptions) -> Result<Box<dyn CovariancePath>> {
        self.factories
            .get(name)
            .map(|f| f(options))
            .ok_or_else(|| Error::UnknownName { kind: "covariance path", name: name.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::Independence;

    #[test]
    fn registry_round_trip() {
        let reg = CovarianceRegistry::default();
        let opts = CovarianceOptions { mc_draws: 20_000, ..Default::default() };
        for name in reg.names() {
            let path = reg.create(name, &opts).unwrap();
            assert_eq!(path.name(), name);
            let v = path.variance(&Independence, 0.5).unwrap();
            assert!(v.is_finite() && v >= 0.0, "{name}: {v}");
        }
        assert!(reg.create("bootstrap", &opts).is_err());
    }

    #[test]
    fn kernel_paths_agree_on_independence() {
        let reg = CovarianceRegistry::default();
        let opts = CovarianceOptions::default();
        let a = reg.create("hkernel", &opts).unwrap().covariance(&Independence, 0.3, 0.6).unwrap();
        let b = reg.create("hkernel-tensor", &opts).unwrap().covariance(&Independence, 0.3, 0.6).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}
