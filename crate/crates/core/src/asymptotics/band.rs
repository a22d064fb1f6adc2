use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{limit_mean, CovariancePath, HKernelPath};
use crate::bernstein::BernsteinOrder;
use crate::ccef::CcefQuery;
use crate::empirical::{EmpiricalGrid, RankedSample};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Pointwise plug-in confidence interval for `R_C(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticBand {
    pub u: f64,
    pub r_hat: f64,
    pub bias_correction: f64,
    pub std_error: f64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidDomain(format!("probability {p} must lie in (0, 1)")));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(p))
}

/// Bands whose variance comes from the h-kernel covariance.
pub fn confidence_band(
    rs: &RankedSample,
    m: BernsteinOrder,
    grid: &[f64],
    level: f64,
    spec: &QuadratureSpec,
) -> Result<Vec<AsymptoticBand>> {
    confidence_band_with(rs, m, grid, level, spec, &HKernelPath(spec.clone()))
}

/// Plug-in bands: the limit moments are evaluated under `B_m C_n` with
/// `d = √n/m`, then `r̂ − mean/√n ± z·√(var/n)`.
pub fn confidence_band_with(
    rs: &RankedSample,
    m: BernsteinOrder,
    grid: &[f64],
    level: f64,
    spec: &QuadratureSpec,
    path: &dyn CovariancePath,
) -> Result<Vec<AsymptoticBand>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidDomain(format!("level {level} must lie in (0, 1)")));
    }
    let z = normal_quantile(0.5 + level / 2.0)?;
    let empirical = EmpiricalGrid::new(rs, m);
    let plug = empirical.smoothed_copula();
    let sqrt_n = (rs.n() as f64).sqrt();
    let d = sqrt_n / m.get() as f64;
    grid.par_iter()
        .map(|&u| {
            let q = CcefQuery::new(u)?;
            if rs.support_count(u) == 0 {
                return Err(Error::EmptyConditioningSet { u });
            }
            let r_hat = empirical.ccef(q);
            let bias_correction = limit_mean(&plug, u, d, spec)? / sqrt_n;
            let std_error = (path.variance(&plug, u)? / rs.n() as f64).sqrt();
            let centre = r_hat - bias_correction;
            Ok(AsymptoticBand {
                u,
                r_hat,
                bias_correction,
                std_error,
                level,
                lower: centre - z * std_error,
                upper: centre + z * std_error,
            })
        })
        .collect()
}
