//! Seeded samplers and replicated experiments used as the definitional
//! oracle for the analytic results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::asymptotics::{limit_mean, limit_variance_hkernel};
use crate::bernstein::BernsteinOrder;
use crate::ccef::{ccef_closed_form, CcefQuery};
use crate::copula::Copula;
use crate::empirical::{compute_ranks, EmpiricalGrid, Sample};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Identifier of the uniform generator, recorded in output metadata.
pub const GENERATOR_ID: &str = "chacha8";

/// 1% critical value of the modified Anderson–Darling statistic when mean
/// and variance are estimated.
pub const AD_CRITICAL_1PCT: f64 = 1.035;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of replicate `index`, a splitmix64 step away from `root`.
pub fn mix_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub n: usize,
    pub replicates: usize,
}

impl McConfig {
    pub fn new(seed: u64, n: usize, replicates: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDomain(format!("n = {n} must be at least 2")));
        }
        if replicates < 1 {
            return Err(Error::InvalidDomain("need at least one replicate".into()));
        }
        Ok(Self { seed, n, replicates })
    }
}

/// `n` pairs drawn by conditional inversion from a generator seeded with `seed`.
pub fn sample(copula: &dyn Copula, n: usize, seed: u64) -> Result<Sample> {
    sample_with(copula, n, &mut rng_from_seed(seed))
}

pub fn sample_with(copula: &dyn Copula, n: usize, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let pairs = (0..n).map(|_| copula.sample_pair(rng)).collect::<Result<Vec<_>>>()?;
    Sample::new(pairs)
}

/// Mean of `y` over `{x ≤ u}` and its standard error.
pub fn mc_ccef_with_error(s: &Sample, u: f64) -> Result<(f64, f64)> {
    let ys: Vec<f64> = s.pairs().iter().filter(|p| p.0 <= u).map(|p| p.1).collect();
    if ys.is_empty() {
        return Err(Error::EmptyConditioningSet { u });
    }
    let k = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / k;
    if ys.len() == 1 {
        return Ok((mean, f64::INFINITY));
    }
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok((mean, (var / k).sqrt()))
}

/// Plain conditional average of `y` over `{x ≤ u}`.
pub fn mc_ccef(s: &Sample, u: f64) -> Result<f64> {
    mc_ccef_with_error(s, u).map(|(m, _)| m)
}

/// Modified Anderson–Darling statistic `A*²` for normality with estimated
/// mean and variance.
pub fn anderson_darling(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return f64::NAN;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let sd = (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if sd == 0.0 {
        return f64::INFINITY;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut z: Vec<f64> = values
        .iter()
        .map(|x| normal.cdf((x - mean) / sd).clamp(1e-300, 1.0 - 1e-16))
        .collect();
    z.sort_by(f64::total_cmp);
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (z[i].ln() + (1.0 - z[n - 1 - i]).ln()))
        .sum();
    let a2 = -nf - s / nf;
    a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf))
}

/// Per-`u` summary of `√n(R̂ − R_C)` over replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub u: f64,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub theory_mean: f64,
    pub theory_var: f64,
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    pub anderson_darling: f64,
}

/// Scaled errors `√n(R̂ − R_C)(u)`, one row per replicate, one column per `u`.
pub fn scaled_errors(
    copula: &dyn Copula,
    m: BernsteinOrder,
    u_list: &[f64],
    cfg: &McConfig,
) -> Result<Vec<Vec<f64>>> {
    let queries = u_list.iter().map(|&u| CcefQuery::new(u)).collect::<Result<Vec<_>>>()?;
    let truth = queries.iter().map(|&q| ccef_closed_form(copula, q)).collect::<Result<Vec<_>>>()?;
    let sqrt_n = (cfg.n as f64).sqrt();
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let s = sample(copula, cfg.n, mix_seed(cfg.seed, r as u64))?;
            let grid = EmpiricalGrid::new(&compute_ranks(&s), m);
            Ok(queries.iter().zip(&truth).map(|(&q, t)| sqrt_n * (grid.ccef(q) - t)).collect())
        })
        .collect()
}

/// Runs `cfg.replicates` independent estimations at order `m` and compares
/// the spread of the scaled errors with the limit moments at `d = √n/m`.
pub fn replicate_experiment(
    copula: &dyn Copula,
    m: BernsteinOrder,
    u_list: &[f64],
    cfg: &McConfig,
    spec: &QuadratureSpec,
) -> Result<Vec<ExperimentSummary>> {
    let rows = scaled_errors(copula, m, u_list, cfg)?;
    let d = (cfg.n as f64).sqrt() / m.get() as f64;
    let reps = cfg.replicates as f64;
    u_list
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let emp_mean = column.iter().sum::<f64>() / reps;
            let emp_var = if cfg.replicates > 1 {
                column.iter().map(|x| (x - emp_mean).powi(2)).sum::<f64>() / (reps - 1.0)
            } else {
                0.0
            };
            Ok(ExperimentSummary {
                u,
                emp_mean,
                emp_var,
                theory_mean: limit_mean(copula, u, d, spec)?,
                theory_var: limit_variance_hkernel(copula, u, spec)?,
                n: cfg.n,
                m: m.get(),
                replicates: cfg.replicates,
                seed: cfg.seed,
                anderson_darling: anderson_darling(&column),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{Fgm, FrechetLower, FrechetUpper, Independence};
    use crate::empirical::empirical_copula_cdf;
    use crate::copula::UnitPoint;

    #[test]
    fn identical_seeds_give_identical_samples() {
        let c = Fgm::new(0.7).unwrap();
        assert_eq!(sample(&c, 500, 9).unwrap(), sample(&c, 500, 9).unwrap());
        assert_ne!(sample(&c, 500, 9).unwrap(), sample(&c, 500, 10).unwrap());
    }

    #[test]
    fn comonotone_sample_lies_on_diagonal() {
        let s = sample(&FrechetUpper, 1000, 3).unwrap();
        assert!(s.pairs().iter().all(|(x, y)| x == y));
    }

    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn fgm_zero_looks_independent() {
        let n = 5000;
        let fgm = sample(&Fgm::new(0.0).unwrap(), n, 11).unwrap();
        let pi = sample(&Independence, n, 12).unwrap();
        let stat = |s: &Sample| s.pairs().iter().map(|(x, y)| x * y).collect::<Vec<_>>();
        let d = ks_two_sample(stat(&fgm), stat(&pi));
        let critical = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < critical, "{d} vs {critical}");
    }

    #[test]
    fn fgm_sampler_reproduces_copula() {
        let n = 100_000;
        let c = Fgm::new(1.0).unwrap();
        let rs = compute_ranks(&sample(&c, n, 2024).unwrap());
        let tol = 3.0 / (n as f64).sqrt();
        let centre = empirical_copula_cdf(&rs, UnitPoint::new(0.5, 0.5).unwrap());
        assert!((centre - 0.3125).abs() < tol);
        for i in 1..10 {
            for j in 1..10 {
                let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
                let got = empirical_copula_cdf(&rs, UnitPoint::new(u, v).unwrap());
                assert!((got - c.cdf(u, v)).abs() <= tol, "({u},{v})");
            }
        }
    }

    #[test]
    fn mc_ccef_on_extremal_copulas() {
        let n = 200_000;
        let m = sample(&FrechetUpper, n, 5).unwrap();
        let w = sample(&FrechetLower, n, 6).unwrap();
        for u in [0.2, 0.4, 0.8] {
            let (got, se) = mc_ccef_with_error(&m, u).unwrap();
            assert!((got - u / 2.0).abs() < 3.0 * se);
            let (got, se) = mc_ccef_with_error(&w, u).unwrap();
            assert!((got - (1.0 - u / 2.0)).abs() < 3.0 * se);
        }
    }

    #[test]
    fn mc_ccef_matches_fgm_closed_form() {
        let s = sample(&Fgm::new(1.0).unwrap(), 1_000_000, 77).unwrap();
        let (got, se) = mc_ccef_with_error(&s, 0.5).unwrap();
        assert!((got - 5.0 / 12.0).abs() < 3.0 * se);
    }

    #[test]
    fn empty_conditioning_set() {
        let s = Sample::new(vec![(0.6, 0.1), (0.9, 0.2)]).unwrap();
        assert_eq!(mc_ccef(&s, 0.5), Err(Error::EmptyConditioningSet { u: 0.5 }));
    }

    #[test]
    fn config_guards() {
        assert!(McConfig::new(0, 1, 5).is_err());
        assert!(McConfig::new(0, 10, 0).is_err());
    }

    #[test]
    fn anderson_darling_accepts_normal_draws() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (1..=200).map(|i| normal.inverse_cdf(i as f64 / 201.0)).collect();
        assert!(anderson_darling(&values) < AD_CRITICAL_1PCT);
        let skewed: Vec<f64> = (1..=200).map(|i| (i as f64 / 20.0).exp()).collect();
        assert!(anderson_darling(&skewed) > AD_CRITICAL_1PCT);
    }

    #[test]
    fn unbiased_regime_mean_near_zero() {
        let c = Fgm::new(1.0).unwrap();
        let cfg = McConfig::new(31, 400, 200).unwrap();
        let rows = replicate_experiment(&c, BernsteinOrder::new(400).unwrap(), &[0.5], &cfg, &QuadratureSpec::default())
            .unwrap();
        let r = rows[0];
        let se = (r.emp_var / r.replicates as f64).sqrt();
        assert!(r.emp_mean.abs() < 3.0 * se, "{r:?}");
        serde_json::to_string(&r).unwrap();
    }
}
