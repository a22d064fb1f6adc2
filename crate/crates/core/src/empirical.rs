//! Rank-based estimation of the CCEF through the Bernstein-smoothed
//! empirical copula.

use serde::{Deserialize, Serialize};

use crate::bernstein::{basis_values, BernsteinCopula, BernsteinOrder};
use crate::ccef::{CcefCurve, CcefQuery, Provenance};
use crate::copula::UnitPoint;
use crate::error::{Error, Result};

/// Paired observations `(x, y)`; at least two, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pairs: Vec<(f64, f64)>,
}

impl Sample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(index) = pairs.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        if pairs.len() < 2 {
            return Err(Error::InvalidDomain(format!(
                "sample needs at least 2 observations, got {}",
                pairs.len()
            )));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Rank pairs `(R_U, R_V)`, each column a permutation of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedSample {
    ranks: Vec<(usize, usize)>,
}

impl RankedSample {
    /// Checks the permutation invariant.
    pub fn from_ranks(ranks: Vec<(usize, usize)>) -> Result<Self> {
        let n = ranks.len();
        if n < 2 {
            return Err(Error::InvalidDomain("ranked sample needs n >= 2".into()));
        }
        let mut seen_u = vec![false; n + 1];
        let mut seen_v = vec![false; n + 1];
        for &(ru, rv) in &ranks {
            for (r, seen) in [(ru, &mut seen_u), (rv, &mut seen_v)] {
                if r == 0 || r > n || seen[r] {
                    return Err(Error::InvalidDomain(format!("ranks are not a permutation of 1..={n}")));
                }
                seen[r] = true;
            }
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> &[(usize, usize)] {
        &self.ranks
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    /// Number of observations with `R_U / n ≤ u`.
    pub fn support_count(&self, u: f64) -> usize {
        let n = self.n() as f64;
        self.ranks.iter().filter(|(ru, _)| *ru as f64 / n <= u).count()
    }
}

fn ordinal_ranks(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = values.enumerate().collect();
    // stable sort: equal values keep their original order
    idx.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut ranks = vec![0; idx.len()];
    for (rank, (orig, _)) in idx.into_iter().enumerate() {
        ranks[orig] = rank + 1;
    }
    ranks
}

/// Ordinal ranks of each column; ties go to the earlier observation.
pub fn compute_ranks(s: &Sample) -> RankedSample {
    let ru = ordinal_ranks(s.pairs.iter().map(|p| p.0));
    let rv = ordinal_ranks(s.pairs.iter().map(|p| p.1));
    RankedSample { ranks: ru.into_iter().zip(rv).collect() }
}

/// `C_n(u, v) = (1/n) Σ_j 1{R_Uj/n ≤ u} 1{R_Vj/n ≤ v}`.
pub fn empirical_copula_cdf(rs: &RankedSample, p: UnitPoint) -> f64 {
    let n = rs.n() as f64;
    let count = rs
        .ranks
        .iter()
        .filter(|(ru, rv)| *ru as f64 / n <= p.u && *rv as f64 / n <= p.v)
        .count();
    count as f64 / n
}

/// How the Bernstein order is chosen for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OrderRule {
    Explicit { m: BernsteinOrder },
    /// `m = round(√n / d)`; `d = 0` selects `m = n`.
    SqrtN { d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub rule: OrderRule,
    /// Clamp estimates into `[u/2, 1 − u/2]`; off by default.
    pub clamp: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { rule: OrderRule::SqrtN { d: 1.0 }, clamp: false }
    }
}

impl EstimatorConfig {
    pub fn explicit(m: BernsteinOrder) -> Self {
        Self { rule: OrderRule::Explicit { m }, clamp: false }
    }

    pub fn sqrt_n(d: f64) -> Result<Self> {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::InvalidDomain(format!("ratio d = {d} must be >= 0")));
        }
        Ok(Self { rule: OrderRule::SqrtN { d }, clamp: false })
    }
}

pub fn choose_order(n: usize, cfg: &EstimatorConfig) -> BernsteinOrder {
    match cfg.rule {
        OrderRule::Explicit { m } => m,
        OrderRule::SqrtN { d } => {
            let m = if d > 0.0 { ((n as f64).sqrt() / d).round() as usize } else { n };
            BernsteinOrder::new(m.max(1)).expect("order is at least one")
        }
    }
}

/// `C_n(k/m, l/m)` for `k, l = 0..=m`.
#[derive(Debug, Clone)]
pub struct EmpiricalGrid {
    order: usize,
    n: usize,
    values: Vec<f64>,
    // Σ_l C_n(k/m, l/m)
    row_sums: Vec<f64>,
}

impl EmpiricalGrid {
    /// Bins each rank at the smallest grid index `k` with `r/n ≤ k/m`, then
    /// takes two-dimensional cumulative counts: `O(n + m²)`.
    pub fn new(rs: &RankedSample, m: BernsteinOrder) -> Self {
        let (n, m) = (rs.n(), m.get());
        let width = m + 1;
        let cell = |r: usize| (r * m).div_ceil(n);
        let mut counts = vec![0u64; width * width];
        for &(ru, rv) in rs.ranks() {
            counts[cell(ru) * width + cell(rv)] += 1;
        }
        for k in 0..width {
            for l in 1..width {
                counts[k * width + l] += counts[k * width + l - 1];
            }
        }
        for k in 1..width {
            for l in 0..width {
                counts[k * width + l] += counts[(k - 1) * width + l];
            }
        }
        let values: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let row_sums = values.chunks_exact(width).map(|row| row.iter().sum()).collect();
        Self { order: m, n, values, row_sums }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * (self.order + 1) + l]
    }

    /// `1 − (1/((m+1)u)) Σ_{k=0}^m Σ_{l=0}^m C_n(k/m, l/m) P_{k,m}(u)`.
    pub fn ccef(&self, q: CcefQuery) -> f64 {
        let u = q.u();
        let p = basis_values(self.order, u);
        let sum: f64 = self.row_sums.iter().zip(&p).map(|(s, pk)| s * pk).sum();
        1.0 - sum / ((self.order as f64 + 1.0) * u)
    }

    /// The Bernstein-smoothed empirical copula `B_m C_n`.
    pub fn smoothed_copula(&self) -> BernsteinCopula {
        let m = BernsteinOrder::new(self.order).expect("grid order is at least one");
        BernsteinCopula::from_grid(m, self.values.clone()).expect("grid has (m+1)^2 entries")
    }
}

pub fn ccef_estimate(rs: &RankedSample, m: BernsteinOrder, q: CcefQuery) -> f64 {
    EmpiricalGrid::new(rs, m).ccef(q)
}

pub fn ccef_estimate_curve(rs: &RankedSample, m: BernsteinOrder, grid: &[f64]) -> Result<CcefCurve> {
    let g = EmpiricalGrid::new(rs, m);
    CcefCurve::tabulate(grid, Provenance::Estimate { n: rs.n(), m: m.get() }, |q| Ok(g.ccef(q)))
}
