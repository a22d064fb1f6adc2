//! Bernstein polynomial approximation of copulas and of their cumulative
//! conditional expectation, plus the convergence-rate tooling.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::ccef::{reference_ccef, CcefQuery};
use crate::copula::{require_interior, Copula, PartialKind};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Order `m ≥ 1` of a Bernstein approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BernsteinOrder(usize);

impl BernsteinOrder {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ParamOutOfRange { constraint: "Bernstein order must be >= 1".into() });
        }
        Ok(Self(m))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for BernsteinOrder {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        Self::new(m)
    }
}

impl From<BernsteinOrder> for usize {
    fn from(m: BernsteinOrder) -> usize {
        m.0
    }
}

/// Above this order single basis values are computed in log space.
const LOG_SPACE_ORDER: usize = 500;

/// `P_{k,m}(x) = C(m,k) xᵏ (1−x)^{m−k}`.
pub fn bernstein_basis(k: usize, m: BernsteinOrder, x: f64) -> Result<f64> {
    let m = m.get();
    if k > m {
        return Err(Error::IndexOutOfRange { index: k, order: m });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidDomain(format!("Bernstein argument {x} outside [0, 1]")));
    }
    if m > LOG_SPACE_ORDER {
        if x == 0.0 {
            return Ok(f64::from(u8::from(k == 0)));
        }
        if x == 1.0 {
            return Ok(f64::from(u8::from(k == m)));
        }
        let ln = ln_binomial(m as u64, k as u64) + k as f64 * x.ln() + (m - k) as f64 * (-x).ln_1p();
        return Ok(ln.exp());
    }
    let mut binom = 1.0;
    for j in 0..k.min(m - k) {
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    Ok(binom * x.powi(k as i32) * (1.0 - x).powi((m - k) as i32))
}

/// All basis values `P_{0,m}(x), …, P_{m,m}(x)` by the convex-combination
/// recurrence `P_{k,j} = (1−x) P_{k,j−1} + x P_{k−1,j−1}`.
pub fn basis_values(m: usize, x: f64) -> Vec<f64> {
    let y = 1.0 - x;
    let mut b = Vec::with_capacity(m + 1);
    b.push(1.0);
    for j in 1..=m {
        b.push(0.0);
        for k in (1..=j).rev() {
            b[k] = y * b[k] + x * b[k - 1];
        }
        b[0] *= y;
    }
    b
}

/// Weights `w_k` with `dʲ/dxʲ Σ_k a_k P_{k,m}(x) = Σ_k w_k a_k`, for `j ≤ 2`.
pub fn derivative_weights(m: usize, x: f64, order: u32) -> Vec<f64> {
    match order {
        0 => basis_values(m, x),
        1 => {
            let mut w = vec![0.0; m + 1];
            if m >= 1 {
                let q = basis_values(m - 1, x);
                let mf = m as f64;
                for (k, wk) in w.iter_mut().enumerate() {
                    let prev = if k >= 1 { q[k - 1] } else { 0.0 };
                    let cur = q.get(k).copied().unwrap_or(0.0);
                    *wk = mf * (prev - cur);
                }
            }
            w
        }
        2 => {
            let mut w = vec![0.0; m + 1];
            if m >= 2 {
                let r = basis_values(m - 2, x);
                let at = |i: isize| if i < 0 { 0.0 } else { r.get(i as usize).copied().unwrap_or(0.0) };
                let scale = (m * (m - 1)) as f64;
                for (k, wk) in w.iter_mut().enumerate() {
                    let k = k as isize;
                    *wk = scale * (at(k - 2) - 2.0 * at(k - 1) + at(k));
                }
            }
            w
        }
        _ => panic!("derivative order {order} not supported"),
    }
}

/// `Σ_k Σ_l G[k][l] a_k b_l` for an `(m+1)×(m+1)` row-major grid.
fn bilinear(grid: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let width = b.len();
    a.iter()
        .zip(grid.chunks_exact(width))
        .filter(|(ak, _)| **ak != 0.0)
        .map(|(ak, row)| ak * row.iter().zip(b).map(|(g, bl)| g * bl).sum::<f64>())
        .sum()
}

/// `B_m C(u, v) = Σ_k Σ_l G[k][l] P_{k,m}(u) P_{l,m}(v)` for a fixed grid of
/// values `G[k][l]`, usually `C(k/m, l/m)`.
///
/// Its partial derivatives are exact polynomial derivatives, which is what
/// makes it usable as a plug-in for the empirical copula.
#[derive(Debug, Clone)]
pub struct BernsteinCopula {
    order: usize,
    grid: Vec<f64>,
}

impl BernsteinCopula {
    /// Samples `copula` on the uniform grid `(k/m, l/m)`, `k, l = 0..=m`.
    pub fn from_copula(copula: &dyn Copula, m: BernsteinOrder) -> Self {
        let m = m.get();
        let mut grid = Vec::with_capacity((m + 1) * (m + 1));
        for k in 0..=m {
            for l in 0..=m {
                grid.push(copula.cdf(k as f64 / m as f64, l as f64 / m as f64));
            }
        }
        Self { order: m, grid }
    }

    pub fn from_grid(m: BernsteinOrder, grid: Vec<f64>) -> Result<Self> {
        let m = m.get();
        if grid.len() != (m + 1) * (m + 1) {
            return Err(Error::InvalidDomain(format!(
                "grid of length {} does not match order {m}",
                grid.len()
            )));
        }
        Ok(Self { order: m, grid })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid_value(&self, k: usize, l: usize) -> f64 {
        self.grid[k * (self.order + 1) + l]
    }

    fn eval(&self, u: f64, v: f64, du: u32, dv: u32) -> f64 {
        let a = derivative_weights(self.order, u, du);
        let b = derivative_weights(self.order, v, dv);
        bilinear(&self.grid, &a, &b)
    }
}

impl Copula for BernsteinCopula {
    fn family(&self) -> &'static str {
        "bernstein"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.eval(u.clamp(0.0, 1.0), v.clamp(0.0, 1.0), 0, 0)
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        let (du, dv) = match kind {
            PartialKind::D1 => (1, 0),
            PartialKind::D2 => (0, 1),
            PartialKind::D11 => (2, 0),
            PartialKind::D22 => (0, 2),
        };
        Ok(self.eval(u, v, du, dv))
    }
}

fn grid_point(j: usize, m: usize) -> f64 {
    j as f64 / m as f64
}

/// The double Bernstein sum over `k, l = 1..=m` evaluated directly from
/// `copula` (terms with `k = 0` or `l = 0` vanish for a copula).
pub fn bernstein_copula_cdf(copula: &dyn Copula, m: BernsteinOrder, u: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidDomain(format!("({u}, {v}) is outside [0,1]^2")));
    }
    let m = m.get();
    let pu = basis_values(m, u);
    let pv = basis_values(m, v);
    let mut total = 0.0;
    for k in 1..=m {
        let mut row = 0.0;
        for l in 1..=m {
            row += copula.cdf(grid_point(k, m), grid_point(l, m)) * pv[l];
        }
        total += row * pu[k];
    }
    Ok(total)
}

/// `R_{B_m C}` for one copula and order, with the row sums
/// `S_k = Σ_{l=1}^m C(k/m, l/m)` computed once.
#[derive(Debug, Clone)]
pub struct BernsteinCcef {
    order: usize,
    row_sums: Vec<f64>,
}

impl BernsteinCcef {
    pub fn new(copula: &dyn Copula, m: BernsteinOrder) -> Self {
        let m = m.get();
        let mut row_sums = vec![0.0; m + 1];
        for (k, s) in row_sums.iter_mut().enumerate().skip(1) {
            *s = (1..=m).map(|l| copula.cdf(grid_point(k, m), grid_point(l, m))).sum();
        }
        Self { order: m, row_sums }
    }

    /// `1 − (1/((m+1)u)) Σ_{k=1}^m Σ_{l=1}^m C(k/m, l/m) P_{k,m}(u)`.
    pub fn eval(&self, q: CcefQuery) -> f64 {
        let u = q.u();
        let m = self.order;
        let p = basis_values(m, u);
        let sum: f64 = (1..=m).map(|k| self.row_sums[k] * p[k]).sum();
        1.0 - sum / ((m as f64 + 1.0) * u)
    }
}

pub fn ccef_bernstein(copula: &dyn Copula, m: BernsteinOrder, q: CcefQuery) -> f64 {
    BernsteinCcef::new(copula, m).eval(q)
}

/// Uniform approximation bound `7M / (12 u₀ m)` on `[u₀, 1)`.
pub fn rate_bound(lipschitz: f64, u0: f64, m: BernsteinOrder) -> Result<f64> {
    if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
        return Err(Error::InvalidDomain(format!("constant M = {lipschitz} must be >= 0")));
    }
    if !(u0 > 0.0 && u0 < 1.0) {
        return Err(Error::InvalidDomain(format!("u0 = {u0} must lie in (0, 1)")));
    }
    Ok(7.0 * lipschitz / (12.0 * u0 * m.get() as f64))
}

/// Interior grid resolution of [`estimate_lipschitz_constant`].
pub const LIPSCHITZ_GRID: usize = 200;

/// Grid estimate of the constant `M` in [`rate_bound`]: the largest of
/// `|C^{(1,1)}|`, `|C^{(2,2)}|` and the mixed difference quotients of the
/// first partials over a 200×200 interior grid.
pub fn estimate_lipschitz_constant(copula: &dyn Copula) -> Result<f64> {
    let n = LIPSCHITZ_GRID;
    let step = 1.0 / (n + 1) as f64;
    let x: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
    let mut d1 = vec![0.0; n * n];
    let mut d2 = vec![0.0; n * n];
    let mut best = 0.0_f64;
    for (i, &u) in x.iter().enumerate() {
        for (j, &v) in x.iter().enumerate() {
            d1[i * n + j] = copula.partial(PartialKind::D1, u, v)?;
            d2[i * n + j] = copula.partial(PartialKind::D2, u, v)?;
            best = best
                .max(copula.partial(PartialKind::D11, u, v)?.abs())
                .max(copula.partial(PartialKind::D22, u, v)?.abs());
        }
    }
    for i in 0..n {
        for j in 0..n - 1 {
            // C^{(1)} along v and C^{(2)} along u
            best = best.max(((d1[i * n + j + 1] - d1[i * n + j]) / step).abs());
            best = best.max(((d2[(j + 1) * n + i] - d2[j * n + i]) / step).abs());
        }
    }
    Ok(best)
}

/// One cell of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub u: f64,
    pub m: usize,
    pub value: f64,
    pub abs_error: f64,
    pub bound: Option<f64>,
}

/// `|R_C(u) − R_{B_m C}(u)|` for every `(u, m)`; `R_C` from the closed form
/// when available, else by quadrature. With a constant `M`, each row also
/// carries `rate_bound(M, min u, m)`.
pub fn empirical_rate_sweep(
    copula: &dyn Copula,
    u_list: &[f64],
    m_list: &[BernsteinOrder],
    lipschitz: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<Vec<SweepRow>> {
    let queries = u_list.iter().map(|&u| CcefQuery::new(u)).collect::<Result<Vec<_>>>()?;
    let exact = queries
        .iter()
        .map(|&q| reference_ccef(copula, q, spec))
        .collect::<Result<Vec<_>>>()?;
    let u0 = u_list.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::with_capacity(u_list.len() * m_list.len());
    for &m in m_list {
        let approx = BernsteinCcef::new(copula, m);
        let bound = lipschitz.map(|l| rate_bound(l, u0, m)).transpose()?;
        for (q, r) in queries.iter().zip(&exact) {
            let value = approx.eval(*q);
            rows.push(SweepRow { u: q.u(), m: m.get(), value, abs_error: (value - r).abs(), bound });
        }
    }
    Ok(rows)
}
