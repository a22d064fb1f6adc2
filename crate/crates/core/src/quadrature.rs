//! Adaptive Gauss–Legendre quadrature on `[a, b]` and on the unit square
//! for integrands with a `min(v, v')` kink along the diagonal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of a Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `order`-point rule by Newton iteration on the Legendre
    /// polynomial, starting from the Chebyshev-like initial guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be at least 1");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the rule to a single panel `[a, b]`.
    pub fn panel<F>(&self, f: &mut F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x)?;
        }
        Ok(sum * half)
    }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn default_rule() -> Arc<GaussLegendre> {
    static RULE: OnceLock<Arc<GaussLegendre>> = OnceLock::new();
    RULE.get_or_init(|| Arc::new(GaussLegendre::new(QuadratureSpec::DEFAULT_ORDER)))
        .clone()
}

/// Integration method, tolerance and subdivision budget.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    tolerance: f64,
    max_subdivisions: usize,
    rule: Arc<GaussLegendre>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tolerance: Self::DEFAULT_TOLERANCE,
            max_subdivisions: Self::DEFAULT_SUBDIVISIONS,
            rule: default_rule(),
        }
    }
}

impl QuadratureSpec {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;
    pub const DEFAULT_SUBDIVISIONS: usize = 1 << 14;
    pub const DEFAULT_ORDER: usize = 16;

    pub fn new(tolerance: f64, max_subdivisions: usize, order: usize) -> Result<Self> {
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(Error::InvalidDomain(format!("tolerance {tolerance} must be > 0")));
        }
        if max_subdivisions < 1 {
            return Err(Error::InvalidDomain("subdivisions must be >= 1".into()));
        }
        if order < 1 {
            return Err(Error::InvalidDomain("panel order must be >= 1".into()));
        }
        let rule = if order == Self::DEFAULT_ORDER {
            default_rule()
        } else {
            Arc::new(GaussLegendre::new(order))
        };
        Ok(Self { tolerance, max_subdivisions, rule })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(Error::InvalidDomain(format!("tolerance {tolerance} must be > 0")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_subdivisions(&self) -> usize {
        self.max_subdivisions
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }
}

struct Panel {
    a: f64,
    b: f64,
    coarse: f64,
    fine: f64,
    left: f64,
    right: f64,
}

impl Panel {
    fn error(&self) -> f64 {
        (self.coarse - self.fine).abs()
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // largest error first, ties broken by position so refinement order is fixed
    fn cmp(&self, other: &Self) -> Ordering {
        self.error()
            .total_cmp(&other.error())
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn make_panel<F>(rule: &GaussLegendre, f: &mut F, a: f64, b: f64, coarse: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mid = 0.5 * (a + b);
    let left = rule.panel(f, a, mid)?;
    let right = rule.panel(f, mid, b)?;
    Ok(Panel { a, b, coarse, fine: left + right, left, right })
}

/// Globally adaptive bisection of `[a, b]`; each panel's error is the gap
/// between its one-panel and two-half-panel Gauss–Legendre values.
pub fn try_integrate_1d<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a <= b) {
        return Err(Error::InvalidDomain(format!("integration bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let rule = spec.rule();
    let coarse = rule.panel(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(make_panel(rule, &mut f, a, b, coarse)?);
    let mut total_error = heap.peek().map_or(0.0, Panel::error);
    let mut subdivisions = 1;
    while total_error > spec.tolerance {
        if subdivisions >= spec.max_subdivisions {
            let estimate = sum_panels(heap.into_vec());
            return Err(Error::ToleranceNotReached { estimate, error: total_error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in f64
            let estimate = sum_panels(heap.into_vec()) + worst.fine;
            return Err(Error::ToleranceNotReached { estimate, error: total_error });
        }
        let left = make_panel(rule, &mut f, worst.a, mid, worst.left)?;
        let right = make_panel(rule, &mut f, mid, worst.b, worst.right)?;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // recompute rather than update incrementally to avoid drift
        total_error = heap.iter().map(Panel::error).sum();
    }
    Ok(sum_panels(heap.into_vec()))
}

fn sum_panels(mut panels: Vec<Panel>) -> f64 {
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels.iter().map(|p| p.fine).sum()
}

pub fn integrate_1d<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_1d(|x| Ok(f(x)), a, b, spec)
}

/// Integrates over `[a, b]` treating each point in `breaks` as a panel
/// boundary, so that kinks and jumps at known locations are never
/// straddled by a panel.
pub fn try_integrate_1d_split<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for hi in points.into_iter().chain(std::iter::once(b)) {
        total += try_integrate_1d(&mut f, lo, hi, spec)?;
        lo = hi;
    }
    Ok(total)
}

/// `∫₀¹∫₀¹ f(v, v') dv dv'` computed as the sum of the two triangles
/// `v ≤ v'` and `v > v'` by iterated one-dimensional quadrature.
pub fn try_integrate_2d_min_kink<F>(mut f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    try_integrate_1d(
        |vp| {
            let below = try_integrate_1d(|v| f(v, vp), 0.0, vp, spec)?;
            let above = try_integrate_1d(|v| f(v, vp), vp, 1.0, spec)?;
            Ok(below + above)
        },
        0.0,
        1.0,
        spec,
    )
}

pub fn integrate_2d_min_kink<F>(mut f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    try_integrate_2d_min_kink(|v, vp| Ok(f(v, vp)), spec)
}
