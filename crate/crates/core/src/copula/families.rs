use rand::{Rng, RngCore};

use super::{poly_derivative, poly_eval, require_interior, Copula, PartialKind};
use crate::error::{Error, Result};

/// The product copula `Π(u, v) = uv`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Independence;

impl Copula for Independence {
    fn family(&self) -> &'static str {
        "independence"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        Ok(match kind {
            PartialKind::D1 => v,
            PartialKind::D2 => u,
            PartialKind::D11 | PartialKind::D22 => 0.0,
        })
    }

    fn closed_form_ccef(&self, _u: f64) -> Option<f64> {
        Some(0.5)
    }

    fn cross_sections(&self) -> Option<Vec<Vec<f64>>> {
        Some(vec![vec![0.0, 1.0]])
    }

    fn conditional_quantile(&self, _u: f64, t: f64) -> Result<f64> {
        Ok(t)
    }
}

/// Upper Fréchet–Hoeffding bound `M(u, v) = min(u, v)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrechetUpper;

impl Copula for FrechetUpper {
    fn family(&self) -> &'static str {
        "frechet_upper"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        u.min(v)
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        if u == v {
            return Err(Error::NotDifferentiable { u, v });
        }
        Ok(match kind {
            PartialKind::D1 => f64::from(u8::from(u < v)),
            PartialKind::D2 => f64::from(u8::from(v < u)),
            PartialKind::D11 | PartialKind::D22 => 0.0,
        })
    }

    fn kinks(&self, u: f64) -> Vec<f64> {
        vec![u]
    }

    fn closed_form_ccef(&self, u: f64) -> Option<f64> {
        Some(u / 2.0)
    }

    fn conditional_quantile(&self, u: f64, _t: f64) -> Result<f64> {
        Ok(u)
    }
}

/// Lower Fréchet–Hoeffding bound `W(u, v) = max(u + v − 1, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrechetLower;

impl Copula for FrechetLower {
    fn family(&self) -> &'static str {
        "frechet_lower"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        (u + v - 1.0).max(0.0)
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        if u + v == 1.0 || v == 1.0 - u {
            return Err(Error::NotDifferentiable { u, v });
        }
        Ok(match kind {
            PartialKind::D1 | PartialKind::D2 => f64::from(u8::from(u + v > 1.0)),
            PartialKind::D11 | PartialKind::D22 => 0.0,
        })
    }

    fn kinks(&self, u: f64) -> Vec<f64> {
        vec![1.0 - u]
    }

    fn closed_form_ccef(&self, u: f64) -> Option<f64> {
        Some(1.0 - u / 2.0)
    }

    fn conditional_quantile(&self, u: f64, _t: f64) -> Result<f64> {
        Ok(1.0 - u)
    }
}

/// Farlie–Gumbel–Morgenstern: `uv + θ uv(1−u)(1−v)`, `θ ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Fgm {
    theta: f64,
}

impl Fgm {
    pub fn new(theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(Error::ParamOutOfRange {
                constraint: format!("FGM requires theta in [-1, 1], got {theta}"),
            });
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl Copula for Fgm {
    fn family(&self) -> &'static str {
        "fgm"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v + self.theta * u * v * (1.0 - u) * (1.0 - v)
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        let t = self.theta;
        Ok(match kind {
            PartialKind::D1 => v + t * (1.0 - 2.0 * u) * v * (1.0 - v),
            PartialKind::D2 => u + t * (1.0 - 2.0 * v) * u * (1.0 - u),
            PartialKind::D11 => -2.0 * t * v * (1.0 - v),
            PartialKind::D22 => -2.0 * t * u * (1.0 - u),
        })
    }

    fn closed_form_ccef(&self, u: f64) -> Option<f64> {
        Some((3.0 + self.theta * (u - 1.0)) / 6.0)
    }

    fn cross_sections(&self) -> Option<Vec<Vec<f64>>> {
        let t = self.theta;
        Some(vec![vec![0.0, 1.0 + t, -t], vec![0.0, -t, t]])
    }

    /// Root in `[0, 1]` of `a v² + b v − t = 0`, `a = −θ(1−2u)`,
    /// `b = 1 + θ(1−2u)`, in the cancellation-free form `2t / (b + √(b² + 4at))`.
    fn conditional_quantile(&self, u: f64, t: f64) -> Result<f64> {
        let a = -self.theta * (1.0 - 2.0 * u);
        let b = 1.0 + self.theta * (1.0 - 2.0 * u);
        if a.abs() < 1e-12 {
            return Ok(t / b);
        }
        let disc = (b * b + 4.0 * a * t).max(0.0);
        let denom = b + disc.sqrt();
        if denom <= 0.0 {
            return Ok(0.0);
        }
        Ok((2.0 * t / denom).clamp(0.0, 1.0))
    }
}

/// Lin's iterated FGM family
/// `uv + θ uv(1−u)(1−v)(1 + φ(1−u)(1−v))`.
#[derive(Debug, Clone, Copy)]
pub struct LinIteratedFgm {
    theta: f64,
    phi: f64,
}

const LIN_SLACK: f64 = 1e-12;

impl LinIteratedFgm {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() || !(-1.0..=1.0).contains(&theta) {
            return Err(Error::ParamOutOfRange {
                constraint: format!("Lin requires theta in [-1, 1], got {theta}"),
            });
        }
        let (lo, hi) = Self::admissible_range(theta);
        let s = theta * (1.0 + phi);
        if s < lo - LIN_SLACK || s > hi + LIN_SLACK {
            return Err(Error::ParamOutOfRange {
                constraint: format!(
                    "Lin requires {lo} <= theta*(1+phi) <= {hi}, got {s} (theta={theta}, phi={phi})"
                ),
            });
        }
        Ok(Self { theta, phi })
    }

    /// Bounds on `θ(1+φ)` for a given `θ`.
    pub fn admissible_range(theta: f64) -> (f64, f64) {
        let lo = -1.0 - theta;
        let hi = (3.0 - theta + (9.0 - 6.0 * theta - 3.0 * theta * theta).max(0.0).sqrt()) / 2.0;
        (lo, hi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

// f(x) = x(1-x), g(x) = x(1-x)^2 and their derivatives; the Lin copula is
// uv + θ f(u)f(v) + θφ g(u)g(v).
fn quad(x: f64) -> [f64; 3] {
    [x * (1.0 - x), 1.0 - 2.0 * x, -2.0]
}

fn cubic(x: f64) -> [f64; 3] {
    let y = 1.0 - x;
    [x * y * y, 1.0 - 4.0 * x + 3.0 * x * x, -4.0 + 6.0 * x]
}

impl Copula for LinIteratedFgm {
    fn family(&self) -> &'static str {
        "lin"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        let p = (1.0 - u) * (1.0 - v);
        u * v + self.theta * u * v * p * (1.0 + self.phi * p)
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        let (t, tp) = (self.theta, self.theta * self.phi);
        let (fu, gu, fv, gv) = (quad(u), cubic(u), quad(v), cubic(v));
        Ok(match kind {
            PartialKind::D1 => v + t * fu[1] * fv[0] + tp * gu[1] * gv[0],
            PartialKind::D2 => u + t * fu[0] * fv[1] + tp * gu[0] * gv[1],
            PartialKind::D11 => t * fu[2] * fv[0] + tp * gu[2] * gv[0],
            PartialKind::D22 => t * fu[0] * fv[2] + tp * gu[0] * gv[2],
        })
    }

    fn closed_form_ccef(&self, u: f64) -> Option<f64> {
        let (t, p) = (self.theta, self.phi);
        Some((0.5 - t / 6.0 - p * t / 12.0) + (t / 6.0 + t * p / 6.0) * u - (p * t / 12.0) * u * u)
    }

    fn cross_sections(&self) -> Option<Vec<Vec<f64>>> {
        let (t, tp) = (self.theta, self.theta * self.phi);
        Some(vec![
            vec![0.0, 1.0 + t + tp, -t - 2.0 * tp, tp],
            vec![0.0, -t - 2.0 * tp, t + 4.0 * tp, -2.0 * tp],
            vec![0.0, tp, -2.0 * tp, tp],
        ])
    }
}

/// A copula with polynomial cross sections `Σ_{i≥1} α_i(v) uⁱ`.
#[derive(Debug, Clone)]
pub struct PolynomialCrossSection {
    alphas: Vec<Vec<f64>>,
    // derivatives of each α_i in v
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

/// Grid resolution and tolerance of the copula-validity spot check.
const POLY_CHECK_POINTS: usize = 99;
const POLY_CHECK_TOL: f64 = 1e-10;

impl PolynomialCrossSection {
    /// Builds the copula and spot-checks boundary conditions and
    /// 2-increasingness on a grid.
    pub fn new(alphas: Vec<Vec<f64>>) -> Result<Self> {
        if alphas.is_empty() || alphas.iter().all(Vec::is_empty) {
            return Err(Error::ParamOutOfRange {
                constraint: "polynomial cross sections need at least one alpha".into(),
            });
        }
        if alphas.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::ParamOutOfRange {
                constraint: "polynomial coefficients must be finite".into(),
            });
        }
        let first: Vec<Vec<f64>> = alphas.iter().map(|a| poly_derivative(a)).collect();
        let second = first.iter().map(|a| poly_derivative(a)).collect();
        let c = Self { alphas, first, second };
        c.check()?;
        Ok(c)
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    fn check(&self) -> Result<()> {
        let n = POLY_CHECK_POINTS + 1;
        let fail = |what: &str, x: f64, got: f64| Error::ParamOutOfRange {
            constraint: format!("polynomial cross sections violate {what} at {x}: {got}"),
        };
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let checks = [
                ("C(x,0)=0", self.cdf(x, 0.0), 0.0),
                ("C(0,x)=0", self.cdf(0.0, x), 0.0),
                ("C(x,1)=x", self.cdf(x, 1.0), x),
                ("C(1,x)=x", self.cdf(1.0, x), x),
            ];
            for (what, got, want) in checks {
                if (got - want).abs() > POLY_CHECK_TOL {
                    return Err(fail(what, x, got));
                }
            }
        }
        let k = 20;
        for i in 0..k {
            for j in 0..k {
                let (u0, u1) = (i as f64 / k as f64, (i + 1) as f64 / k as f64);
                let (v0, v1) = (j as f64 / k as f64, (j + 1) as f64 / k as f64);
                let vol = self.cdf(u1, v1) - self.cdf(u0, v1) - self.cdf(u1, v0) + self.cdf(u0, v0);
                if vol < -POLY_CHECK_TOL {
                    return Err(fail("2-increasing", u0, vol));
                }
            }
        }
        Ok(())
    }

    fn sum(coeffs: &[Vec<f64>], v: f64, u: f64, u_deriv: u32) -> f64 {
        let mut total = 0.0;
        for (idx, a) in coeffs.iter().enumerate() {
            let power = idx as i32 + 1;
            let factor = match u_deriv {
                0 => u.powi(power),
                1 => power as f64 * u.powi(power - 1),
                _ => (power * (power - 1)) as f64 * u.powi((power - 2).max(0)),
            };
            total += poly_eval(a, v) * factor;
        }
        total
    }
}

impl Copula for PolynomialCrossSection {
    fn family(&self) -> &'static str {
        "polynomial"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        Self::sum(&self.alphas, v, u, 0)
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        require_interior(u, v)?;
        Ok(match kind {
            PartialKind::D1 => Self::sum(&self.alphas, v, u, 1),
            PartialKind::D2 => Self::sum(&self.first, v, u, 0),
            PartialKind::D11 => Self::sum(&self.alphas, v, u, 2),
            PartialKind::D22 => Self::sum(&self.second, v, u, 0),
        })
    }

    fn cross_sections(&self) -> Option<Vec<Vec<f64>>> {
        Some(self.alphas.clone())
    }
}

/// Convex combination `Σ p_γ C_γ`.
#[derive(Debug)]
pub struct Mixture {
    components: Vec<(f64, Box<dyn Copula>)>,
}

/// Allowed deviation of the weight total from one.
pub const MIXTURE_WEIGHT_TOL: f64 = 1e-12;

impl Mixture {
    pub fn new(components: Vec<(f64, Box<dyn Copula>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::ParamOutOfRange {
                constraint: "mixture needs at least one component".into(),
            });
        }
        for (w, _) in &components {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::ParamOutOfRange {
                    constraint: format!("mixture weight {w} outside [0, 1]"),
                });
            }
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
            return Err(Error::ParamOutOfRange {
                constraint: format!("mixture weights sum to {total}, not 1"),
            });
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, Box<dyn Copula>)] {
        &self.components
    }
}

impl Copula for Mixture {
    fn family(&self) -> &'static str {
        "mixture"
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.components.iter().map(|(w, c)| w * c.cdf(u, v)).sum()
    }

    fn partial(&self, kind: PartialKind, u: f64, v: f64) -> Result<f64> {
        let mut total = 0.0;
        for (w, c) in &self.components {
            total += w * c.partial(kind, u, v)?;
        }
        Ok(total)
    }

    fn kinks(&self, u: f64) -> Vec<f64> {
        self.components.iter().flat_map(|(_, c)| c.kinks(u)).collect()
    }

    fn closed_form_ccef(&self, u: f64) -> Option<f64> {
        let mut total = 0.0;
        for (w, c) in &self.components {
            total += w * c.closed_form_ccef(u)?;
        }
        Some(total)
    }

    fn cross_sections(&self) -> Option<Vec<Vec<f64>>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for (w, c) in &self.components {
            let sections = c.cross_sections()?;
            if out.len() < sections.len() {
                out.resize(sections.len(), Vec::new());
            }
            for (acc, alpha) in out.iter_mut().zip(&sections) {
                if acc.len() < alpha.len() {
                    acc.resize(alpha.len(), 0.0);
                }
                for (a, c) in acc.iter_mut().zip(alpha) {
                    *a += w * c;
                }
            }
        }
        Some(out)
    }

    /// Picks a component by weight, then samples it.
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for (w, c) in &self.components {
            acc += w;
            if x < acc {
                return c.sample_pair(rng);
            }
        }
        let (_, last) = self
            .components
            .iter()
            .rev()
            .find(|(w, _)| *w > 0.0)
            .expect("weights sum to one");
        last.sample_pair(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::finite_difference_partial;

    fn families() -> Vec<Box<dyn Copula>> {
        vec![
            Box::new(Independence),
            Box::new(Fgm::new(1.0).unwrap()),
            Box::new(Fgm::new(-0.5).unwrap()),
            Box::new(LinIteratedFgm::new(1.0, -1.0).unwrap()),
            Box::new(LinIteratedFgm::new(0.5, 1.0).unwrap()),
            Box::new(PolynomialCrossSection::new(vec![vec![0.0, 1.3, -0.3], vec![0.0, -0.3, 0.3]]).unwrap()),
        ]
    }

    #[test]
    fn fgm_parameter_range() {
        assert!(matches!(Fgm::new(1.5), Err(Error::ParamOutOfRange { .. })));
        assert!(Fgm::new(-1.0).is_ok());
    }

    #[test]
    fn lin_parameter_range() {
        assert!(LinIteratedFgm::new(1.0, -1.0).is_ok());
        assert!(LinIteratedFgm::new(1.0, 0.0).is_ok());
        assert!(LinIteratedFgm::new(1.0, 0.5).is_err());
        assert!(LinIteratedFgm::new(-1.0, 0.0).is_err());
        assert!(LinIteratedFgm::new(-1.0, -2.0).is_ok());
        assert!(LinIteratedFgm::new(1.2, -1.0).is_err());
    }

    #[test]
    fn worked_values() {
        assert!((Independence.cdf(0.3, 0.7) - 0.21).abs() < 1e-15);
        assert!((Fgm::new(1.0).unwrap().cdf(0.5, 0.5) - 0.3125).abs() < 1e-15);
        assert_eq!(Independence.partial(PartialKind::D1, 0.4, 0.6).unwrap(), 0.6);
        assert_eq!(Independence.partial(PartialKind::D11, 0.4, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn fgm_second_partial_matches_symbolic_form() {
        let c = Fgm::new(0.7).unwrap();
        for &(u, v) in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.1)] {
            let want = -2.0 * 0.7 * v * (1.0 - v);
            assert!((c.partial(PartialKind::D11, u, v).unwrap() - want).abs() < 1e-15);
            let fd = finite_difference_partial(|a, b| c.cdf(a, b), PartialKind::D11, u, v).unwrap();
            assert!((fd - want).abs() < 1e-6, "fd {fd} vs {want}");
        }
    }

    #[test]
    fn frechet_kinks_are_errors() {
        assert!(matches!(
            FrechetUpper.partial(PartialKind::D11, 0.4, 0.4),
            Err(Error::NotDifferentiable { .. })
        ));
        assert!(matches!(
            FrechetLower.partial(PartialKind::D22, 0.25, 0.75),
            Err(Error::NotDifferentiable { .. })
        ));
        assert_eq!(FrechetUpper.partial(PartialKind::D1, 0.3, 0.6).unwrap(), 1.0);
        assert_eq!(FrechetLower.partial(PartialKind::D1, 0.3, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn boundary_identities_on_grid() {
        let mut all = families();
        all.push(Box::new(FrechetUpper));
        all.push(Box::new(FrechetLower));
        for c in &all {
            for i in 1..100 {
                let x = i as f64 / 100.0;
                assert!(c.cdf(x, 0.0).abs() < 1e-12, "{}", c.family());
                assert!(c.cdf(0.0, x).abs() < 1e-12, "{}", c.family());
                assert!((c.cdf(x, 1.0) - x).abs() < 1e-12, "{}", c.family());
                assert!((c.cdf(1.0, x) - x).abs() < 1e-12, "{}", c.family());
            }
        }
    }

    #[test]
    fn analytic_partials_agree_with_finite_differences() {
        for c in families() {
            for i in 1..10 {
                for j in 1..10 {
                    let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
                    for kind in PartialKind::ALL {
                        let a = c.partial(kind, u, v).unwrap();
                        let fd = finite_difference_partial(|x, y| c.cdf(x, y), kind, u, v).unwrap();
                        assert!((a - fd).abs() < 1e-6, "{} {kind:?} at ({u},{v}): {a} vs {fd}", c.family());
                    }
                }
            }
        }
    }

    #[test]
    fn lin_cross_sections_reproduce_cdf() {
        let c = LinIteratedFgm::new(0.5, 1.0).unwrap();
        let poly = PolynomialCrossSection::new(c.cross_sections().unwrap()).unwrap();
        for &(u, v) in &[(0.1, 0.2), (0.5, 0.7), (0.95, 0.3)] {
            assert!((c.cdf(u, v) - poly.cdf(u, v)).abs() < 1e-15);
        }
    }

    #[test]
    fn polynomial_validation_rejects_non_copula() {
        assert!(PolynomialCrossSection::new(vec![vec![0.0, 2.0]]).is_err());
        assert!(PolynomialCrossSection::new(vec![]).is_err());
    }

    #[test]
    fn mixture_weights_checked() {
        let bad = Mixture::new(vec![(0.7, Box::new(Independence)), (0.7, Box::new(FrechetUpper))]);
        assert!(bad.is_err());
        let neg = Mixture::new(vec![(1.5, Box::new(Independence)), (-0.5, Box::new(FrechetUpper))]);
        assert!(neg.is_err());
    }

    #[test]
    fn fgm_quantile_inverts_conditional_cdf() {
        for theta in [-1.0, -0.3, 0.0, 0.6, 1.0] {
            let c = Fgm::new(theta).unwrap();
            for &u in &[0.05, 0.5, 0.93] {
                for &t in &[0.01, 0.4, 0.99] {
                    let v = c.conditional_quantile(u, t).unwrap();
                    let back = c.partial(PartialKind::D1, u, v).unwrap();
                    assert!((back - t).abs() < 1e-12, "theta {theta} u {u} t {t}");
                }
            }
        }
    }
}
