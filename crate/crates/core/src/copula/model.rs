use serde::{Deserialize, Serialize};

use super::families::MIXTURE_WEIGHT_TOL;
use super::{
    Copula, FrechetLower, FrechetUpper, Fgm, Independence, LinIteratedFgm, Mixture,
    PolynomialCrossSection,
};
use crate::bernstein::{BernsteinCopula, BernsteinOrder};
use crate::error::{Error, Result};

/// Serializable description of a parametric copula.
///
/// ```json
/// {"family": "fgm", "theta": 1.0}
/// {"family": "mixture", "components": [{"weight": 0.5, "model": {"family": "independence"}}]}
/// {"family": "bernstein", "order": 50, "inner": {"family": "lin", "theta": 1.0, "phi": -1.0}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CopulaModel {
    #[serde(alias = "product", alias = "pi")]
    Independence,
    #[serde(alias = "m", alias = "upper")]
    FrechetUpper,
    #[serde(alias = "w", alias = "lower")]
    FrechetLower,
    Fgm {
        theta: f64,
    },
    #[serde(rename = "lin", alias = "lin_iterated_fgm")]
    LinIteratedFgm {
        theta: f64,
        phi: f64,
    },
    #[serde(rename = "polynomial")]
    PolynomialCrossSection {
        alphas: Vec<Vec<f64>>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
    #[serde(rename = "bernstein")]
    BernsteinOf {
        order: usize,
        inner: Box<CopulaModel>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub model: CopulaModel,
}

impl CopulaModel {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization is infallible")
    }

    /// Checks every parameter constraint, recursing into mixtures and
    /// Bernstein wrappers.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Independence | Self::FrechetUpper | Self::FrechetLower => Ok(()),
            Self::Fgm { theta } => Fgm::new(*theta).map(drop),
            Self::LinIteratedFgm { theta, phi } => LinIteratedFgm::new(*theta, *phi).map(drop),
            Self::PolynomialCrossSection { alphas } => {
                PolynomialCrossSection::new(alphas.clone()).map(drop)
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::ParamOutOfRange {
                        constraint: "mixture needs at least one component".into(),
                    });
                }
                let mut total = 0.0;
                for c in components {
                    if !(0.0..=1.0).contains(&c.weight) {
                        return Err(Error::ParamOutOfRange {
                            constraint: format!("mixture weight {} outside [0, 1]", c.weight),
                        });
                    }
                    total += c.weight;
                    c.model.validate()?;
                }
                if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
                    return Err(Error::ParamOutOfRange {
                        constraint: format!("mixture weights sum to {total}, not 1"),
                    });
                }
                Ok(())
            }
            Self::BernsteinOf { order, inner } => {
                BernsteinOrder::new(*order)?;
                inner.validate()
            }
        }
    }

    /// Validates and compiles the description into an evaluable copula.
    pub fn build(&self) -> Result<Box<dyn Copula>> {
        Ok(match self {
            Self::Independence => Box::new(Independence),
            Self::FrechetUpper => Box::new(FrechetUpper),
            Self::FrechetLower => Box::new(FrechetLower),
            Self::Fgm { theta } => Box::new(Fgm::new(*theta)?),
            Self::LinIteratedFgm { theta, phi } => Box::new(LinIteratedFgm::new(*theta, *phi)?),
            Self::PolynomialCrossSection { alphas } => {
                Box::new(PolynomialCrossSection::new(alphas.clone())?)
            }
            Self::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.model.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(Mixture::new(parts)?)
            }
            Self::BernsteinOf { order, inner } => {
                let m = BernsteinOrder::new(*order)?;
                let inner = inner.build()?;
                Box::new(BernsteinCopula::from_copula(inner.as_ref(), m))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_shapes() {
        let fgm = CopulaModel::from_json(r#"{"family": "fgm", "theta": 1.0}"#).unwrap();
        assert_eq!(fgm, CopulaModel::Fgm { theta: 1.0 });
        let mix = CopulaModel::from_json(
            r#"{"family": "mixture", "components": [
                {"weight": 0.5, "model": {"family": "independence"}},
                {"weight": 0.5, "model": {"family": "fgm", "theta": 1}}]}"#,
        )
        .unwrap();
        assert!(mix.validate().is_ok());
        let b = CopulaModel::from_json(
            r#"{"family": "bernstein", "order": 50, "inner": {"family": "lin", "theta": 1, "phi": -1}}"#,
        )
        .unwrap();
        assert!(matches!(b, CopulaModel::BernsteinOf { order: 50, .. }));
        assert!(CopulaModel::from_json(r#"{"family": "m"}"#).is_ok());
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(CopulaModel::from_json(r#"{"family": "clayton", "theta": 2}"#).is_err());
        assert!(CopulaModel::from_json(r#"{"family": "fgm"}"#).is_err());
        assert!(CopulaModel::from_json("not json").is_err());
    }

    #[test]
    fn validation_examples() {
        let err = CopulaModel::Fgm { theta: 1.5 }.validate().unwrap_err();
        assert!(matches!(err, Error::ParamOutOfRange { ref constraint } if constraint.contains("theta")));
        assert!(CopulaModel::LinIteratedFgm { theta: 1.0, phi: -1.0 }.validate().is_ok());
        let nested = CopulaModel::Mixture {
            components: vec![
                MixtureComponent { weight: 0.5, model: CopulaModel::Independence },
                MixtureComponent { weight: 0.5, model: CopulaModel::Fgm { theta: 2.0 } },
            ],
        };
        assert!(nested.validate().is_err());
        let zero = CopulaModel::BernsteinOf { order: 0, inner: Box::new(CopulaModel::Independence) };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = CopulaModel::BernsteinOf {
            order: 7,
            inner: Box::new(CopulaModel::Mixture {
                components: vec![
                    MixtureComponent { weight: 0.25, model: CopulaModel::FrechetLower },
                    MixtureComponent {
                        weight: 0.75,
                        model: CopulaModel::LinIteratedFgm { theta: 0.5, phi: 1.0 },
                    },
                ],
            }),
        };
        assert_eq!(CopulaModel::from_json(&m.to_json()).unwrap(), m);
    }
}
