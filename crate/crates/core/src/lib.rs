//! Cumulative conditional expectation `R_C(u) = E[V | U ≤ u]` of a copula:
//! exact representations, Bernstein approximation, a rank-based estimator,
//! its limit theory and a seeded Monte Carlo oracle.

pub mod asymptotics;
pub mod bernstein;
pub mod ccef;
pub mod copula;
pub mod empirical;
pub mod error;
pub mod mc;
pub mod quadrature;
pub mod validate;

pub use bernstein::{BernsteinCopula, BernsteinOrder};
pub use ccef::{CcefCurve, CcefQuery, Provenance};
pub use copula::{Copula, CopulaModel, UnitPoint};
pub use empirical::{RankedSample, Sample};
pub use error::{Error, Result};
pub use quadrature::QuadratureSpec;
