//! Normal distribution functions, multivariate normal probabilities and a
//! bracketing root finder.

mod bivariate;
mod mvn;
mod normal;
pub(crate) mod quad;
mod root;

pub use bivariate::bivariate_normal_cdf;
pub use mvn::{mvn_cdf_qmc, mvn_orthant_product_corr, orthant_probability};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub(crate) use normal::{phi, phi_inv};
pub use root::{find_root_monotone, DEFAULT_ROOT_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::OutOfRange {
                name: "probability",
                value,
                range: "[0, 1]",
            })
        }
    }

    /// Clamps rounding noise into `[0, 1]`. NaN maps to zero.
    pub(crate) fn clamped(value: f64) -> Self {
        Self(if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Point estimate of a stochastic quadrature with the half-width of its
/// 99% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    pub estimate: f64,
    pub half_width: f64,
}

impl ErrorBound {
    pub fn contains(&self, value: f64) -> bool {
        (value - self.estimate).abs() <= self.half_width
    }
}
