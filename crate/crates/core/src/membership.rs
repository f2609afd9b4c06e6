//! Membership functions used to fuzzify crisp inputs.
//!
//! Numeric inputs (glare index, age) use Gaussian sets. Categorical inputs
//! (activity, chronotype) use singletons: a zero-width set that is fully
//! satisfied by its own code and by nothing else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for a crisp value to match a singleton.
pub const SINGLETON_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MfKind {
    Gaussian,
    Singleton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub label: String,
    pub mean: f64,
    pub sigma: f64,
    pub kind: MfKind,
    /// Whether the mean may be moved by the adaptation law.
    pub adaptable: bool,
}

impl MembershipFunction {
    pub fn gaussian(label: impl Into<String>, mean: f64, sigma: f64) -> Self {
        Self {
            label: label.into(),
            mean,
            sigma,
            kind: MfKind::Gaussian,
            adaptable: true,
        }
    }

    pub fn singleton(label: impl Into<String>, mean: f64) -> Self {
        Self {
            label: label.into(),
            mean,
            sigma: 0.0,
            kind: MfKind::Singleton,
            adaptable: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidMembership {
                label: self.label.clone(),
                reason: reason.to_string(),
            })
        };
        if !self.mean.is_finite() {
            return fail("mean must be finite");
        }
        match self.kind {
            MfKind::Gaussian if !(self.sigma.is_finite() && self.sigma > 0.0) => {
                fail("gaussian sigma must be positive")
            }
            MfKind::Singleton if self.sigma != 0.0 => fail("singleton sigma must be exactly 0"),
            MfKind::Singleton if self.adaptable => fail("singletons cannot be adaptable"),
            _ => Ok(()),
        }
    }

    /// Degree of membership of `x`, in `[0, 1]`.
    pub fn degree(&self, x: f64) -> f64 {
        match self.kind {
            MfKind::Gaussian => {
                let z = (x - self.mean) / self.sigma;
                (-0.5 * z * z).exp()
            }
            MfKind::Singleton => {
                if (x - self.mean).abs() <= SINGLETON_TOLERANCE {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Free-function form of [`MembershipFunction::degree`].
pub fn membership(x: f64, mf: &MembershipFunction) -> f64 {
    mf.degree(x)
}
