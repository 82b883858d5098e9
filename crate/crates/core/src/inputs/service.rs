use alloc::format;

use crate::error::{Error, Result};
use crate::network::ParameterDomain;
use crate::tangent::Tangent;

/// θ-dependent service time families, all sampled by inverse transform.
#[derive(Clone, Debug, PartialEq)]
pub enum ServiceFamily {
    /// `offset + theta_slope·θ + width·u`.
    ShiftedUniform { offset: f64, theta_slope: f64, width: f64 },
    /// Exponential with mean θ: `−θ·ln(1−u)`.
    ExponentialScale,
    /// `constant + theta_slope·θ`; consumes no uniform.
    Deterministic { constant: f64, theta_slope: f64 },
}

/// Analytic bounds of a family over a parameter domain.
///
/// `nu ≤ τ ≤ mu` for every θ in the domain and every uniform, and
/// `|τ(θ₁) − τ(θ₂)| ≤ λ(ω)|θ₁ − θ₂|` with `λ ≤ lipschitz_sup` and
/// `E[λ] = lipschitz_mean`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyBounds {
    pub nu: f64,
    pub mu: f64,
    pub lipschitz_sup: f64,
    pub lipschitz_mean: f64,
    /// Whether τ is a continuous random variable at each θ.
    pub continuous: bool,
}

impl ServiceFamily {
    /// True when sampling reads the uniform.
    pub fn uses_uniform(&self) -> bool {
        !matches!(self, ServiceFamily::Deterministic { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ServiceFamily::ShiftedUniform { .. } => "shifted_uniform",
            ServiceFamily::ExponentialScale => "exponential_scale",
            ServiceFamily::Deterministic { .. } => "deterministic",
        }
    }

    /// Inverse-transform sample with its exact θ-derivative.
    #[inline]
    pub fn sample(&self, theta: f64, u: f64) -> Tangent {
        match *self {
            ServiceFamily::ShiftedUniform { offset, theta_slope, width } => {
                Tangent::new(offset + theta_slope * theta + width * u, theta_slope)
            }
            ServiceFamily::ExponentialScale => {
                let e = -libm::log1p(-u);
                Tangent::new(theta * e, e)
            }
            ServiceFamily::Deterministic { constant, theta_slope } => {
                Tangent::new(constant + theta_slope * theta, theta_slope)
            }
        }
    }

    pub fn bounds(&self, domain: ParameterDomain) -> FamilyBounds {
        let (lo, hi) = (domain.lo, domain.hi);
        match *self {
            ServiceFamily::ShiftedUniform { offset, theta_slope, width } => {
                let (a, b) = (offset + theta_slope * lo, offset + theta_slope * hi);
                FamilyBounds {
                    nu: a.min(b),
                    mu: a.max(b) + width,
                    lipschitz_sup: theta_slope.abs(),
                    lipschitz_mean: theta_slope.abs(),
                    continuous: width > 0.0,
                }
            }
            // −ln(1−u) is Exp(1): unbounded with unit mean.
            ServiceFamily::ExponentialScale => FamilyBounds {
                nu: 0.0,
                mu: f64::INFINITY,
                lipschitz_sup: f64::INFINITY,
                lipschitz_mean: 1.0,
                continuous: true,
            },
            ServiceFamily::Deterministic { constant, theta_slope } => {
                let (a, b) = (constant + theta_slope * lo, constant + theta_slope * hi);
                FamilyBounds {
                    nu: a.min(b),
                    mu: a.max(b),
                    lipschitz_sup: theta_slope.abs(),
                    lipschitz_mean: theta_slope.abs(),
                    continuous: false,
                }
            }
        }
    }

    /// Checks that every sample is a finite nonnegative time on `domain`.
    pub(crate) fn validate(&self, node: usize, domain: ParameterDomain) -> Result<()> {
        let bad = |reason: alloc::string::String| Err(Error::InvalidService { node: node + 1, reason });
        match *self {
            ServiceFamily::ShiftedUniform { offset, theta_slope, width } => {
                if !(offset.is_finite() && theta_slope.is_finite() && width.is_finite()) {
                    return bad(format!("non-finite parameter"));
                }
                if width < 0.0 {
                    return bad(format!("negative width {width}"));
                }
            }
            ServiceFamily::ExponentialScale => {
                if domain.lo <= 0.0 {
                    return bad(format!("exponential scale needs theta > 0, domain starts at {}", domain.lo));
                }
            }
            ServiceFamily::Deterministic { constant, theta_slope } => {
                if !(constant.is_finite() && theta_slope.is_finite()) {
                    return bad(format!("non-finite parameter"));
                }
            }
        }
        let b = self.bounds(domain);
        if b.nu < 0.0 {
            return bad(format!("service time can be negative (minimum {})", b.nu));
        }
        Ok(())
    }
}
