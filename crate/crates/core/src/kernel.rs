//! The admissible radial kernels K(r) and the slice kernel K_l(r) = K(√(l² + r²)).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("alpha must lie in (0,2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("beta must be positive and finite, got {0}")]
    BetaOutOfRange(f64),
    #[error("kernel evaluated at non-positive radius {0}")]
    NonPositiveRadius(f64),
    #[error("slice kernel singular at l = 0, r = 0")]
    SingularArgument,
}

/// One of the three supported kernels. Parameters are checked on construction and on deserialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub enum KernelSpec {
    /// r^(-alpha), 0 < alpha < 2
    RieszPower { alpha: f64 },
    /// -r
    NegLinear,
    /// exp(-beta r), beta > 0
    ExpDecay { beta: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RawKernel {
    Riesz { alpha: f64 },
    Neglinear,
    Expdecay { beta: f64 },
}

impl TryFrom<RawKernel> for KernelSpec {
    type Error = KernelError;
    fn try_from(raw: RawKernel) -> Result<Self, KernelError> {
        match raw {
            RawKernel::Riesz { alpha } => KernelSpec::riesz(alpha),
            RawKernel::Neglinear => Ok(KernelSpec::NegLinear),
            RawKernel::Expdecay { beta } => KernelSpec::exp_decay(beta),
        }
    }
}

impl From<KernelSpec> for RawKernel {
    fn from(k: KernelSpec) -> Self {
        match k {
            KernelSpec::RieszPower { alpha } => RawKernel::Riesz { alpha },
            KernelSpec::NegLinear => RawKernel::Neglinear,
            KernelSpec::ExpDecay { beta } => RawKernel::Expdecay { beta },
        }
    }
}

/// c · r^p, a term whose pair integrals scale exactly under dilation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coef: f64,
    pub power: f64,
}

impl KernelSpec {
    pub fn riesz(alpha: f64) -> Result<Self, KernelError> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 2.0 {
            Ok(KernelSpec::RieszPower { alpha })
        } else {
            Err(KernelError::AlphaOutOfRange(alpha))
        }
    }

    pub fn exp_decay(beta: f64) -> Result<Self, KernelError> {
        if beta.is_finite() && beta > 0.0 {
            Ok(KernelSpec::ExpDecay { beta })
        } else {
            Err(KernelError::BetaOutOfRange(beta))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::RieszPower { .. } => "riesz",
            KernelSpec::NegLinear => "neglinear",
            KernelSpec::ExpDecay { .. } => "expdecay",
        }
    }

    /// Bounded kernels accept r = 0.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, KernelSpec::RieszPower { .. })
    }

    /// K > 0 everywhere, which makes D(Ω) positive and monotone under inclusion.
    pub fn is_positive(&self) -> bool {
        !matches!(self, KernelSpec::NegLinear)
    }

    pub fn eval(&self, r: f64) -> Result<f64, KernelError> {
        if r > 0.0 || (r == 0.0 && self.is_bounded()) {
            Ok(self.value(r))
        } else {
            Err(KernelError::NonPositiveRadius(r))
        }
    }

    pub fn eval_deriv(&self, r: f64) -> Result<f64, KernelError> {
        if r > 0.0 {
            Ok(self.deriv(r))
        } else {
            Err(KernelError::NonPositiveRadius(r))
        }
    }

    /// Unchecked K(r) for hot loops.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::RieszPower { alpha } => {
                if alpha == 1.0 {
                    1.0 / r
                } else {
                    r.powf(-alpha)
                }
            }
            KernelSpec::NegLinear => -r,
            KernelSpec::ExpDecay { beta } => (-beta * r).exp(),
        }
    }

    /// Unchecked K'(r).
    #[inline]
    pub fn deriv(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::RieszPower { alpha } => -alpha * r.powf(-alpha - 1.0),
            KernelSpec::NegLinear => -1.0,
            KernelSpec::ExpDecay { beta } => -beta * (-beta * r).exp(),
        }
    }

    /// ∫₀^R K(ρ) ρ dρ, the polar-coordinates primitive used for potentials.
    pub fn radial_moment(&self, big_r: f64) -> f64 {
        match *self {
            KernelSpec::RieszPower { alpha } => big_r.powf(2.0 - alpha) / (2.0 - alpha),
            KernelSpec::NegLinear => -big_r * big_r * big_r / 3.0,
            KernelSpec::ExpDecay { beta } => {
                let x = beta * big_r;
                let v = if x < 0.05 {
                    // 1 - e^{-x}(1+x) = Σ_{k≥2} (-1)^k (k-1) x^k / k!
                    let mut term = x * x / 2.0;
                    let mut s = term;
                    for k in 3..16 {
                        term *= -x / k as f64;
                        s += term * (k - 1) as f64;
                    }
                    s
                } else {
                    -(-x).exp_m1() - x * (-x).exp()
                };
                v / (beta * beta)
            }
        }
    }

    /// Exponent p with D(λΩ) = λ^(4+p) D(Ω), when the kernel is homogeneous.
    pub fn homogeneity(&self) -> Option<f64> {
        match *self {
            KernelSpec::RieszPower { alpha } => Some(-alpha),
            KernelSpec::NegLinear => Some(1.0),
            KernelSpec::ExpDecay { .. } => None,
        }
    }

    /// Splits K into non-smooth power terms plus a remainder that is C⁸ at r = 0.
    pub fn power_terms(&self) -> Vec<PowerTerm> {
        match *self {
            KernelSpec::RieszPower { alpha } => vec![PowerTerm { coef: 1.0, power: -alpha }],
            KernelSpec::NegLinear => vec![PowerTerm { coef: -1.0, power: 1.0 }],
            // odd Taylor terms of e^{-βr} are the ones that are not smooth in x, y
            KernelSpec::ExpDecay { beta } => [(1, 1.0), (3, 6.0), (5, 120.0), (7, 5040.0)]
                .iter()
                .map(|&(k, f)| PowerTerm { coef: -beta.powi(k) / f, power: k as f64 })
                .collect(),
        }
    }

    /// K(r) minus its power terms.
    #[inline]
    pub fn remainder(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::ExpDecay { beta } => {
                let x = beta * r;
                let x2 = x * x;
                (-x).exp() + x * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0)))
            }
            _ => 0.0,
        }
    }

    pub fn has_remainder(&self) -> bool {
        matches!(self, KernelSpec::ExpDecay { .. })
    }

    pub fn slice(&self, l: f64) -> SliceKernel {
        SliceKernel { base: *self, l: l.abs() }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::RieszPower { alpha: 1.0 }
    }
}

/// K_l(r) = K(√(l² + r²)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceKernel {
    pub base: KernelSpec,
    pub l: f64,
}

impl SliceKernel {
    pub fn eval(&self, r: f64) -> Result<f64, KernelError> {
        if self.l == 0.0 && r == 0.0 && !self.base.is_bounded() {
            return Err(KernelError::SingularArgument);
        }
        Ok(self.base.value(self.l.hypot(r)))
    }

    /// d/dr K_l(r) = K'(ρ) r / ρ with ρ = √(l² + r²).
    pub fn eval_deriv(&self, r: f64) -> Result<f64, KernelError> {
        let rho = self.l.hypot(r);
        if rho == 0.0 {
            return Err(KernelError::SingularArgument);
        }
        Ok(self.base.deriv(rho) * r / rho)
    }
}

pub fn eval(kernel: &KernelSpec, r: f64) -> Result<f64, KernelError> {
    kernel.eval(r)
}

pub fn eval_deriv(kernel: &KernelSpec, r: f64) -> Result<f64, KernelError> {
    kernel.eval_deriv(r)
}

pub fn slice_eval(slice: &SliceKernel, r: f64) -> Result<f64, KernelError> {
    slice.eval(r)
}
