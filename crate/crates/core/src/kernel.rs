//! Collision kernel, weight function and the geometric factor `Y`.
//!
//! The kernel family is
//!
//! ```text
//! σ(p, p1, ω) = |ω·(p1 × p)| σ̃(ω) / [p10 g (1 + g²)^(δ + 1/2)]
//! B           = g sqrt(s) σ / 2
//! m(x, p)     = (1 + |x × p|)^(−(1 + δ)/2) e^(−p0)
//! ```
//!
//! with `δ ∈ (0, 1)` and `σ̃` nonnegative, bounded and continuous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{collision_invariants, Momentum3, Vec3};
use crate::lattice::quadrature::sphere_rule;

/// Angular factor `σ̃(ω)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaTilde {
    Constant { value: f64 },
    /// `base + amplitude · ω_z²`
    Axial { base: f64, amplitude: f64 },
}

impl SigmaTilde {
    #[inline]
    pub fn eval(&self, omega: &Vec3) -> f64 {
        match *self {
            SigmaTilde::Constant { value } => value,
            SigmaTilde::Axial { base, amplitude } => base + amplitude * omega.z * omega.z,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(
            *self,
            SigmaTilde::Constant { value } if value == 0.0
        ) || matches!(*self, SigmaTilde::Axial { base, amplitude } if base == 0.0 && amplitude == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub delta: f64,
    pub sigma_tilde: SigmaTilde,
    /// Constant of the σ̃ integral condition; recorded for reporting only.
    pub c0: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            delta: 0.5,
            sigma_tilde: SigmaTilde::Constant { value: 1.0 },
            c0: 1.0,
        }
    }
}

impl KernelSpec {
    pub fn new(delta: f64, sigma_tilde: SigmaTilde) -> Result<Self> {
        let spec = KernelSpec {
            delta,
            sigma_tilde,
            c0: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidInput(format!("c0 must be positive, got {}", self.c0)));
        }
        // a 10^4-point sample of the sphere
        let sup = sphere_rule(10_000)
            .iter()
            .map(|(omega, _)| self.sigma_tilde.eval(omega))
            .try_fold(0.0f64, |acc, v| {
                if v.is_finite() && v >= 0.0 {
                    Ok(acc.max(v))
                } else {
                    Err(v)
                }
            });
        match sup {
            Ok(_) => Ok(()),
            Err(v) => Err(Error::InvalidInput(format!(
                "sigma_tilde must be finite and nonnegative, found {v}"
            ))),
        }
    }
}

/// `m(x, p) = (1 + |x × p|)^(−(1 + δ)/2) e^(−p0)`.
#[inline]
pub fn weight_m(x: &Vec3, p: &Momentum3, spec: &KernelSpec) -> f64 {
    let cross = x.cross(&p.0).norm();
    (1.0 + cross).powf(-(1.0 + spec.delta) / 2.0) * (-p.energy()).exp()
}

/// Differential cross-section; 0 when `g = 0`.
pub fn cross_section(p: &Momentum3, p1: &Momentum3, omega: &Vec3, spec: &KernelSpec) -> f64 {
    let g = collision_invariants(p, p1).g;
    if g == 0.0 {
        return 0.0;
    }
    omega.dot(&p1.0.cross(&p.0)).abs() * spec.sigma_tilde.eval(omega)
        / (p1.energy() * g * (1.0 + g * g).powf(spec.delta + 0.5))
}

/// `B = g sqrt(s) σ / 2` with the `g` factors cancelled:
/// `sqrt(s) |ω·(p1 × p)| σ̃(ω) / [2 p10 (1 + g²)^(δ + 1/2)]`.
pub fn kernel_b(p: &Momentum3, p1: &Momentum3, omega: &Vec3, spec: &KernelSpec) -> f64 {
    let inv = collision_invariants(p, p1);
    let cross = p1.0.cross(&p.0);
    kernel_b_raw(inv.s, inv.g, p1.energy(), omega.dot(&cross).abs(), spec.sigma_tilde.eval(omega), spec.delta)
}

#[inline]
pub(crate) fn kernel_b_raw(s: f64, g: f64, p10: f64, cross_proj: f64, sigma: f64, delta: f64) -> f64 {
    s.sqrt() * cross_proj * sigma / (2.0 * p10 * (1.0 + g * g).powf(delta + 0.5))
}

/// High-density geometric factor `Y(ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YFactorSpec {
    Constant { y0: f64 },
    /// `Y(ρ) = 1 + b ρ`
    Linear { b: f64 },
}

impl Default for YFactorSpec {
    fn default() -> Self {
        YFactorSpec::Linear { b: 0.3 }
    }
}

impl YFactorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            YFactorSpec::Constant { y0 } if !(y0 > 0.0 && y0.is_finite()) => Err(
                Error::InvalidInput(format!("constant Y requires y0 > 0, got {y0}")),
            ),
            YFactorSpec::Linear { b } if !(b >= 0.0 && b.is_finite()) => Err(Error::InvalidInput(
                format!("linear Y requires b >= 0, got {b}"),
            )),
            _ => Ok(()),
        }
    }

    /// Formula value with no sign check on `rho`. Signed iterates can
    /// produce slightly negative densities inside the solver.
    #[inline]
    pub fn value(&self, rho: f64) -> f64 {
        match *self {
            YFactorSpec::Constant { y0 } => y0,
            YFactorSpec::Linear { b } => 1.0 + b * rho,
        }
    }

    /// Lipschitz constant of `Y` in `ρ`.
    pub fn slope(&self) -> f64 {
        match *self {
            YFactorSpec::Constant { .. } => 0.0,
            YFactorSpec::Linear { b } => b,
        }
    }

    pub fn depends_on_density(&self) -> bool {
        matches!(*self, YFactorSpec::Linear { b } if b != 0.0)
    }
}

pub fn y_factor(rho: f64, spec: &YFactorSpec) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "density must be nonnegative, got {rho}"
        )));
    }
    Ok(spec.value(rho))
}
