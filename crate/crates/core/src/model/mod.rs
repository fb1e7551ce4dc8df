//! Dimensionless thin-film physics: parameters, equations of state, mobilities and the
//! closed-form planar velocities.

pub mod initial;
pub mod roughness;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use initial::{heaviside, initial_fields, InitialCondition, InitialFields};
pub use roughness::{roughness_eval, AngularPerturbation, Mode, Roughness, RoughnessSpec};

/// Surfactant equation of state `sigma(c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Eos {
    Sheludko {
        alpha: f64,
    },
    #[default]
    Linear,
    CubicMultilayer,
}

/// `sigma` with its first two derivatives in `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosValue {
    pub sigma: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Eos {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Eos::Sheludko { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::config(format!("Sheludko equation of state needs alpha > 0, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    /// Evaluates `sigma`, `sigma'` and `sigma''`. No finiteness check; see [`eos_sigma`].
    #[inline]
    pub fn eval(&self, c: f64) -> EosValue {
        match *self {
            Eos::Linear => EosValue { sigma: 1.0 - c, d1: -1.0, d2: 0.0 },
            Eos::Sheludko { alpha } => {
                let theta = sheludko_theta(alpha);
                let s = 1.0 + theta * c;
                let s3 = s * s * s;
                EosValue {
                    sigma: (alpha + 1.0) / s3 - alpha,
                    d1: -3.0 * theta * (alpha + 1.0) / (s3 * s),
                    d2: 12.0 * theta * theta * (alpha + 1.0) / (s3 * s * s),
                }
            }
            Eos::CubicMultilayer => {
                if c > 1.0 {
                    EosValue { sigma: 0.0, d1: 0.0, d2: 0.0 }
                } else {
                    let m = 1.0 - c;
                    EosValue { sigma: m * m * m, d1: -3.0 * m * m, d2: 6.0 * m }
                }
            }
        }
    }
}

/// `Theta(alpha) = ((alpha + 1) / alpha)^(1/3) - 1`.
pub fn sheludko_theta(alpha: f64) -> f64 {
    ((alpha + 1.0) / alpha).cbrt() - 1.0
}

/// Surface tension and its slope at concentration `c`.
pub fn eos_sigma(eos: &Eos, c: f64) -> Result<(f64, f64)> {
    if !c.is_finite() {
        return Err(Error::config(format!("non-finite concentration {c}")));
    }
    let v = eos.eval(c);
    Ok((v.sigma, v.d1))
}

/// Thickness-dependent mobilities `M1 = h`, `M2 = h^2/2`, `M3 = h^3/3` and derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobility {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub dm2: f64,
    pub dm3: f64,
}

impl Mobility {
    #[inline]
    pub fn at(hp: f64) -> Self {
        Mobility { m1: hp, m2: 0.5 * hp * hp, m3: hp * hp * hp / 3.0, dm2: hp, dm3: hp * hp }
    }
}

/// Mobilities at physical thickness `hp`; non-positive thickness is a positivity loss.
pub fn mobility(hp: f64) -> Result<Mobility> {
    if hp.is_nan() || hp <= 0.0 {
        return Err(Error::PositivityLoss { value: hp, x: f64::NAN, y: f64::NAN });
    }
    Ok(Mobility::at(hp))
}

fn default_nitsche_scale() -> f64 {
    5.0
}

/// Dimensionless groups of the reduced model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub capillarity: f64,
    pub gravity: f64,
    pub peclet: f64,
    #[serde(default)]
    pub eos: Eos,
    /// Nitsche penalty is `nitsche_scale / h_e`.
    #[serde(default = "default_nitsche_scale")]
    pub nitsche_scale: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.peclet > 0.0) {
            return Err(Error::config(format!("peclet must be positive, got {}", self.peclet)));
        }
        if !(self.capillarity >= 0.0 && self.capillarity.is_finite()) {
            return Err(Error::config("capillarity must be finite and non-negative"));
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(Error::config("gravity must be finite and non-negative"));
        }
        if !(self.nitsche_scale >= 0.0) {
            return Err(Error::config("nitsche_scale must be non-negative"));
        }
        self.eos.validate()
    }
}

/// Pointwise fields needed by the closed-form velocities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointFields {
    pub c: f64,
    pub grad_c: [f64; 2],
    pub h: f64,
    pub grad_h: [f64; 2],
    pub grad_lap_h: [f64; 2],
    pub f: f64,
}

/// Velocity split into its capillary/gravity ("pressure") and Marangoni contributions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityParts {
    pub pressure: [f64; 2],
    pub marangoni: [f64; 2],
}

impl VelocityParts {
    pub fn total(&self) -> [f64; 2] {
        [self.pressure[0] + self.marangoni[0], self.pressure[1] + self.marangoni[1]]
    }
}

/// Surface and depth-averaged velocity components at a point.
pub fn velocity_parts(p: &PointFields, params: &ModelParams) -> Result<(VelocityParts, VelocityParts)> {
    let hp = p.h - p.f;
    let mob = mobility(hp)?;
    let ds = params.eos.eval(p.c).d1;
    let cap = params.capillarity;
    let drive = [
        cap * (p.grad_lap_h[0] - params.gravity * p.grad_h[0]),
        cap * (p.grad_lap_h[1] - params.gravity * p.grad_h[1]),
    ];
    let grad_sigma = [ds * p.grad_c[0], ds * p.grad_c[1]];
    let surface = VelocityParts {
        pressure: [mob.m2 * drive[0], mob.m2 * drive[1]],
        marangoni: [mob.m1 * grad_sigma[0], mob.m1 * grad_sigma[1]],
    };
    let mean_p = hp * hp / 3.0;
    let mean = VelocityParts {
        pressure: [mean_p * drive[0], mean_p * drive[1]],
        marangoni: [0.5 * hp * grad_sigma[0], 0.5 * hp * grad_sigma[1]],
    };
    Ok((surface, mean))
}

/// Surface velocity `v_s` and depth-averaged velocity `v_bar`.
pub fn surface_velocity(p: &PointFields, params: &ModelParams) -> Result<([f64; 2], [f64; 2])> {
    let (s, m) = velocity_parts(p, params)?;
    Ok((s.total(), m.total()))
}
