//! Initial surfactant concentration and film height.

use serde::{Deserialize, Serialize};

use super::roughness::{AngularField, AngularPerturbation, Mode};
use crate::error::{Error, Result};

/// Stream id reserved for the initial-height angular field.
pub(crate) const INITIAL_STREAM: u64 = 2;

/// Generalized Heaviside `H(x) = (1 + tanh(K x)) / 2`.
#[inline]
pub fn heaviside(x: f64, k: f64) -> f64 {
    0.5 * (1.0 + (k * x).tanh())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Flat film, `c = (1 - tanh(K (r - R))) / 2`.
    AxisymmetricDrop {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
        steepness: f64,
    },
    /// Flat film, `c = (1 - tanh(K (x - x0))) / 2`.
    PlanarStrip {
        #[serde(default = "one")]
        position: f64,
        steepness: f64,
    },
    /// `h = (1 - x^2 + b) H(1 - x) + b H(x - 1) + exp(-B (x - 1)^2) (offset + sum_k A_k cos(lambda_k y))`,
    /// `c = H(1 - x)`.
    ParabolicStrip {
        precursor: f64,
        steepness: f64,
        ridge_steepness: f64,
        #[serde(default)]
        ridge_offset: f64,
        #[serde(default)]
        modes: Vec<Mode>,
    },
    /// `h = (1 - r^2 + b) H(1 - r) + b H(r - 1) + A(phi) exp(-B (r - 1)^2) + offset`,
    /// `c = H(1 - r)`.
    ParabolicDrop {
        #[serde(default)]
        center: [f64; 2],
        precursor: f64,
        steepness: f64,
        ridge_steepness: f64,
        #[serde(default)]
        height_offset: f64,
        #[serde(default)]
        angular: Option<AngularPerturbation>,
    },
}

fn one() -> f64 {
    1.0
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("initial condition: {name} must be positive, got {v}")))
            }
        };
        match self {
            InitialCondition::AxisymmetricDrop { radius, steepness, .. } => {
                positive("radius", *radius)?;
                positive("steepness", *steepness)
            }
            InitialCondition::PlanarStrip { steepness, .. } => positive("steepness", *steepness),
            InitialCondition::ParabolicStrip { precursor, steepness, ridge_steepness, .. }
            | InitialCondition::ParabolicDrop { precursor, steepness, ridge_steepness, .. } => {
                positive("precursor", *precursor)?;
                positive("steepness", *steepness)?;
                positive("ridge_steepness", *ridge_steepness)
            }
        }
    }
}

/// Initial condition with any random component frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialFields {
    ic: InitialCondition,
    angular: Option<AngularField>,
}

impl InitialFields {
    /// `(c0, h0)` at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        match &self.ic {
            InitialCondition::AxisymmetricDrop { center, radius, steepness } => {
                let r = (x - center[0]).hypot(y - center[1]);
                (0.5 * (1.0 - (steepness * (r - radius)).tanh()), 1.0)
            }
            InitialCondition::PlanarStrip { position, steepness } => {
                (0.5 * (1.0 - (steepness * (x - position)).tanh()), 1.0)
            }
            InitialCondition::ParabolicStrip { precursor: b, steepness: k, ridge_steepness, ridge_offset, modes } => {
                let env = (-ridge_steepness * (x - 1.0).powi(2)).exp();
                let pert: f64 = modes.iter().map(|m| m.amplitude * (m.wavenumber * y).cos()).sum();
                let h = parabolic(x, *b, *k) + env * (ridge_offset + pert);
                (heaviside(1.0 - x, *k), h)
            }
            InitialCondition::ParabolicDrop {
                center,
                precursor: b,
                steepness: k,
                ridge_steepness,
                height_offset,
                ..
            } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                let r = dx.hypot(dy);
                let a = self.angular.as_ref().map_or(0.0, |f| f.at(dx, dy));
                let env = (-ridge_steepness * (r - 1.0).powi(2)).exp();
                let h = parabolic(r, *b, *k) + a * env + height_offset;
                (heaviside(1.0 - r, *k), h)
            }
        }
    }

    pub fn condition(&self) -> &InitialCondition {
        &self.ic
    }
}

fn parabolic(s: f64, b: f64, k: f64) -> f64 {
    (1.0 - s * s + b) * heaviside(1.0 - s, k) + b * heaviside(s - 1.0, k)
}

/// Validates `ic` and freezes its random perturbation from `seed`.
pub fn initial_fields(ic: &InitialCondition, seed: u64) -> Result<InitialFields> {
    ic.validate()?;
    let angular = match ic {
        InitialCondition::ParabolicDrop { angular: Some(spec), .. } => {
            Some(AngularField::sample(spec, seed, INITIAL_STREAM)?)
        }
        _ => None,
    };
    Ok(InitialFields { ic: ic.clone(), angular })
}
