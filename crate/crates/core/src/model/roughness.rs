//! Substrate roughness `f(x, y)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trigonometric mode `amplitude * cos(wavenumber * s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amplitude: f64,
    pub wavenumber: f64,
}

fn default_bins() -> usize {
    128
}

fn default_angular_amplitude() -> f64 {
    0.01
}

/// Piecewise-constant random function of the polar angle: `n_bins` equal bins with values
/// drawn uniformly from `[-amplitude, amplitude]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularPerturbation {
    #[serde(default = "default_angular_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
}

impl Default for AngularPerturbation {
    fn default() -> Self {
        AngularPerturbation { amplitude: default_angular_amplitude(), n_bins: default_bins() }
    }
}

/// Frozen realization of an [`AngularPerturbation`].
#[derive(Clone, Debug, PartialEq)]
pub struct AngularField {
    values: Vec<f64>,
}

impl AngularField {
    /// Draws the bin values from a ChaCha8 stream keyed by `(seed, stream)`.
    pub fn sample(spec: &AngularPerturbation, seed: u64, stream: u64) -> Result<Self> {
        if spec.n_bins == 0 {
            return Err(Error::config("angular perturbation needs at least one bin"));
        }
        if !(spec.amplitude >= 0.0) {
            return Err(Error::config("angular perturbation amplitude must be non-negative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let a = spec.amplitude;
        let values = (0..spec.n_bins).map(|_| if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 }).collect();
        Ok(AngularField { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value in the bin containing angle `atan2(y, x)`.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let n = self.values.len();
        let phi = y.atan2(x);
        let t = (phi + PI) / (2.0 * PI);
        let bin = ((t * n as f64).floor() as usize).min(n - 1);
        self.values[bin]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RoughnessSpec {
    #[default]
    Zero,
    /// `exp(-B (x - center)^2) * sum_k A_k (cos(lambda_k y) + 1)`.
    GaussianRidgeModes {
        #[serde(default = "one")]
        center: f64,
        steepness: f64,
        modes: Vec<Mode>,
    },
    /// `1/2 sum_k A_k (cos(lambda_k r) + 1) + A(phi) exp(-B (r - radius)^2) - delta`.
    RadialModes {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
        steepness: f64,
        delta: f64,
        modes: Vec<Mode>,
        #[serde(default)]
        angular: AngularPerturbation,
    },
}

fn one() -> f64 {
    1.0
}

/// Stream id reserved for the roughness angular field.
pub(crate) const ROUGHNESS_STREAM: u64 = 1;

/// Roughness with any random component frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct Roughness {
    spec: RoughnessSpec,
    angular: Option<AngularField>,
}

impl Roughness {
    pub fn zero() -> Self {
        Roughness { spec: RoughnessSpec::Zero, angular: None }
    }

    pub fn build(spec: &RoughnessSpec, seed: u64) -> Result<Self> {
        let angular = match spec {
            RoughnessSpec::RadialModes { angular, steepness, .. } => {
                check_steepness(*steepness)?;
                Some(AngularField::sample(angular, seed, ROUGHNESS_STREAM)?)
            }
            RoughnessSpec::GaussianRidgeModes { steepness, .. } => {
                check_steepness(*steepness)?;
                None
            }
            RoughnessSpec::Zero => None,
        };
        Ok(Roughness { spec: spec.clone(), angular })
    }

    pub fn spec(&self) -> &RoughnessSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.spec, RoughnessSpec::Zero)
    }

    /// `(f, [df/dx, df/dy])`; the angular field contributes no gradient.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        match &self.spec {
            RoughnessSpec::Zero => (0.0, [0.0, 0.0]),
            RoughnessSpec::GaussianRidgeModes { center, steepness, modes } => {
                let dx = x - center;
                let env = (-steepness * dx * dx).exp();
                let (mut s, mut ds) = (0.0, 0.0);
                for m in modes {
                    let (sn, cs) = (m.wavenumber * y).sin_cos();
                    s += m.amplitude * (cs + 1.0);
                    ds -= m.amplitude * m.wavenumber * sn;
                }
                (env * s, [-2.0 * steepness * dx * env * s, env * ds])
            }
            RoughnessSpec::RadialModes { center, radius, steepness, delta, modes, .. } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                let r = dx.hypot(dy);
                let a = self.angular.as_ref().map_or(0.0, |f| f.at(dx, dy));
                let env = (-steepness * (r - radius).powi(2)).exp();
                let (mut s, mut ds) = (0.0, 0.0);
                for m in modes {
                    let (sn, cs) = (m.wavenumber * r).sin_cos();
                    s += 0.5 * m.amplitude * (cs + 1.0);
                    ds -= 0.5 * m.amplitude * m.wavenumber * sn;
                }
                let f = s + a * env - delta;
                let dfdr = ds - 2.0 * steepness * (r - radius) * a * env;
                let g = if r > 1e-14 { [dfdr * dx / r, dfdr * dy / r] } else { [0.0, 0.0] };
                (f, g)
            }
        }
    }

    /// Sum of mode amplitudes, the `A_bar` used to offset matching initial heights.
    pub fn total_amplitude(&self) -> f64 {
        match &self.spec {
            RoughnessSpec::Zero => 0.0,
            RoughnessSpec::GaussianRidgeModes { modes, .. } | RoughnessSpec::RadialModes { modes, .. } => {
                modes.iter().map(|m| m.amplitude).sum()
            }
        }
    }
}

fn check_steepness(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("roughness steepness must be positive, got {b}")))
    }
}

/// Roughness value and planar gradient at `(x, y)`.
pub fn roughness_eval(r: &Roughness, x: f64, y: f64) -> (f64, [f64; 2]) {
    r.eval(x, y)
}
