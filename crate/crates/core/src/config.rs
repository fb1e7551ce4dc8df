//! TOML scenario configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bspline::{SplineSpace, Topology};
use crate::domain::{build_mesh, Mesh, Rect};
use crate::error::{Error, Result};
use crate::linsolve::SolverConfig;
use crate::model::{InitialCondition, ModelParams, RoughnessSpec};
use crate::timestepping::{StepControls, StepMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Element counts along x and y.
    pub elements: [usize; 2],
    #[serde(default = "d_degree")]
    pub degree: usize,
    /// Periodic directions; non-periodic sides carry the natural and Nitsche conditions.
    #[serde(default)]
    pub periodic: [bool; 2],
    /// Gauss points per direction; defaults to `degree + 1`.
    #[serde(default)]
    pub quad_order: Option<usize>,
}

fn d_degree() -> usize {
    3
}

impl DomainConfig {
    pub fn topology(&self) -> [Topology; 2] {
        self.periodic.map(|p| if p { Topology::Periodic } else { Topology::Open })
    }

    pub fn rect(&self) -> Result<Rect> {
        Rect::new(self.x, self.y)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let space = SplineSpace::uniform(self.elements[0], self.elements[1], self.degree, self.topology())?;
        build_mesh(space, self.rect()?, self.quad_order.unwrap_or(self.degree + 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt_initial: f64,
    #[serde(default = "d_rho")]
    pub rho_inf: f64,
    #[serde(default = "d_mode")]
    pub mode: StepMode,
    /// Start from `M rate = -R(0, S_0)` instead of zero rates.
    #[serde(default)]
    pub consistent_initial_rate: bool,
    #[serde(default)]
    pub controls: StepControls,
}

fn d_rho() -> f64 {
    0.5
}
fn d_mode() -> StepMode {
    StepMode::Adaptive
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontGeometry {
    None,
    /// Outermost `x` averaged over sample rows.
    Planar,
    /// Outermost radius from `front_center`, averaged over rays.
    Radial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    /// Write a snapshot every this many accepted steps.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Write a snapshot at every multiple of this time.
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
    /// Sample points per direction for snapshots and diagnostics.
    #[serde(default = "d_sample")]
    pub sample_n: usize,
    #[serde(default = "d_front")]
    pub front: FrontGeometry,
    #[serde(default)]
    pub front_center: [f64; 2],
    #[serde(default = "d_rays")]
    pub front_rays: usize,
    /// Front threshold relative to max c.
    #[serde(default = "d_threshold")]
    pub front_threshold: f64,
    /// Times at which the integrator stops exactly to record diagnostics.
    #[serde(default)]
    pub record_times: Vec<f64>,
    /// `x` positions of cross-section profiles written at every record time.
    #[serde(default)]
    pub profiles: Vec<f64>,
}

fn d_dir() -> PathBuf {
    PathBuf::from("out")
}
fn d_sample() -> usize {
    129
}
fn d_front() -> FrontGeometry {
    FrontGeometry::None
}
fn d_rays() -> usize {
    64
}
fn d_threshold() -> f64 {
    1e-3
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: d_dir(),
            snapshot_every: None,
            snapshot_interval: None,
            sample_n: d_sample(),
            front: d_front(),
            front_center: [0.0, 0.0],
            front_rays: d_rays(),
            front_threshold: d_threshold(),
            record_times: Vec::new(),
            profiles: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    /// RNG seed; required when any random perturbation is configured.
    #[serde(default)]
    pub seed: Option<u64>,
    pub domain: DomainConfig,
    pub physics: ModelParams,
    #[serde(default)]
    pub roughness: RoughnessSpec,
    pub initial: InitialCondition,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn needs_seed(&self) -> bool {
        let rough = matches!(&self.roughness, RoughnessSpec::RadialModes { angular, .. } if angular.amplitude != 0.0);
        let init = matches!(&self.initial, InitialCondition::ParabolicDrop { angular: Some(_), .. });
        rough || init
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        d.rect()?;
        if d.degree < 1 {
            return Err(Error::config("domain.degree must be at least 1"));
        }
        if d.elements.contains(&0) {
            return Err(Error::config("domain.elements must be positive"));
        }
        if d.quad_order == Some(0) {
            return Err(Error::config("domain.quad_order must be positive"));
        }
        self.physics.validate()?;
        self.initial.validate()?;
        let t = &self.time;
        if !(t.t_final > 0.0 && t.t_final.is_finite()) {
            return Err(Error::config("time.t_final must be positive"));
        }
        if !(t.dt_initial > 0.0 && t.dt_initial <= t.t_final) {
            return Err(Error::config("time.dt_initial must lie in (0, t_final]"));
        }
        crate::timestepping::alpha_parameters(t.rho_inf)?;
        t.controls.validate()?;
        self.solver.validate()?;
        let o = &self.output;
        if o.snapshot_every == Some(0) {
            return Err(Error::config("output.snapshot_every must be positive"));
        }
        if let Some(dt) = o.snapshot_interval {
            if !(dt > 0.0) {
                return Err(Error::config("output.snapshot_interval must be positive"));
            }
        }
        if o.sample_n < 2 {
            return Err(Error::config("output.sample_n must be at least 2"));
        }
        if o.front_rays == 0 || !(o.front_threshold > 0.0 && o.front_threshold < 1.0) {
            return Err(Error::config("output.front_rays must be positive and front_threshold in (0, 1)"));
        }
        if o.record_times.iter().any(|&r| !(r > 0.0 && r <= t.t_final)) {
            return Err(Error::config("output.record_times must lie in (0, t_final]"));
        }
        if o.record_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("output.record_times must be strictly increasing"));
        }
        if self.needs_seed() && self.seed.is_none() {
            return Err(Error::config("missing field `seed` (required for random perturbations)"));
        }
        Ok(())
    }

    /// Uniform refinement to `n` elements along each non-degenerate direction, keeping aspect.
    pub fn with_mesh(mut self, n: usize) -> Self {
        let [nx, ny] = self.domain.elements;
        let scale = n as f64 / nx.max(ny) as f64;
        let ny_new = ((ny as f64 * scale).round() as usize).max(1);
        let nx_new = ((nx as f64 * scale).round() as usize).max(1);
        self.domain.elements = [nx_new, ny_new];
        self
    }

    /// Shortens the horizon, dropping record times beyond it.
    pub fn with_t_final(mut self, t: f64) -> Self {
        self.time.t_final = t;
        self.time.dt_initial = self.time.dt_initial.min(t);
        self.output.record_times.retain(|&r| r <= t);
        self
    }

    pub fn with_fixed_dt(mut self, dt: f64) -> Self {
        self.time.mode = StepMode::Fixed;
        self.time.dt_initial = dt;
        self
    }
}
