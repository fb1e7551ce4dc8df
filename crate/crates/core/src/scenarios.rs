//! Built-in scenarios at full resolution with desk-scale overrides.

use std::f64::consts::PI;

use crate::config::{DomainConfig, FrontGeometry, OutputConfig, ScenarioConfig, TimeConfig};
use crate::error::{Error, Result};
use crate::linsolve::SolverConfig;
use crate::model::{AngularPerturbation, Eos, InitialCondition, Mode, ModelParams, RoughnessSpec};
use crate::timestepping::{StepControls, StepMode};

/// Which variant of a built-in scenario to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Mesh and horizon of the reference computations.
    Full,
    /// Coarser mesh and shorter horizon for a workstation.
    Desk,
}

pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn(Profile) -> ScenarioConfig,
}

impl Scenario {
    pub fn config(&self, profile: Profile) -> ScenarioConfig {
        (self.build)(profile)
    }
}

pub const SCENARIOS: [Scenario; 8] = [
    Scenario {
        name: "similarity-strip",
        summary: "planar surfactant strip on a flat film, front ~ t^(1/3)",
        build: similarity_strip,
    },
    Scenario {
        name: "similarity-drop",
        summary: "axisymmetric surfactant drop on a flat film, front ~ t^(1/4)",
        build: similarity_drop,
    },
    Scenario {
        name: "drop-spreading",
        summary: "drop with capillarity, gravity and surface diffusion, fixed steps",
        build: drop_spreading,
    },
    Scenario {
        name: "rough-mode-7",
        summary: "strip over a single-mode rough ridge, wavenumber 7",
        build: |p| rough_mode(p, 7.0),
    },
    Scenario {
        name: "rough-mode-20",
        summary: "strip over a single-mode rough ridge, wavenumber 20",
        build: |p| rough_mode(p, 20.0),
    },
    Scenario {
        name: "strip-fingering",
        summary: "strip with a four-mode height perturbation on a smooth substrate",
        build: strip_fingering,
    },
    Scenario {
        name: "drop-fingering-smooth",
        summary: "drop with a random angular height perturbation on a smooth substrate",
        build: drop_fingering_smooth,
    },
    Scenario {
        name: "drop-fingering-rough",
        summary: "drop on a radially rough substrate with a random angular component",
        build: drop_fingering_rough,
    },
];

pub fn find(name: &str) -> Result<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name).ok_or_else(|| {
        let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
        Error::Config(format!("unknown scenario `{name}` (known: {})", names.join(", ")))
    })
}

fn thin_film() -> ModelParams {
    ModelParams { capillarity: 1e-4, gravity: 0.0, peclet: 1e4, eos: Eos::Linear, nitsche_scale: 5.0 }
}

fn time(t_final: f64, dt: f64) -> TimeConfig {
    TimeConfig {
        t_final,
        dt_initial: dt,
        rho_inf: 0.5,
        mode: StepMode::Adaptive,
        consistent_initial_rate: false,
        controls: StepControls::default(),
    }
}

fn domain(x: [f64; 2], y: [f64; 2], elements: [usize; 2], periodic: [bool; 2]) -> DomainConfig {
    DomainConfig { x, y, elements, degree: 3, periodic, quad_order: None }
}

/// Geometric record times `2^(k/2)` in `[t0, t1]`.
pub fn geometric_times(t0: f64, t1: f64) -> Vec<f64> {
    (-20..=40)
        .map(|k| 2f64.powf(k as f64 / 2.0))
        .filter(|&t| t >= t0 * (1.0 - 1e-12) && t <= t1 * (1.0 + 1e-12))
        .collect()
}

fn base(name: &str, domain: DomainConfig, initial: InitialCondition, time: TimeConfig) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        seed: None,
        domain,
        physics: thin_film(),
        roughness: RoughnessSpec::Zero,
        initial,
        time,
        solver: SolverConfig::default(),
        output: OutputConfig { dir: format!("out/{name}").into(), ..OutputConfig::default() },
    }
}

fn similarity_strip(p: Profile) -> ScenarioConfig {
    let (elements, tf) = match p {
        Profile::Full => ([256, 256], 128.0),
        Profile::Desk => ([128, 16], 64.0),
    };
    let mut c = base(
        "similarity-strip",
        domain([0.0, 16.0], [0.0, 16.0], elements, [false, true]),
        InitialCondition::PlanarStrip { position: 1.0, steepness: 10.0 },
        time(tf, 1e-4),
    );
    c.output.front = FrontGeometry::Planar;
    c.output.record_times = geometric_times(0.5, tf);
    c.output.sample_n = 257;
    c
}

fn similarity_drop(p: Profile) -> ScenarioConfig {
    let (elements, tf) = match p {
        Profile::Full => ([256, 256], 128.0),
        Profile::Desk => ([128, 128], 64.0),
    };
    let mut c = base(
        "similarity-drop",
        domain([-8.0, 8.0], [-8.0, 8.0], elements, [false, false]),
        InitialCondition::AxisymmetricDrop { center: [0.0, 0.0], radius: 1.0, steepness: 10.0 },
        time(tf, 1e-4),
    );
    c.output.front = FrontGeometry::Radial;
    c.output.record_times = geometric_times(0.5, tf);
    c.output.sample_n = 257;
    c
}

fn drop_spreading(p: Profile) -> ScenarioConfig {
    // fixed steps scale with the element size
    let (elements, tf, dt) = match p {
        Profile::Full => ([256, 256], 50.0, 0.01),
        Profile::Desk => ([128, 128], 20.0, 0.02),
    };
    let mut c = base(
        "drop-spreading",
        domain([-8.0, 8.0], [-8.0, 8.0], elements, [false, false]),
        InitialCondition::AxisymmetricDrop { center: [0.0, 0.0], radius: 1.0, steepness: 4.0 },
        time(tf, dt),
    );
    c.physics = ModelParams { capillarity: 0.013, gravity: 20.846, peclet: 1e5 / 3.0, ..thin_film() };
    c.time.mode = StepMode::Fixed;
    c.output.front = FrontGeometry::Radial;
    c.output.record_times = (1..=(tf / 2.5) as usize).map(|k| k as f64 * 2.5).collect();
    c.output.profiles = vec![0.0];
    c
}

const STRIP_MODES: [(f64, f64); 4] = [(0.01, 2.0), (0.01, 5.0), (0.01, 7.0), (0.005, 20.0)];

fn modes(list: &[(f64, f64)]) -> Vec<Mode> {
    list.iter().map(|&(amplitude, wavenumber)| Mode { amplitude, wavenumber }).collect()
}

fn fingering_strip(name: &str, p: Profile, full_tf: f64, desk_tf: f64, initial: InitialCondition) -> ScenarioConfig {
    let (elements, tf) = match p {
        Profile::Full => ([512, 512], full_tf),
        Profile::Desk => ([128, 128], desk_tf),
    };
    let mut c = base(name, domain([0.0, 2.0 * PI], [0.0, 2.0 * PI], elements, [false, true]), initial, time(tf, 1e-4));
    c.output.front = FrontGeometry::Planar;
    c.output.record_times = (1..=(tf / 10.0) as usize).map(|k| k as f64 * 10.0).collect();
    c.output.profiles = vec![1.0, 1.5, 2.0, 2.5];
    c.output.sample_n = 257;
    c
}

fn rough_mode(p: Profile, lambda: f64) -> ScenarioConfig {
    let a_bar = 0.035;
    let initial = InitialCondition::ParabolicStrip {
        precursor: 0.05,
        steepness: 20.0,
        ridge_steepness: 5.0,
        ridge_offset: a_bar,
        modes: Vec::new(),
    };
    let name = if lambda == 7.0 { "rough-mode-7" } else { "rough-mode-20" };
    let mut c = fingering_strip(name, p, 100.0, 50.0, initial);
    c.roughness = RoughnessSpec::GaussianRidgeModes {
        center: 1.0,
        steepness: 5.0,
        modes: vec![Mode { amplitude: a_bar, wavenumber: lambda }],
    };
    c
}

fn strip_fingering(p: Profile) -> ScenarioConfig {
    let initial = InitialCondition::ParabolicStrip {
        precursor: 0.05,
        steepness: 20.0,
        ridge_steepness: 5.0,
        ridge_offset: 0.0,
        modes: modes(&STRIP_MODES),
    };
    let mut c = fingering_strip("strip-fingering", p, 100.0, 40.0, initial);
    c.domain.elements = match p {
        Profile::Full => [256, 256],
        Profile::Desk => [128, 128],
    };
    c
}

fn fingering_drop(name: &str, p: Profile, initial: InitialCondition) -> ScenarioConfig {
    let (elements, tf) = match p {
        Profile::Full => ([512, 512], 120.0),
        Profile::Desk => ([128, 128], 30.0),
    };
    let mut c = base(name, domain([-4.5, 4.5], [-4.5, 4.5], elements, [true, true]), initial, time(tf, 1e-4));
    c.seed = Some(1);
    c.output.front = FrontGeometry::Radial;
    c.output.record_times = (1..=(tf / 10.0) as usize).map(|k| k as f64 * 10.0).collect();
    c.output.profiles = vec![0.0];
    c.output.sample_n = 257;
    c
}

fn drop_fingering_smooth(p: Profile) -> ScenarioConfig {
    fingering_drop(
        "drop-fingering-smooth",
        p,
        InitialCondition::ParabolicDrop {
            center: [0.0, 0.0],
            precursor: 0.05,
            steepness: 20.0,
            ridge_steepness: 5.0,
            height_offset: 0.0,
            angular: Some(AngularPerturbation::default()),
        },
    )
}

fn drop_fingering_rough(p: Profile) -> ScenarioConfig {
    let a_bar: f64 = STRIP_MODES.iter().map(|m| m.0).sum();
    let mut c = fingering_drop(
        "drop-fingering-rough",
        p,
        InitialCondition::ParabolicDrop {
            center: [0.0, 0.0],
            precursor: 0.05,
            steepness: 20.0,
            ridge_steepness: 5.0,
            height_offset: 0.5 * a_bar,
            angular: None,
        },
    );
    c.roughness = RoughnessSpec::RadialModes {
        center: [0.0, 0.0],
        radius: 1.0,
        steepness: 5.0,
        delta: 0.005,
        modes: modes(&STRIP_MODES),
        angular: AngularPerturbation::default(),
    };
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_scenarios_validate_and_round_trip() {
        for s in &SCENARIOS {
            for p in [Profile::Full, Profile::Desk] {
                let c = s.config(p);
                c.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
                assert_eq!(c.name, s.name);
                let back = ScenarioConfig::from_toml(&c.to_toml()).unwrap();
                assert_eq!(back, c, "{}", s.name);
            }
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(find("rough-mode-20").unwrap().name, "rough-mode-20");
        let e = find("nope").err().unwrap();
        assert!(e.to_string().contains("similarity-strip"));
    }

    #[test]
    fn desk_profiles_are_coarser() {
        for s in &SCENARIOS {
            let (f, d) = (s.config(Profile::Full), s.config(Profile::Desk));
            assert!(d.domain.elements[0] <= f.domain.elements[0]);
            assert!(d.time.t_final <= f.time.t_final);
        }
        assert_eq!(find("similarity-strip").unwrap().config(Profile::Desk).domain.elements, [128, 16]);
        assert_eq!(find("drop-spreading").unwrap().config(Profile::Desk).time.dt_initial, 0.02);
    }

    #[test]
    fn strip_initial_height_at_origin() {
        let c = find("strip-fingering").unwrap().config(Profile::Desk);
        let f = crate::model::initial_fields(&c.initial, 0).unwrap();
        // the perturbation is localized at x = 1; at x = 0 it is exp(-5) times the mode sum
        let pert: f64 = STRIP_MODES.iter().map(|m| m.0).sum::<f64>() * (-5.0f64).exp();
        let (_, h) = f.eval(0.0, 0.0);
        assert!((h - (1.05 + pert)).abs() < 1e-6, "{h}");
    }

    #[test]
    fn geometric_record_times() {
        let t = geometric_times(8.0, 64.0);
        assert_eq!(t.len(), 7);
        assert!((t[0] - 8.0).abs() < 1e-12 && (t[6] - 64.0).abs() < 1e-12);
    }
}
