//! Runs a scenario end to end: projection, time integration, diagnostics and files.

use std::time::Instant;

use serde::Serialize;

use crate::assembly::Assembler;
use crate::config::{FrontGeometry, ScenarioConfig};
use crate::error::{Error, Result};
use crate::linsolve::LinearSolver;
use crate::model::{initial_fields, Roughness};
use crate::output::{csv_text, vtk_text, OutputDir};
use crate::postprocess::{
    leading_edge, mass_integrals, profile_at_x, sample_fields, FieldSample, FrontSeries, FrontSpec,
};
use crate::timestepping::{alpha_parameters, Integrator, StepReport};

/// Assembler plus projected initial state for a scenario.
pub struct Prepared {
    pub assembler: Assembler,
    pub values: Vec<f64>,
}

/// Builds the discretization and projects the initial fields.
pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mesh = cfg.domain.mesh()?;
    let roughness = Roughness::build(&cfg.roughness, cfg.seed())?;
    let assembler = Assembler::new(mesh, cfg.physics, roughness)?;
    let init = initial_fields(&cfg.initial, cfg.seed())?;
    let mut values = assembler.l2_project(|x, y| init.eval(x, y).0)?;
    values.extend(assembler.l2_project(|x, y| init.eval(x, y).1)?);
    if !assembler.roughness().is_zero() {
        let s = sample_fields(assembler.mesh(), assembler.roughness(), &values, cfg.output.sample_n)?;
        let max_f = s.h.iter().zip(&s.hp).map(|(h, hp)| h - hp).fold(f64::NEG_INFINITY, f64::max);
        let min_hp = s.hp.iter().copied().fold(f64::INFINITY, f64::min);
        if max_f >= 0.5 * min_hp {
            log::warn!("roughness is not small against the film: max f = {max_f:.3e}, min h - f = {min_hp:.3e}");
        }
    }
    Ok(Prepared { assembler, values })
}

/// Diagnostics at one record time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub front: Option<f64>,
    pub surfactant: f64,
    pub fluid: f64,
    pub max_h: f64,
    pub min_h: f64,
    pub min_hp: f64,
}

/// Everything handed to a record observer.
pub struct RecordView<'a> {
    pub record: &'a Record,
    pub assembler: &'a Assembler,
    pub values: &'a [f64],
    pub sample: &'a FieldSample,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRow {
    pub t: f64,
    pub dt: f64,
    pub error: f64,
    pub newton_iterations: usize,
    pub estimator_iterations: usize,
    pub rejections: usize,
}

impl From<&StepReport> for StepRow {
    fn from(r: &StepReport) -> Self {
        StepRow {
            t: r.t,
            dt: r.dt,
            error: r.error,
            newton_iterations: r.newton_iterations,
            estimator_iterations: r.estimator_iterations,
            rejections: r.rejections,
        }
    }
}

/// Result of a completed run.
pub struct RunOutcome {
    pub records: Vec<Record>,
    pub front: FrontSeries,
    /// `(t, surfactant, fluid)` after every accepted step, starting at `t = 0`.
    pub mass: Vec<[f64; 3]>,
    pub steps: Vec<StepRow>,
    pub rejected: usize,
    pub snapshots: usize,
    pub wall_seconds: f64,
    pub assembler: Assembler,
    pub values: Vec<f64>,
}

impl RunOutcome {
    /// Largest relative drift of the two mass integrals over the run.
    pub fn mass_drift(&self) -> (f64, f64) {
        let m0 = self.mass[0];
        self.mass.iter().fold((0.0f64, 0.0f64), |(a, b), m| {
            (a.max(((m[1] - m0[1]) / m0[1]).abs()), b.max(((m[2] - m0[2]) / m0[2]).abs()))
        })
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    name: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    status: String,
    t_reached: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    wall_seconds: f64,
    config: &'a ScenarioConfig,
}

fn front_spec(cfg: &ScenarioConfig) -> Option<FrontSpec> {
    match cfg.output.front {
        FrontGeometry::None => None,
        FrontGeometry::Planar => Some(FrontSpec::Planar),
        FrontGeometry::Radial => {
            Some(FrontSpec::Radial { center: cfg.output.front_center, rays: cfg.output.front_rays })
        }
    }
}

/// Sorted stop times: record times, snapshot interval multiples and the final time.
fn stop_times(cfg: &ScenarioConfig) -> Vec<f64> {
    let tf = cfg.time.t_final;
    let mut t: Vec<f64> = cfg.output.record_times.clone();
    if let Some(dt) = cfg.output.snapshot_interval {
        let n = (tf / dt + 1e-9).floor() as usize;
        t.extend((1..=n).map(|k| k as f64 * dt));
    }
    t.push(tf);
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * tf);
    t
}

fn is_member(t: f64, set: &[f64], scale: f64) -> bool {
    set.iter().any(|&s| (s - t).abs() <= 1e-9 * scale)
}

/// Runs `cfg`, writing the output tree when `out` is set and calling `observe` at record times.
pub fn run_with(
    cfg: &ScenarioConfig,
    out: Option<&OutputDir>,
    observe: &mut dyn FnMut(&RecordView),
) -> Result<RunOutcome> {
    let started = Instant::now();
    let Prepared { assembler, values } = prepare(cfg)?;
    let alpha = alpha_parameters(cfg.time.rho_inf)?;
    let n = assembler.n_dofs();
    let mut it = Integrator::new(
        &assembler,
        LinearSolver::new(cfg.solver),
        alpha,
        cfg.time.controls,
        cfg.time.mode,
        values,
        vec![0.0; n],
        cfg.time.dt_initial,
    )?;
    if cfg.time.consistent_initial_rate {
        it.make_rates_consistent()?;
    }
    let tf = cfg.time.t_final;
    let front = front_spec(cfg);
    let mut series = FrontSeries::default();
    let mut records = Vec::new();
    let (m0c, m0h) = mass_integrals(&assembler, &it.values);
    let mut mass = vec![[0.0, m0c, m0h]];
    let mut steps: Vec<StepRow> = Vec::new();
    let mut snapshots = 0;
    let mut profiles: Vec<Vec<[f64; 6]>> = vec![Vec::new(); cfg.output.profiles.len()];
    let snap_times: Vec<f64> = match cfg.output.snapshot_interval {
        Some(dt) => (1..=((tf / dt + 1e-9).floor() as usize)).map(|k| k as f64 * dt).collect(),
        None => Vec::new(),
    };

    let mut status = Ok(());
    'outer: for t_stop in stop_times(cfg) {
        while it.t < t_stop {
            let rep = match it.advance(t_stop) {
                Ok(r) => r,
                Err(e) => {
                    status = Err(e);
                    break 'outer;
                }
            };
            steps.push(StepRow::from(&rep));
            let (mc, mh) = mass_integrals(&assembler, &it.values);
            mass.push([it.t, mc, mh]);
            log::info!(
                "t = {:.6e}  dt = {:.3e}  e = {:.3}  newton = {}+{}  rejected = {}",
                rep.t,
                rep.dt,
                rep.error,
                rep.newton_iterations,
                rep.estimator_iterations,
                rep.rejections
            );
            let by_count = cfg.output.snapshot_every.is_some_and(|k| it.accepted % k == 0);
            let by_time = it.t == t_stop && is_member(it.t, &snap_times, tf);
            if let (Some(dir), true) = (out, by_count || by_time) {
                let s = sample_fields(assembler.mesh(), assembler.roughness(), &it.values, cfg.output.sample_n)?;
                dir.write(&format!("snapshot_{snapshots:05}.vtk"), &vtk_text(&s, &format!("t = {:e}", it.t)))?;
                snapshots += 1;
            }
        }
        if is_member(t_stop, &cfg.output.record_times, tf) || t_stop == tf {
            let s = sample_fields(assembler.mesh(), assembler.roughness(), &it.values, cfg.output.sample_n)?;
            let position = match front {
                Some(spec) => Some(leading_edge(&s, spec, cfg.output.front_threshold)?),
                None => None,
            };
            if let Some(p) = position {
                series.push(it.t, p);
            }
            let (mc, mh) = mass_integrals(&assembler, &it.values);
            let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().cloned().fold(init, f);
            let rec = Record {
                t: it.t,
                front: position,
                surfactant: mc,
                fluid: mh,
                max_h: fold(&s.h, f64::max, f64::NEG_INFINITY),
                min_h: fold(&s.h, f64::min, f64::INFINITY),
                min_hp: fold(&s.hp, f64::min, f64::INFINITY),
            };
            for (k, &x) in cfg.output.profiles.iter().enumerate() {
                let rows = profile_at_x(assembler.mesh(), assembler.roughness(), &it.values, x, cfg.output.sample_n)?;
                profiles[k].extend(rows.into_iter().map(|r| [it.t, r[0], r[1], r[2], r[3], r[4]]));
            }
            observe(&RecordView { record: &rec, assembler: &assembler, values: &it.values, sample: &s });
            records.push(rec);
        }
    }

    let wall = started.elapsed().as_secs_f64();
    if let Some(dir) = out {
        let fr: Vec<[f64; 2]> = series.points.iter().map(|&(t, x)| [t, x]).collect();
        dir.write("front.csv", &csv_text(&["t", "position"], &fr))?;
        dir.write("mass.csv", &csv_text(&["t", "surfactant", "fluid"], &mass))?;
        let rec: Vec<[f64; 7]> = records
            .iter()
            .map(|r: &Record| [r.t, r.front.unwrap_or(f64::NAN), r.surfactant, r.fluid, r.max_h, r.min_h, r.min_hp])
            .collect();
        dir.write("records.csv", &csv_text(&["t", "front", "surfactant", "fluid", "max_h", "min_h", "min_hp"], &rec))?;
        let rows: Vec<[f64; 6]> = steps
            .iter()
            .map(|s| {
                [s.t, s.dt, s.error, s.newton_iterations as f64, s.estimator_iterations as f64, s.rejections as f64]
            })
            .collect();
        dir.write("steps.csv", &csv_text(&["t", "dt", "error", "newton", "estimator", "rejections"], &rows))?;
        for (k, &x) in cfg.output.profiles.iter().enumerate() {
            dir.write(&format!("profiles_{x}.csv"), &csv_text(&["t", "y", "c", "h", "h_p", "grad_c"], &profiles[k]))?;
        }
        if status.is_err() {
            let s = sample_fields(assembler.mesh(), assembler.roughness(), &it.values, cfg.output.sample_n)?;
            dir.write("abort_state.vtk", &vtk_text(&s, &format!("last accepted state, t = {:e}", it.t)))?;
        }
        let meta = RunMeta {
            name: &cfg.name,
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed(),
            threads: rayon::current_num_threads(),
            status: match &status {
                Ok(()) => "ok".into(),
                Err(e) => format!("aborted: {e}"),
            },
            t_reached: it.t,
            accepted_steps: it.accepted,
            rejected_steps: it.rejected,
            wall_seconds: wall,
            config: cfg,
        };
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
        dir.write("run_meta.json", &json)?;
        dir.write("config.toml", &cfg.to_toml())?;
    }
    status?;
    let rejected = it.rejected;
    let values = std::mem::take(&mut it.values);
    drop(it);
    Ok(RunOutcome { records, front: series, mass, steps, rejected, snapshots, wall_seconds: wall, assembler, values })
}

pub fn run(cfg: &ScenarioConfig, out: Option<&OutputDir>) -> Result<RunOutcome> {
    run_with(cfg, out, &mut |_| {})
}
