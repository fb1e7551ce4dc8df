use surfspread::config::ScenarioConfig;
use surfspread::postprocess::sample_point;
use surfspread::runner::run;

fn drop_case(periodic: bool) -> ScenarioConfig {
    ScenarioConfig::from_toml(&format!(
        r#"
name = "sym"
[domain]
x = [-3.0, 3.0]
y = [-3.0, 3.0]
elements = [10, 10]
periodic = [{periodic}, {periodic}]
[physics]
capillarity = 0.013
gravity = 2.0
peclet = 100.0
[initial]
kind = "parabolic-drop"
precursor = 0.1
steepness = 10.0
ridge_steepness = 5.0
height_offset = 0.02
[time]
t_final = 0.1
dt_initial = 0.025
mode = "fixed"
"#
    ))
    .unwrap()
}

#[test]
fn drop_keeps_square_symmetry() {
    let out = run(&drop_case(false), None).unwrap();
    let (mesh, rough, v) = (out.assembler.mesh(), out.assembler.roughness(), &out.values);
    let mut worst = 0.0f64;
    for &(x, y) in &[(0.3, 1.1), (0.9, 0.2), (1.4, 0.7), (2.2, 1.9)] {
        let a = sample_point(mesh, rough, v, x, y).unwrap();
        for (px, py) in [(y, x), (-x, y), (x, -y), (-y, -x)] {
            let b = sample_point(mesh, rough, v, px, py).unwrap();
            worst = worst.max((a.c - b.c).abs()).max((a.h - b.h).abs());
        }
    }
    assert!(worst < 1e-9, "symmetry defect {worst:e}");
}

#[test]
fn periodic_run_conserves_both_masses() {
    let out = run(&drop_case(true), None).unwrap();
    let (dc, dh) = out.mass_drift();
    assert!(dc < 1e-10 && dh < 1e-10, "drift {dc:e} {dh:e}");
}

#[test]
fn front_advances_monotonically() {
    let mut cfg = drop_case(false);
    cfg.domain.elements = [24, 24];
    cfg.initial =
        surfspread::model::InitialCondition::AxisymmetricDrop { center: [0.0, 0.0], radius: 1.0, steepness: 4.0 };
    cfg.physics.peclet = 1e4;
    cfg.output.front = surfspread::config::FrontGeometry::Radial;
    cfg.output.record_times = vec![0.025, 0.05, 0.075];
    let out = run(&cfg, None).unwrap();
    assert_eq!(out.front.points.len(), 4);
    assert!(out.front.is_monotone(1e-6), "{:?}", out.front.points);
}
