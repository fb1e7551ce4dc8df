use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = r#"
name = "cli-smoke"

[domain]
x = [0.0, 4.0]
y = [0.0, 4.0]
elements = [8, 8]
periodic = [false, true]

[physics]
capillarity = 1e-4
gravity = 0.0
peclet = 1e4

[initial]
kind = "planar-strip"
steepness = 10.0

[time]
t_final = 0.3
dt_initial = 0.1
mode = "fixed"

[output]
snapshot_every = 1
sample_n = 33
front = "planar"
record_times = [0.1, 0.2]
"#;

fn surfspread(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfspread")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("case.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn run_smoke(dir: &Path, out: &str) -> Output {
    let cfg = write_config(dir, SMOKE);
    let out = dir.join(out);
    surfspread(&["run", &cfg, "--out", out.to_str().unwrap()])
}

#[test]
fn smoke_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_smoke(dir.path(), "a");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("a");
    let vtk: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("snapshot_"))
        .collect();
    assert_eq!(vtk.len(), 3);
    let steps = fs::read_to_string(out.join("steps.csv")).unwrap();
    assert_eq!(steps.lines().count(), 1 + 3);
    let front = fs::read_to_string(out.join("front.csv")).unwrap();
    assert_eq!(front.lines().count(), 1 + 3);
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 3);
    assert!(records.starts_with("t,front,surfactant,fluid,max_h,min_h,min_hp\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "ok");
    assert_eq!(meta["accepted_steps"], 3);
    assert_eq!(meta["config"]["name"], "cli-smoke");
    assert!(meta["version"].is_string() && meta["seed"].is_u64());
    let echoed = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("cli-smoke"));
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_smoke(dir.path(), "a").status.success());
    assert!(run_smoke(dir.path(), "b").status.success());
    for f in ["snapshot_00002.vtk", "mass.csv", "steps.csv", "front.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMOKE);
    let out = dir.path().join("o");
    let o = surfspread(&[
        "run",
        &cfg,
        "--tfinal",
        "0.1",
        "--fixed-dt",
        "0.05",
        "--mesh",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["accepted_steps"], 2);
    assert_eq!(meta["config"]["domain"]["elements"][0], 6);
}

#[test]
fn missing_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMOKE.replace("t_final = 0.3\n", ""));
    let o = surfspread(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_final"));
}

#[test]
fn unknown_scenario_and_suite_are_config_errors() {
    assert_eq!(surfspread(&["run", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(surfspread(&["verify", "no-such-suite"]).status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_surfspread"))
        .args(["scenarios"])
        .env("SURFSPREAD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_fast_suite_passes() {
    let o = surfspread(&["verify", "alpha-params"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("[PASS] criterion  8"), "{text}");
}

#[test]
fn scenarios_list_and_write() {
    let dir = tempfile::tempdir().unwrap();
    let o = surfspread(&["scenarios", "--write", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 8);
    let text = fs::read_to_string(dir.path().join("drop-spreading.desk.toml")).unwrap();
    let cfg = surfspread::config::ScenarioConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.domain.elements, [128, 128]);
}

#[test]
fn shipped_scenario_files_match_builtins() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for s in &surfspread::scenarios::SCENARIOS {
        for (suffix, p) in [("", surfspread::scenarios::Profile::Full), (".desk", surfspread::scenarios::Profile::Desk)]
        {
            let text = fs::read_to_string(root.join(format!("{}{suffix}.toml", s.name))).unwrap();
            let cfg = surfspread::config::ScenarioConfig::from_toml(&text).unwrap();
            assert_eq!(cfg, s.config(p), "{}{suffix}", s.name);
        }
    }
}
