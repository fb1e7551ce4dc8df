use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use surfspread::config::ScenarioConfig;
use surfspread::output::OutputDir;
use surfspread::runner::run;
use surfspread::scenarios::{find, Profile, SCENARIOS};
use surfspread::verify::{run_suite, suite_names, VerifyOptions};
use surfspread::Error;

/// Environment variable holding the worker-thread count.
const THREADS_VAR: &str = "SURFSPREAD_THREADS";

#[derive(Parser)]
#[command(name = "surfspread", version, about = "Surfactant spreading on thin liquid films")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Full,
    Desk,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Full => Profile::Full,
            ProfileArg::Desk => Profile::Desk,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML configuration or a built-in scenario.
    Run {
        /// Path to a TOML file or a built-in scenario name.
        config: String,
        /// Elements along x; y follows the domain aspect ratio.
        #[arg(long)]
        mesh: Option<usize>,
        #[arg(long)]
        tfinal: Option<f64>,
        /// Fixed time step instead of the adaptive controller.
        #[arg(long)]
        fixed_dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Variant of a built-in scenario.
        #[arg(long, value_enum, default_value = "full")]
        profile: ProfileArg,
    },
    /// Run a verification suite, or `all`.
    Verify {
        suite: String,
        /// Keep the output trees of scenario suites here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in scenarios.
    Scenarios {
        /// Write `<name>.toml` and `<name>.desk.toml` for every scenario into this directory.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io { .. } => 2,
        _ => 1,
    }
}

fn load(spec: &str, profile: Profile) -> Result<ScenarioConfig, Error> {
    let path = Path::new(spec);
    if path.exists() || spec.ends_with(".toml") {
        ScenarioConfig::load(path)
    } else {
        Ok(find(spec)?.config(profile))
    }
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    init_threads()?;
    match cli.command {
        Command::Run { config, mesh, tfinal, fixed_dt, out, profile } => {
            let mut cfg = load(&config, profile.into())?;
            if let Some(n) = mesh {
                cfg = cfg.with_mesh(n);
            }
            if let Some(t) = tfinal {
                cfg = cfg.with_t_final(t);
            }
            if let Some(dt) = fixed_dt {
                cfg = cfg.with_fixed_dt(dt);
            }
            cfg.validate()?;
            let root = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let dir = OutputDir::create(&root)?;
            let outcome = run(&cfg, Some(&dir))?;
            let (dc, dh) = outcome.mass_drift();
            println!(
                "{}: t = {} in {} steps ({} rejected), {} snapshots, mass drift {dc:.2e} / {dh:.2e}, {:.1} s -> {}",
                cfg.name,
                cfg.time.t_final,
                outcome.steps.len(),
                outcome.rejected,
                outcome.snapshots,
                outcome.wall_seconds,
                dir.root().display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, out } => {
            let names: Vec<String> =
                if suite == "all" { suite_names().into_iter().map(String::from).collect() } else { vec![suite] };
            let opts = VerifyOptions { out_dir: out };
            let mut failed = Vec::new();
            for name in &names {
                match run_suite(name, &opts) {
                    Ok(checks) => {
                        for c in checks {
                            println!("{c}");
                            if !c.pass {
                                failed.push(format!("{} ({})", c.criterion, c.name));
                            }
                        }
                    }
                    Err(e @ Error::Config(_)) => return Err(e),
                    Err(e) => {
                        println!("[FAIL] suite {name}: {e}");
                        failed.push(name.clone());
                    }
                }
            }
            if failed.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("failed: {}", failed.join("; "));
                Ok(ExitCode::from(1))
            }
        }
        Command::Scenarios { write } => {
            for s in &SCENARIOS {
                println!("{:<24} {}", s.name, s.summary);
            }
            if let Some(root) = write {
                let dir = OutputDir::create(&root)?;
                for s in &SCENARIOS {
                    dir.write(&format!("{}.toml", s.name), &s.config(Profile::Full).to_toml())?;
                    dir.write(&format!("{}.desk.toml", s.name), &s.config(Profile::Desk).to_toml())?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
