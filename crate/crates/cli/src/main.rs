use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use znh::experiments::{
    self, build_pool, has_numerical_failure, load, thread_limit, DiscrepancyMapSpec, Engine,
    OutputFiles, PropagationSettings, QuadratureSettings, StateSpec, SweepSpec, PRESETS,
    THREADS_ENV,
};
use znh::models::ModelSpec;
use znh::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "znh", version, about = "Short-time survival probability of driven non-Hermitian two-level systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival at a fixed time as a function of k = omega/omega0.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// |P_exact - P_2| over a grid of omega/omega0 and time.
    Map {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One survival probability.
    Survive {
        /// Preset name (see `znh presets`).
        #[arg(long)]
        model: String,
        /// Preset parameters as key=value.
        #[arg(long, num_args = 0.., value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value = "plus")]
        state: String,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = EngineArg::Exact)]
        engine: EngineArg,
    },
    /// List the model presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Exact,
    Second,
    Closed,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Second => Engine::SecondOrder,
            EngineArg::Closed => Engine::ClosedForm,
        }
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn report(files: &OutputFiles) {
    for p in [&files.csv, &files.plot, &files.metadata] {
        println!("wrote {}", p.display());
    }
}

fn thread_cap() -> Result<Option<usize>, Error> {
    thread_limit(std::env::var(THREADS_ENV).ok().as_deref())
}

fn sweep(config: &Path, out: &Path) -> Result<u8, Error> {
    let spec: SweepSpec = load(config)?;
    spec.validate()?;
    let result = build_pool(thread_cap()?)?.install(|| experiments::run_sweep(&spec))?;
    let files = experiments::write_sweep(&result, &spec, out)?;
    report(&files);
    for f in &result.failures {
        eprintln!("k={} state={} engine={}: {}", f.k, f.state, f.engine, f.message);
    }
    Ok(if has_numerical_failure(&result.failures) {
        EXIT_NUMERICAL
    } else {
        0
    })
}

fn map(config: &Path, out: &Path) -> Result<u8, Error> {
    let spec: DiscrepancyMapSpec = load(config)?;
    spec.validate()?;
    let result = build_pool(thread_cap()?)?.install(|| experiments::run_discrepancy_map(&spec))?;
    let files = experiments::write_map(&result, &spec, out)?;
    report(&files);
    for f in &result.failures {
        eprintln!("omega/omega0={} engine={}: {}", f.k, f.engine, f.message);
    }
    Ok(if has_numerical_failure(&result.failures) {
        EXIT_NUMERICAL
    } else {
        0
    })
}

fn survive(model: &str, params: &[(String, f64)], state: &str, t: f64, engine: EngineArg) -> Result<u8, Error> {
    let mut map = BTreeMap::new();
    for (k, v) in params {
        if map.insert(k.clone(), *v).is_some() {
            return Err(Error::Config(format!("parameter `{k}` given twice")));
        }
    }
    let spec = ModelSpec::Preset {
        name: model.to_string(),
        params: map,
    };
    let value = experiments::survive(
        &spec,
        &StateSpec::Named(state.to_string()),
        t,
        engine.into(),
        &PropagationSettings::default(),
        &QuadratureSettings::default(),
    )?;
    println!("{value}");
    Ok(0)
}

fn presets() {
    for p in PRESETS {
        println!("{}", p.name);
        println!("  {}", p.hamiltonian);
        for (k, d) in p.params {
            println!("  {k:<7} {d}");
        }
        println!("  {}", p.note);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep { config, out } => sweep(config, out),
        Command::Map { config, out } => map(config, out),
        Command::Survive {
            model,
            params,
            state,
            t,
            engine,
        } => survive(model, params, state, *t, *engine),
        Command::Presets => {
            presets();
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
