//! `fblab`: run Fourier-Bessel experiments from JSON configs.
//!
//! Exit codes: 0 success, 2 invalid config, 3 numerical non-convergence
//! (a `diagnostic.json` is written), 4 I/O failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Command, ExperimentConfig, Params};
use output::{sha256_hex, Output};
use run::Failure;

/// Default output directory when neither `--out` nor `output_dir` is given.
const OUTPUT_ENV: &str = "FBLAB_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "fblab", version, about = "Fourier-Bessel transform experiments")]
struct Cli {
    /// Root seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file and $FBLAB_OUTPUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Check the configuration and exit.
    #[arg(long, global = true)]
    validate_only: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct ParamsFile {
    /// JSON file with the command parameters.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct DampedWaveArgs {
    #[command(flatten)]
    file: ParamsFile,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
    /// Damping set as JSON, e.g. '{"kind":"periodic","period":1,"blocks":[[0,0.5]]}'.
    #[arg(long)]
    damping: Option<String>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    output_dt: Option<f64>,
    /// exp or poly.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    KernelCheck(ParamsFile),
    Density(ParamsFile),
    TransformCheck(ParamsFile),
    PlsSweep(ParamsFile),
    Multiband(ParamsFile),
    NazarovTuran(ParamsFile),
    Bernstein(ParamsFile),
    DampedWave(DampedWaveArgs),
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn params_from(file: &ParamsFile) -> Result<Value, Failure> {
    match &file.params {
        Some(p) => read_json(p),
        None => Ok(json!({})),
    }
}

fn damped_params(args: &DampedWaveArgs) -> Result<Value, Failure> {
    let mut params = params_from(&args.file)?;
    let obj = params
        .as_object_mut()
        .ok_or_else(|| Failure::Config("params must be a JSON object".into()))?;
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            obj.insert(key.to_string(), v);
        }
    };
    set("d", args.d.map(Value::from));
    set("s", args.s.map(Value::from));
    set("c0", args.c0.map(Value::from));
    set("L", args.l.map(Value::from));
    set("modes", args.modes.map(Value::from));
    set("t_final", args.t_final.map(Value::from));
    set("output_dt", args.output_dt.map(Value::from));
    set("model", args.model.clone().map(Value::from));
    if let Some(d) = &args.damping {
        let v = serde_json::from_str(d).map_err(|e| Failure::Config(format!("--damping: {e}")))?;
        obj.insert("damping".into(), v);
    }
    Ok(params)
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let (command, params) = match &cli.command {
        Cmd::Run { config } => {
            return serde_json::from_value(read_json(config)?)
                .map_err(|e| Failure::Config(format!("{}: {e}", config.display())));
        }
        Cmd::KernelCheck(f) => (Command::KernelCheck, params_from(f)?),
        Cmd::Density(f) => (Command::Density, params_from(f)?),
        Cmd::TransformCheck(f) => (Command::TransformCheck, params_from(f)?),
        Cmd::PlsSweep(f) => (Command::PlsSweep, params_from(f)?),
        Cmd::Multiband(f) => (Command::Multiband, params_from(f)?),
        Cmd::NazarovTuran(f) => (Command::NazarovTuran, params_from(f)?),
        Cmd::Bernstein(f) => (Command::Bernstein, params_from(f)?),
        Cmd::DampedWave(a) => (Command::DampedWave, damped_params(a)?),
    };
    Ok(ExperimentConfig {
        command,
        params,
        seed: None,
        output_dir: None,
    })
}

fn diagnose(dir: &Path, command: Command, seed: u64, hash: &str, failure: &Failure) {
    let written = Output::create(dir).and_then(|mut out| {
        out.write_json(
            "diagnostic.json",
            &json!({ "command": command.name(), "seed": seed, "error": failure.message() }),
        )?;
        out.finish(command.name(), seed, hash)
    });
    if let Err(e) = written {
        eprintln!("fblab: could not write diagnostic: {e}");
    }
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    let config = load(&cli)?;
    let seed = cli.seed.or(config.seed).ok_or_else(|| {
        Failure::Config("a seed is required (config `seed` or --seed)".into())
    })?;
    let params = Params::parse(config.command, config.params.clone())
        .map_err(|e| Failure::Config(format!("{} params: {e}", config.command.name())))?;
    run::validate(&params, seed)?;
    if cli.validate_only {
        println!("{}: configuration valid", config.command.name());
        return Ok(());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    let dir = cli
        .out
        .clone()
        .or(config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fblab-out"));
    let resolved = json!({ "command": config.command, "params": params, "seed": seed });
    let canonical = serde_json::to_vec(&resolved).map_err(|e| Failure::Config(e.to_string()))?;
    let hash = sha256_hex(&canonical);

    let mut out = Output::create(&dir)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    out.write_json("config.json", &resolved)?;
    match run::execute(&params, seed, &mut out) {
        Ok(line) => {
            out.finish(config.command.name(), seed, &hash)?;
            println!("{line}");
            Ok(())
        }
        Err(failure) => {
            if let Failure::Numerical(_) = failure {
                diagnose(&dir, config.command, seed, &hash, &failure);
            }
            Err(failure)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("fblab: {}", failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
