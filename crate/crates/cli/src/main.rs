mod commands;
mod manifest;
mod options;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde_json::Value;

use commands::{execute, resolve_inputs, CliError, Outcome};
use manifest::RunManifest;
use options::{Cli, Command};

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::from(EXIT_OK),
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let code = match run(&matches) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::VerificationFailed) => EXIT_VERIFY,
        Ok(Outcome::Infeasible) => EXIT_INFEASIBLE,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    };
    ExitCode::from(code)
}

fn run(matches: &ArgMatches) -> Result<Outcome, CliError> {
    let cli = Cli::from_arg_matches(matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let (mut command, threads) = match &cli.command {
        Command::Replay(r) => {
            let m = RunManifest::read(&r.manifest)?;
            log::info!("replaying {} from {}", m.command, r.manifest.display());
            let mut cmd = m.invocation;
            if let Some(out) = &r.output {
                redirect(&mut cmd, out);
            }
            (cmd, cli.threads.or(m.threads))
        }
        cmd => {
            let mut cmd = cmd.clone();
            if let Some(path) = &cli.config {
                let (_, sub) = matches.subcommand().expect("a subcommand is required");
                cmd = merge_config(cmd, sub, path)?;
            }
            (cmd, cli.threads)
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global().context("starting the thread pool")?;
    }
    resolve_inputs(&mut command)?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let done = execute(&command)?;
    if let Some(path) = &done.manifest {
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.name().to_owned(),
            invocation: command.clone(),
            threads,
            seeds: done.seeds,
            inputs: done.inputs,
            outputs: done.outputs,
            started_unix_s: started,
            wall_clock_s: clock.elapsed().as_secs_f64(),
        };
        m.write(path)?;
    }
    Ok(done.outcome)
}

/// Points a recorded command at a new output location.
fn redirect(cmd: &mut Command, out: &Path) {
    let out = out.to_path_buf();
    match cmd {
        Command::Gen(a) => a.output = out,
        Command::Plan(a) => a.output = out,
        Command::ExportLp(a) => a.output = out,
        Command::Sweep(a) => a.output = out,
        Command::Verify(a) => a.report = Some(out),
        Command::Replay(a) => a.output = Some(out),
    }
}

/// Fills options from a JSON object unless they were given on the command line.
fn merge_config(cmd: Command, sub: &ArgMatches, path: &Path) -> Result<Command, CliError> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let config: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(config) = config else {
        return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
    };
    let mut current = serde_json::to_value(&cmd).map_err(anyhow::Error::from)?;
    let obj = current.as_object_mut().expect("commands serialize as objects");
    for (key, value) in config {
        let key = key.replace('-', "_");
        if key == "command" || !obj.contains_key(&key) {
            return Err(CliError::Usage(format!("config key `{key}` is not an option of {}", cmd.name())));
        }
        if sub.value_source(&key) != Some(ValueSource::CommandLine) {
            obj.insert(key, value);
        }
    }
    serde_json::from_value(current).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}
