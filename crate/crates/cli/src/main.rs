mod args;
mod commands;
mod tolerance;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use multitime::report::{write_atomic, CheckOutcome, Manifest};
use multitime::Exec;
use serde_json::{Map, Value};

use args::{overlay, Cli, Command, FileConfig};
use tolerance::Tolerances;

/// Settings every command sees.
pub struct Ctx {
    pub seed: u64,
    pub tol: Tolerances,
    pub exec: Exec,
}

/// What a command hands back: its resolved parameters (echoed in the
/// manifest), the CSV report and its checks.
pub struct Outcome {
    pub config: Value,
    pub csv: Vec<u8>,
    pub checks: Vec<CheckOutcome>,
    pub report: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let profile = cli.tolerance_profile.or(file.tolerance_profile).unwrap_or_default();
    let ctx = Ctx { seed, tol: Tolerances::for_profile(profile), exec: Exec::default() };
    let name = cli.command.name();

    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Zerorange(a) => commands::zerorange::run(&overlay(a, file.zerorange.as_ref())?, &ctx),
        Command::Consistency(a) => commands::consistency::run(&overlay(a, file.consistency.as_ref())?, &ctx),
        Command::Qft(a) => commands::qft::run(&overlay(a, file.qft.as_ref())?, &ctx),
        Command::Ts(a) => commands::ts::run(&overlay(a, file.ts.as_ref())?, &ctx),
        Command::Born(a) => commands::born::run(&overlay(a, file.born.as_ref())?, &ctx),
    }
    .with_context(|| format!("{name} failed"))?;
    let secs = start.elapsed().as_secs_f64();

    let report = outcome.report.unwrap_or_else(|| out.join(format!("{name}.csv")));
    write_atomic(&report, &outcome.csv)?;

    let mut config = Map::new();
    config.insert("seed".into(), seed.into());
    config.insert("out".into(), Value::String(out.display().to_string()));
    config.insert("report".into(), Value::String(report.display().to_string()));
    config.insert("tolerance_profile".into(), serde_json::to_value(profile)?);
    config.insert(name.into(), outcome.config);
    let manifest = Manifest::new(name, Value::Object(config), outcome.checks, secs);
    write_atomic(&out.join(format!("{name}.manifest.json")), &manifest.to_json()?)?;

    for c in &manifest.checks {
        let rel = match c.bound {
            multitime::report::Bound::AtMost => "<=",
            multitime::report::Bound::AtLeast => ">=",
        };
        println!("{} {}: {:.3e} {rel} {:.1e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("{} checks, {} failed, {secs:.1} s", manifest.checks.len(), manifest.checks.iter().filter(|c| !c.passed).count());
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if let Some(multitime::Error::Budget { .. }) = e.root_cause().downcast_ref::<multitime::Error>() {
                eprintln!("error: resource budget exceeded: {e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
