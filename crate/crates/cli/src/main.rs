mod aggregate;
mod args;
mod error;
mod output;
mod run_config;

use std::process::ExitCode;

use clap::Parser;
use finsler_core::config::parse_vector;
use finsler_core::identities::{run_verification, Suite, VerifyContext};
use finsler_core::DualGauge;
use serde_json::json;

use args::{Cli, Command, RunArgs};
use error::{CliError, CliResult};
use run_config::RunConfig;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("FL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn verify(args: &RunArgs, suite_flag: Option<&str>, defaults: &[Suite]) -> CliResult<bool> {
    let rc = RunConfig::resolve(args, suite_flag, defaults)?;
    let mut ctx = VerifyContext::new(
        rc.norm.clone(),
        rc.solution.lambda,
        rc.solution.center.clone(),
        rc.quadrature,
    )
    .map_err(|e| CliError::Config(format!("solution: {e}")))?;
    ctx.pohozaev_y = rc.pohozaev_y.clone();
    let run = run_verification(&rc.norm_spec, &rc.solution, &ctx, &rc.suites, !rc.deterministic);
    output::emit(&run.report, rc.out.as_deref())?;
    if let Some(path) = &rc.csv {
        if run.asymptotic_curve.is_empty() {
            eprintln!("note: no asymptotic curve in this run, {} not written", path.display());
        } else {
            output::write_curve(path, &run.asymptotic_curve)?;
        }
    }
    Ok(run.report.all_passed())
}

fn dual_norm(args: &RunArgs, points: &str) -> CliResult<bool> {
    let rc = RunConfig::resolve(args, None, &[])?;
    let gauge = DualGauge::new(rc.norm.clone());
    let mut rows = Vec::new();
    for part in points.split(';').filter(|s| !s.trim().is_empty()) {
        let x = parse_vector(part)?;
        let h0 = gauge.value(&x)?;
        let reversed = gauge.reversed_value(&x)?;
        rows.push(json!({"x": x, "h0": h0, "h0_reversed": reversed}));
    }
    if rows.is_empty() {
        return Err(CliError::Config("--points is empty".into()));
    }
    let text = serde_json::to_string_pretty(&json!({"norm": rc.norm_spec, "points": rows})).expect("serializes") + "\n";
    match rc.out.as_deref() {
        Some(p) if p.as_os_str() != "-" => output::write_text(p, &text)?,
        Some(_) => print!("{text}"),
        None => {
            println!("{:<28}  {:>22}  {:>22}", "x", "H0(x)", "Ĥ0(x)");
            for r in &rows {
                println!("{:<28}  {:>22.15e}  {:>22.15e}", r["x"].to_string(), r["h0"].as_f64().unwrap_or(f64::NAN), r["h0_reversed"].as_f64().unwrap_or(f64::NAN));
            }
        }
    }
    Ok(true)
}

fn report(files: &[std::path::PathBuf], out: Option<&std::path::Path>) -> CliResult<bool> {
    let agg = aggregate::aggregate(files)?;
    let text = serde_json::to_string_pretty(&agg.json).expect("serializes") + "\n";
    match out {
        Some(p) => output::write_text(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!("{} reports, {} checks, {} failed", files.len(), agg.total, agg.failed);
    Ok(agg.failed == 0)
}

fn dispatch(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Verify { run, suite } => verify(&run, Some(suite.as_deref().unwrap_or("all")), &[]),
        Command::Suite { names, run } => verify(&run, Some(&names), &[]),
        Command::DualNorm { run, points } => dual_norm(&run, &points),
        Command::WulffVolume { run } => verify(&run, None, &[Suite::WulffVolume, Suite::Perimeter]),
        Command::VerifySolution { run } => verify(&run, None, &[Suite::Residual]),
        Command::Quantization { run } => verify(&run, None, &[Suite::Mass]),
        Command::Pohozaev { run } => verify(&run, None, &[Suite::Pohozaev, Suite::WulffPohozaev]),
        Command::Asymptotics { run } => verify(&run, None, &[Suite::Asymptotics]),
        Command::Isoperimetric { run } => verify(&run, None, &[Suite::Isoperimetric]),
        Command::Report { files, out } => report(&files, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| dispatch(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
