//! Summary table, report files and the asymptotic CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use finsler_core::identities::{AsymptoticRow, CheckResult, VerificationReport};

use crate::error::{CliError, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v:.6e}")
    }
}

pub fn table(checks: &[CheckResult]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<width$}  {:>13}  {:>13}  {:>9}  {:>7}  result\n",
        "check", "computed", "target", "rel_err", "tol"
    );
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {:>13}  {:>13}  {:>9.2e}  {:>7.0e}  {}\n",
            c.name,
            fmt_num(c.computed),
            fmt_num(c.target),
            c.rel_err,
            c.tol,
            if c.passed { "PASS" } else { "FAIL" }
        ));
        if let Some(err) = c.details.get("error") {
            out.push_str(&format!("{:width$}  error: {}\n", "", err.as_str().unwrap_or_default()));
        }
    }
    out
}

pub fn summary_line(report: &VerificationReport) -> String {
    let mut s = format!(
        "{} of {} checks passed ({} failed)",
        report.summary.passed, report.summary.total, report.summary.failed
    );
    for sk in &report.skipped {
        s.push_str(&format!("\nskipped {}: {}", sk.suite, sk.reason));
    }
    s
}

/// Writes the JSON report to `out` (`-` for stdout) or prints the table.
pub fn emit(report: &VerificationReport, out: Option<&Path>) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match out {
        Some(p) if p.as_os_str() == "-" => {
            lock.write_all(report.to_json().as_bytes()).map_err(io_err(p))?;
        }
        Some(p) => {
            write_text(p, &report.to_json())?;
            let _ = writeln!(lock, "{}{}\nreport written to {}", table(&report.checks), summary_line(report), p.display());
        }
        None => {
            let _ = writeln!(lock, "{}{}", table(&report.checks), summary_line(report));
        }
    }
    Ok(())
}

pub fn write_curve(path: &Path, rows: &[AsymptoticRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use finsler_core::identities::Anchor;

    #[test]
    fn table_marks_failures() {
        let checks = vec![
            CheckResult::compare("mass.radial", Anchor::MassQuantization, 1.0, 1.0, 1e-7),
            CheckResult::at_most("residual.max_relative", Anchor::PdeResidual, 1.0, 1e-4),
        ];
        let t = table(&checks);
        assert!(t.lines().nth(1).unwrap().ends_with("PASS"));
        assert!(t.lines().nth(2).unwrap().ends_with("FAIL"));
    }

    #[test]
    fn curve_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let rows = [AsymptoticRow {
            radius: 10.0,
            remainder_sup: 1.5,
            weighted_gradient_sup: 0.01,
        }];
        write_curve(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), "radius,remainder_sup,weighted_gradient_sup");
        assert_eq!(text.lines().count(), 2);
    }
}
