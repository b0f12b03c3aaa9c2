//! Tabulation of finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::run::{check_names, RunReport};

/// Load `summary.json` from a run directory (or the file itself).
pub fn load_report(path: &Path) -> anyhow::Result<(PathBuf, RunReport)> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).with_context(|| format!("cannot read {}", file.display()))?;
    let report = serde_json::from_str(&text).with_context(|| format!("{} is not a run summary", file.display()))?;
    Ok((file, report))
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// One line per run: slope ± stderr, theoretical exponent, bound-check verdict, overall verdict.
pub fn render(reports: &[(PathBuf, RunReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<15} {:>18} {:>9} {:>6} {:>7}",
        "experiment", "mode", "slope", "expected", "bound", "verdict"
    );
    for (path, r) in reports {
        let name = path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let slope = match &r.fit {
            Some(f) => format!("{:.4} ± {:.4}", f.slope, f.slope_stderr),
            None => "-".into(),
        };
        let bound = match r.check(check_names::BOUND) {
            Some(c) => verdict(c.passed),
            None => match &r.summary {
                Some(s) if s.rows.iter().all(|row| row.bound.is_some()) => verdict(s.bound_holds(3.0)),
                _ => "-",
            },
        };
        let _ = writeln!(
            out,
            "{:<28} {:<15} {:>18} {:>9.4} {:>6} {:>7}",
            name,
            r.mode.to_string(),
            slope,
            r.theoretical_exponent,
            bound,
            verdict(r.passed)
        );
        if !r.passed {
            let _ = writeln!(out, "  {}", r.message);
        }
    }
    out
}
