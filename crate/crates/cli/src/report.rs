//! Side-by-side comparison of finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::output::write_atomic;
use crate::run::mean_std;
use crate::summary::{Summary, SCHEMA_VERSION};

/// One run directory, averaged over its trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dir: PathBuf,
    pub task: String,
    pub pool: String,
    pub variant: String,
    /// `Y` for encoder-enriched searches, `N` for plain DQAS.
    pub sa: char,
    pub trials: usize,
    pub gates: f64,
    pub param_gates: f64,
    pub con_gates: f64,
    pub energy: f64,
    pub energy_std: f64,
    /// Mean over the trials whose ASP is finite.
    pub asp: Option<f64>,
    pub asp_finite: usize,
}

/// Reads `<dir>/summary.json`, refusing other schema versions.
pub fn load_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("{}: no readable summary ({e})", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: corrupt summary: {e}", path.display())))?;
    match value.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(CliError::Config(format!(
                "{}: schema_version {v} is not supported (expected {SCHEMA_VERSION})",
                path.display()
            )))
        }
        None => return Err(CliError::Config(format!("{}: missing schema_version", path.display()))),
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: corrupt summary: {e}", path.display())))
}

fn row(dir: &Path, s: &Summary) -> Result<ReportRow> {
    if s.trials.is_empty() {
        return Err(CliError::Config(format!("{}: summary has no trials", dir.display())));
    }
    let avg =
        |f: &dyn Fn(&crate::summary::TrialSummary) -> f64| s.trials.iter().map(f).sum::<f64>() / s.trials.len() as f64;
    let asps: Vec<f64> = s.trials.iter().filter_map(|t| t.asp.map(|a| a as f64)).collect();
    let (energy, energy_std) = mean_std(&s.trials.iter().map(|t| t.final_energy).collect::<Vec<_>>());
    Ok(ReportRow {
        dir: dir.to_path_buf(),
        task: s.task.clone(),
        pool: s.pool.clone(),
        variant: s.variant.clone(),
        sa: if s.variant == "DQAS" { 'N' } else { 'Y' },
        trials: s.trials.len(),
        gates: avg(&|t| t.gate_counts.total as f64),
        param_gates: avg(&|t| t.gate_counts.parameterized as f64),
        con_gates: avg(&|t| t.gate_counts.controlled as f64),
        energy,
        energy_std,
        asp: (!asps.is_empty()).then(|| asps.iter().sum::<f64>() / asps.len() as f64),
        asp_finite: asps.len(),
    })
}

pub fn build_rows(dirs: &[PathBuf]) -> Result<Vec<ReportRow>> {
    if dirs.is_empty() {
        return Err(CliError::Config("report needs at least one run directory".into()));
    }
    let mut rows = dirs
        .iter()
        .map(|d| row(d, &load_summary(d)?))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| (&a.task, &a.pool, a.sa).cmp(&(&b.task, &b.pool, b.sa)));
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out =
        String::from("task,pool,sa,variant,trials,gates,param_gates,con_gates,energy,energy_std,asp,asp_finite,dir\n");
    for r in rows {
        let asp = r.asp.map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.task,
            r.pool,
            r.sa,
            r.variant,
            r.trials,
            r.gates,
            r.param_gates,
            r.con_gates,
            r.energy,
            r.energy_std,
            asp,
            r.asp_finite,
            r.dir.display()
        );
    }
    out
}

/// Metrics down the side, one column per run headed `<pool> <Y|N>`.
pub fn to_text(rows: &[ReportRow]) -> String {
    let mut header = vec![String::new()];
    header.extend(rows.iter().map(|r| format!("{} {}", r.pool, r.sa)));
    type Metric = (&'static str, Box<dyn Fn(&ReportRow) -> String>);
    let metrics: [Metric; 6] = [
        ("#Gates", Box::new(|r| format!("{:.1}", r.gates))),
        ("#Param.G", Box::new(|r| format!("{:.1}", r.param_gates))),
        ("#Con.G", Box::new(|r| format!("{:.1}", r.con_gates))),
        ("Energy", Box::new(|r| format!("{:.4}", r.energy))),
        ("ASP", Box::new(|r| opt(r.asp))),
        ("Trials", Box::new(|r| r.trials.to_string())),
    ];
    let mut table = vec![header];
    for (name, f) in &metrics {
        let mut line = vec![name.to_string()];
        line.extend(rows.iter().map(f));
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &table {
        let cells: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Writes `report.csv` and `report.txt` into `out`.
pub fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<Vec<ReportRow>> {
    let rows = build_rows(dirs)?;
    write_atomic(&out.join("report.csv"), to_csv(&rows).as_bytes())?;
    write_atomic(&out.join("report.txt"), to_text(&rows).as_bytes())?;
    Ok(rows)
}
