//! CSV artifacts and the run manifest.

use std::fs;
use std::io;
use std::path::Path;

use lipkernel_core::verify::BoundReport;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::study::{num, CheckOutput, Table};

pub const SUMMARY_HEADER: [&str; 11] = [
    "check",
    "inequality",
    "pass",
    "stable",
    "refinement_change",
    "min_ratio",
    "max_ratio",
    "spread",
    "constants",
    "sample",
    "note",
];

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn constants(r: &BoundReport) -> String {
    r.constants
        .iter()
        .map(|(n, v)| format!("{n}={}", num(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn summary_row(check: &str, r: &BoundReport) -> Vec<String> {
    vec![
        check.into(),
        r.id.clone(),
        r.pass.to_string(),
        r.stable.map(|s| s.to_string()).unwrap_or_default(),
        opt_num(r.refinement_change),
        num(r.min_ratio),
        num(r.max_ratio),
        num(r.max_ratio / r.min_ratio),
        constants(r),
        r.sample.clone(),
        r.note.clone(),
    ]
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

fn to_strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

/// Outcome of one requested check: its output or the fault that stopped it.
pub type CheckResult = (crate::config::Check, Result<CheckOutput, String>);

/// `summary.csv`: one row per report, plus a `fault` row per failed check.
pub fn write_summary(dir: &Path, results: &[CheckResult]) -> io::Result<()> {
    let mut rows = Vec::new();
    for (check, res) in results {
        match res {
            Ok(out) => rows.extend(out.reports.iter().map(|r| summary_row(check.name(), r))),
            Err(e) => {
                let mut row = vec![String::new(); SUMMARY_HEADER.len()];
                row[0] = check.name().into();
                row[1] = "fault".into();
                row[2] = "false".into();
                row[10] = e.clone();
                rows.push(row);
            }
        }
    }
    write_rows(&dir.join("summary.csv"), &to_strings(&SUMMARY_HEADER), &rows)
}

/// `<check>.csv` in long form, one row per reported quantity, and
/// `<check>_<table>.csv` for each detail table.
pub fn write_check(dir: &Path, out: &CheckOutput) -> io::Result<()> {
    let mut rows = Vec::new();
    for r in &out.reports {
        let mut push = |q: &str, v: String| rows.push(vec![r.id.clone(), q.into(), v]);
        push("pass", r.pass.to_string());
        push("min_ratio", num(r.min_ratio));
        push("max_ratio", num(r.max_ratio));
        if let Some(c) = r.refinement_change {
            push("refinement_change", num(c));
        }
        for (n, v) in &r.constants {
            push(n, num(*v));
        }
        push("sample", r.sample.clone());
        if !r.note.is_empty() {
            push("note", r.note.clone());
        }
    }
    let name = out.check.name();
    write_rows(&dir.join(format!("{name}.csv")), &to_strings(&["inequality", "quantity", "value"]), &rows)?;
    for t in &out.tables {
        write_table(&dir.join(format!("{name}_{}.csv", t.name)), t)?;
    }
    Ok(())
}

pub fn write_table(path: &Path, t: &Table) -> io::Result<()> {
    write_rows(path, &t.header, &t.rows)
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// `manifest.txt`: everything needed, with the config file, to reproduce
/// `summary.csv`.
pub fn write_manifest(
    dir: &Path,
    config_text: &str,
    config_path: &Path,
    cfg: &ExperimentConfig,
    results: &[CheckResult],
) -> io::Result<()> {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv("name", cfg.name.clone());
    kv("version", env!("CARGO_PKG_VERSION").into());
    kv("config", config_path.display().to_string());
    kv("config_sha256", config_hash(config_text));
    kv("seed", cfg.seed.to_string());
    kv("mc_seed", cfg.mc_seed().to_string());
    kv("domain", cfg.domain.kind.name().into());
    kv("box", num(cfg.domain.half_width));
    kv("H_top", num(cfg.grid.top));
    kv("dx_coarse", num(cfg.grid.dx));
    kv("dx_fine", num(0.5 * cfg.grid.dx));
    kv("checks", cfg.checks.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "));
    for (check, res) in results {
        let status = match res {
            Ok(o) if o.pass() => format!("pass ({:.1} s)", o.seconds),
            Ok(o) => format!("fail ({:.1} s)", o.seconds),
            Err(_) => "fault".into(),
        };
        kv(&format!("result.{}", check.name()), status);
    }
    fs::write(dir.join("manifest.txt"), s)
}
