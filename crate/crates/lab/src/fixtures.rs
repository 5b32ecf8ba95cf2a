//! Built-in fixture catalog and custom boundary tables.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use lipkernel_core::geometry::BoundaryShape;

use crate::config::parse_number;

pub struct DomainEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub shape: BoundaryShape,
    pub note: &'static str,
}

pub struct PotentialEntry {
    pub name: &'static str,
    pub c: f64,
    pub eps: f64,
    pub note: &'static str,
}

/// Domain fixtures with their default parameters.
pub fn domains() -> Vec<DomainEntry> {
    vec![
        DomainEntry {
            name: "flat",
            params: "level = 0",
            shape: BoundaryShape::Flat { level: 0.0 },
            note: "half plane; exact kernel and Green function",
        },
        DomainEntry {
            name: "sine",
            params: "amplitude = 0.3, wavenumber = 1",
            shape: BoundaryShape::Sine {
                amplitude: 0.3,
                wavenumber: 1.0,
            },
            note: "periodic; box must hold whole periods",
        },
        DomainEntry {
            name: "clipped_v",
            params: "slope = 1, cap = 1",
            shape: BoundaryShape::ClippedV { slope: 1.0, cap: 1.0 },
            note: "reflecting lateral truncation",
        },
        DomainEntry {
            name: "table",
            params: "x0, f0, x1, f1, ...",
            shape: BoundaryShape::Table {
                knots: vec![(0.0, 0.0), (1.0, 0.0)],
                periodic: false,
            },
            note: "linear interpolation; constants from the knots",
        },
        DomainEntry {
            name: "cone_wedge",
            params: "none",
            shape: BoundaryShape::Cone,
            note: "outside main-theorem hypotheses (unbounded); profiles check only",
        },
    ]
}

pub fn potentials() -> Vec<PotentialEntry> {
    vec![
        PotentialEntry {
            name: "zero",
            c: 1.0,
            eps: 1.0,
            note: "W = 0",
        },
        PotentialEntry {
            name: "pure_decay",
            c: 1.0,
            eps: 0.5,
            note: "W = c <x>^-(2+eps)",
        },
        PotentialEntry {
            name: "bump",
            c: 1.0,
            eps: 0.5,
            note: "smooth compact bump; height, center, radius",
        },
        PotentialEntry {
            name: "product",
            c: 1.0,
            eps: 0.5,
            note: "pure_decay times the bump shape",
        },
    ]
}

/// Reads a knot file: one `x f(x)` pair per line (whitespace or comma
/// separated), `#` comment lines allowed.
pub fn read_knots(text: &str) -> Result<BoundaryShape, String> {
    let mut knots = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        match nums.as_slice() {
            [a, b] => match (parse_number(a), parse_number(b)) {
                (Some(x), Some(y)) => knots.push((x, y)),
                _ => return Err(format!("line {}: not a pair of numbers", i + 1)),
            },
            _ => return Err(format!("line {}: expected two columns", i + 1)),
        }
    }
    BoundaryShape::table(knots, false).map_err(|e| e.to_string())
}

/// Table fixtures from `*.knots` files in `dir`, sorted by name.
pub fn custom_tables(dir: &Path) -> io::Result<Vec<(String, Result<BoundaryShape, String>)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("knots") {
            continue;
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        out.push((name, read_knots(&fs::read_to_string(&path)?)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn fmt_const(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// The catalog as printed by `list-fixtures`.
pub fn catalog_text(custom: Option<&Path>) -> io::Result<String> {
    let mut s = String::new();
    writeln!(s, "domains (name, L, M, parameters, note)").unwrap();
    for d in domains() {
        writeln!(
            s,
            "  {:<12} L = {:<5} M = {:<5} {:<34} {}",
            d.name,
            fmt_const(d.shape.lipschitz()),
            fmt_const(d.shape.sup_norm()),
            d.params,
            d.note
        )
        .unwrap();
    }
    if let Some(dir) = custom {
        let tables = custom_tables(dir)?;
        if !tables.is_empty() {
            writeln!(s, "custom tables ({})", dir.display()).unwrap();
        }
        for (name, shape) in tables {
            match shape {
                Ok(sh) => writeln!(
                    s,
                    "  table:{:<6} L = {:<5} M = {:<5}",
                    name,
                    fmt_const(sh.lipschitz()),
                    fmt_const(sh.sup_norm())
                )
                .unwrap(),
                Err(e) => writeln!(s, "  table:{name} invalid: {e}").unwrap(),
            }
        }
    }
    writeln!(s, "potentials (name, c, eps, note)").unwrap();
    for p in potentials() {
        writeln!(s, "  {:<12} c = {:<5} eps = {:<5} {}", p.name, p.c, p.eps, p.note).unwrap();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lists_the_built_ins() {
        let text = catalog_text(None).unwrap();
        for name in ["flat", "sine", "clipped_v", "cone_wedge", "pure_decay"] {
            assert!(text.contains(name), "{name} missing");
        }
        let cone = text.lines().find(|l| l.contains("cone_wedge")).unwrap();
        assert!(cone.contains("outside main-theorem hypotheses"));
        assert!(cone.contains("M = inf"));
    }

    #[test]
    fn knot_files() {
        let s = read_knots("# ramp\n0 0\n1, 0.5\n2 0.5\n").unwrap();
        assert_eq!(s.lipschitz(), 0.5);
        assert!(read_knots("0 0\n").is_err());
        assert!(read_knots("0 0 1\n").is_err());
    }
}
