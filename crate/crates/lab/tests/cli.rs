use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lipkernel::config::parse_number;
use proptest::prelude::*;

const GEOMETRY: &str = "\
run.name = cli_geometry
run.seed = 9
run.checks = geometry
domain.kind = clipped_v
domain.params = 1, 1
domain.box = 3
domain.periodic = false
grid.dx = 0.1
grid.H_top = 4
verify.geometry_samples = 500
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lipkernel"));
    c.env_remove(lipkernel::OUT_ENV);
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.conf");
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn lipkernel")
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("manifest has no {key}"))
}

#[test]
fn geometry_run_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), GEOMETRY);
    let out = tmp.path().join("out");
    let o = run(bin().arg("run").arg(&cfg).arg("--out").arg(&out).arg("-q"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, lipkernel::output::SUMMARY_HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| &r[0] == "geometry" && &r[2] == "true"));
    assert!(out.join("geometry.csv").is_file());
    assert_eq!(manifest_value(&out, "seed"), "9");
    assert_eq!(manifest_value(&out, "config_sha256"), lipkernel::output::config_hash(GEOMETRY));
    assert_eq!(manifest_value(&out, "result.geometry").split(' ').next(), Some("pass"));
}

#[test]
fn summary_is_reproducible_and_seed_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), GEOMETRY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for dir in [&a, &b] {
        assert_eq!(run(bin().arg("run").arg(&cfg).arg("--out").arg(dir).arg("-q")).status.code(), Some(0));
    }
    assert_eq!(fs::read(a.join("summary.csv")).unwrap(), fs::read(b.join("summary.csv")).unwrap());
    let o = run(bin().args(["run", "--seed", "123", "-q", "--out"]).arg(&c).arg(&cfg));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest_value(&c, "seed"), "123");
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), GEOMETRY);
    let env_out = tmp.path().join("from_env");
    let o = run(bin().env(lipkernel::OUT_ENV, &env_out).arg("run").arg("-q").arg(&cfg));
    assert_eq!(o.status.code(), Some(0));
    assert!(env_out.join("summary.csv").is_file());
}

#[test]
fn bad_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = GEOMETRY.replace("grid.dx = 0.1", "grid.dx = -1");
    let cfg = write_config(tmp.path(), &text);
    let o = run(bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path().join("out")));
    assert_eq!(o.status.code(), Some(lipkernel::exit::CONFIG));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid.dx"), "{err}");

    let cfg = write_config(tmp.path(), &format!("{GEOMETRY}grid.spacing = 1\n"));
    assert_eq!(run(bin().arg("run").arg(&cfg)).status.code(), Some(lipkernel::exit::CONFIG));
    assert_eq!(run(bin().arg("run").arg(tmp.path().join("missing.conf"))).status.code(), Some(lipkernel::exit::CONFIG));
}

#[test]
fn list_fixtures_with_and_without_catalog() {
    let o = run(bin().arg("list-fixtures"));
    assert_eq!(o.status.code(), Some(0));
    let builtin = String::from_utf8(o.stdout).unwrap();
    for name in ["flat", "sine", "clipped_v", "table", "cone_wedge", "pure_decay"] {
        assert!(builtin.contains(name), "missing {name}");
    }
    let empty = tempfile::tempdir().unwrap();
    let o = run(bin().arg("list-fixtures").arg("--catalog").arg(empty.path()));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), builtin);

    fs::write(empty.path().join("ridge.knots"), "-1 0\n0 0.5\n1 0\n").unwrap();
    let o = run(bin().arg("list-fixtures").arg("--catalog").arg(empty.path()));
    assert!(String::from_utf8(o.stdout).unwrap().contains("ridge"));
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        lipkernel::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 9);
}

proptest! {
    #[test]
    fn decimal_numbers_round_trip(v in -1e6f64..1e6) {
        prop_assert_eq!(parse_number(&format!("{v:?}")), Some(v));
    }

    #[test]
    fn pi_products(k in 1u32..64, m in 1u32..64) {
        let v = parse_number(&format!("{k}*pi/{m}")).unwrap();
        prop_assert!((v - k as f64 * std::f64::consts::PI / m as f64).abs() <= 1e-12 * v);
    }
}
