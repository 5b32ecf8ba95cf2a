//! Acceptance criteria, one test per criterion. Each prints a single
//! `PASS`/`FAIL` line with the measured value and the pinned tolerance.
//!
//! Run with `cargo test -p lipkernel --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use lipkernel::study::Study;
use lipkernel::{parse, Check, CheckOutput, ExperimentConfig};
use lipkernel_core::geometry::Point;
use lipkernel_core::kernel_fd::fd_heat_kernel_snapshots;
use lipkernel_core::kernel_mc::mc_kernel_estimate;
use lipkernel_core::profile_solver::{solve_wedge_profile, NodePotential};
use lipkernel_core::verify::{self, BoundReport};

const KERNEL_REL_TOL: f64 = 0.05;
const MC_REL_TOL: f64 = 0.10;
const MC_SIGMAS: f64 = 3.0;
const MC_PROBES: usize = 5;
const GREEN_REL_TOL: f64 = 0.05;
const GEOMETRY_SAMPLES: usize = 10_000;
const GEOMETRY_TOL: f64 = 1e-6;
const CONE_REL_TOL: f64 = 0.02;
const PROFILE_STABILITY: f64 = 0.05;
const GREEN_UPPER_SLACK: f64 = 0.02;
const GREEN_STABILITY: f64 = 0.10;
const GREEN_PAIRS: usize = 20;
const GAUGE_SLACK: f64 = 0.02;
const GAUGE_BOX_SENSITIVITY: f64 = 0.05;
const TAIL_SLOPE_TOL: f64 = 0.1;
const THREE_G_TRIPLES: usize = 200;
const THREE_G_STABILITY: f64 = 0.10;
const DOOB_REL_TOL: f64 = 0.05;
const SPREAD_LIMIT: f64 = 1e3;
const SPREAD_STABILITY: f64 = 0.15;
const MIN_KERNEL_SAMPLES: usize = 500;
const VOLUME_SAMPLES: usize = 50;
const VOLUME_BAND: f64 = 20.0;
const VOLUME_STABILITY: f64 = 0.10;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn study(name: &str) -> Study {
    Study::new(config(name), 1).unwrap()
}

fn verdict(id: &str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn report<'a>(out: &'a CheckOutput, id: &str) -> &'a BoundReport {
    out.reports
        .iter()
        .find(|r| r.id == id)
        .unwrap_or_else(|| panic!("no report {id}"))
}

fn constant(r: &BoundReport, name: &str) -> f64 {
    r.constant(name).unwrap_or_else(|| panic!("{} has no constant {name}", r.id))
}

/// Leading integer of a report's sample description ("768 samples, ...").
fn sample_count(r: &BoundReport) -> usize {
    r.sample.split_whitespace().next().and_then(|s| s.parse().ok()).unwrap_or(0)
}

/// Image-method kernel of the half plane `{x_N > 0}`, written out directly.
fn image_kernel(t: f64, x: Point, y: Point) -> f64 {
    let g = |a: f64, b: f64| (-(a * a + b * b) / (4.0 * t)).exp() / (4.0 * PI * t);
    let ds = x.lateral() - y.lateral();
    g(ds, x.height() - y.height()) - g(ds, x.height() + y.height())
}

#[test]
fn c01_half_space_kernel() {
    let start = Instant::now();
    let s = study("half_plane.conf");
    let level = s.coarse().unwrap();
    let cfg = &s.config;
    let st = s.stepping(&level.grid);
    let zero = NodePotential::zero(&level.grid);
    let ks = fd_heat_kernel_snapshots(&level.grid, &zero, cfg.fd.source, &cfg.fd.times, st).unwrap();
    let mut worst_fd = 0.0f64;
    for k in &ks {
        let max = k.max();
        for n in 0..level.grid.node_count() {
            if k.values[n] >= 1e-3 * max {
                let e = image_kernel(k.t, k.source, level.grid.point(n));
                worst_fd = worst_fd.max((k.values[n] - e).abs() / e);
            }
        }
    }
    let domain = s.domain().unwrap();
    let mut mc_bad = 0;
    let mut mc_probes = 0;
    for k in &ks {
        let batch = s.sample_paths(k.source, k.t).unwrap();
        let probes = verify::mc_probes(domain, &level.grid, k, MC_PROBES, 2.0 * cfg.mc.bandwidth);
        assert_eq!(probes.len(), MC_PROBES);
        for y in probes {
            let e = mc_kernel_estimate(domain, &batch, y, cfg.mc.bandwidth).unwrap();
            let exact = image_kernel(k.t, k.source, y);
            mc_probes += 1;
            if (e.value - exact).abs() > (MC_REL_TOL * exact).max(MC_SIGMAS * e.stderr) {
                mc_bad += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "C01",
        worst_fd <= KERNEL_REL_TOL && mc_bad == 0 && secs <= 60.0,
        format!(
            "half-plane kernel: FD max rel err {worst_fd:.4} (tol {KERNEL_REL_TOL}); MC {mc_bad}/{mc_probes} probes off \
             (tol max({MC_REL_TOL}, {MC_SIGMAS} se)); {secs:.1} s (limit 60)"
        ),
    );
}

#[test]
fn c02_half_plane_green() {
    let start = Instant::now();
    let out = study("half_plane_green.conf").run(Check::Green).unwrap();
    let r = report(&out, "green_oracle");
    let g = constant(r, "G");
    // (1/2π) ln 3 from the image kernel integrated in time.
    let oracle = 3f64.ln() / (2.0 * PI);
    let err = (g / oracle - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "C02",
        err <= GREEN_REL_TOL && secs <= 120.0,
        format!("half-plane Green: G = {g:.6}, oracle {oracle:.6}, rel err {err:.4} (tol {GREEN_REL_TOL}); {secs:.1} s (limit 120)"),
    );
}

#[test]
fn c03_geometry_lemmas() {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["half_plane.conf", "sine_profiles.conf", "clipped_v.conf", "table.conf"] {
        let s = study(name);
        let reps = verify::geometry_lemma_reports(s.domain().unwrap(), GEOMETRY_SAMPLES, s.config.seed, GEOMETRY_TOL).unwrap();
        let bad: f64 = reps.iter().map(|r| constant(r, "violations")).sum();
        ok &= bad == 0.0 && reps.iter().all(|r| r.pass);
        details.push(format!("{}: {bad} violations", s.config.name));
    }
    verdict(
        "C03",
        ok,
        format!("geometry lemmas, {GEOMETRY_SAMPLES} points per fixture, tol {GEOMETRY_TOL:e}: {}", details.join(", ")),
    );
}

#[test]
fn c04_cone_profile() {
    let start = Instant::now();
    let dx = config("cone.conf").grid.dx;
    let (err, nodes) = solve_wedge_profile(dx).unwrap().max_relative_error(0.5, 2.0);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "C04",
        nodes > 0 && err <= CONE_REL_TOL && secs <= 60.0,
        format!("wedge profile: max rel err {err:.2e} on {nodes} nodes (tol {CONE_REL_TOL}); {secs:.1} s (limit 60)"),
    );
}

fn sine_profiles() -> &'static CheckOutput {
    static OUT: OnceLock<CheckOutput> = OnceLock::new();
    OUT.get_or_init(|| study("sine_profiles.conf").run(Check::Profiles).unwrap())
}

#[test]
fn c05_profile_sandwich() {
    let r = report(sine_profiles(), "profile_sandwich");
    let c = constant(r, "C");
    let change = r.refinement_change.unwrap();
    verdict(
        "C05",
        c.is_finite() && c >= 1.0 && change < PROFILE_STABILITY,
        format!("profile sandwich: C = {c:.4}, change under dx/2 {change:.4} (limit {PROFILE_STABILITY})"),
    );
}

fn sine_green() -> &'static CheckOutput {
    static OUT: OnceLock<CheckOutput> = OnceLock::new();
    OUT.get_or_init(|| study("sine_green.conf").run(Check::Green).unwrap())
}

#[test]
fn c06_green_sandwich() {
    let r = report(sine_green(), "green_sandwich");
    let c = constant(r, "C");
    let change = r.refinement_change.unwrap();
    let pairs = sample_count(r);
    let ok = pairs == GREEN_PAIRS
        && r.max_ratio <= 1.0 + GREEN_UPPER_SLACK
        && c.is_finite()
        && r.min_ratio * c >= 1.0 - 1e-12
        && change < GREEN_STABILITY;
    verdict(
        "C06",
        ok,
        format!(
            "Green sandwich over {pairs} pairs: max G^W/G = {:.4} (limit {}), C = {c:.4}, change {change:.4} (limit {GREEN_STABILITY})",
            r.max_ratio,
            1.0 + GREEN_UPPER_SLACK
        ),
    );
}

#[test]
fn c07_gauge() {
    let r = report(sine_green(), "gauge");
    let a = constant(r, "a");
    let lo = (-a).exp() - GAUGE_SLACK;
    let hi = 1.0 + GAUGE_SLACK;
    let box_change = constant(r, "box_doubling_change");
    let ok = a.is_finite() && r.min_ratio >= lo && r.max_ratio <= hi && box_change < GAUGE_BOX_SENSITIVITY;
    verdict(
        "C07",
        ok,
        format!(
            "gauge in [{:.4}, {:.4}] within [{lo:.4}, {hi:.2}] (a = {a:.4}); box doubling change {box_change:.4} (limit {GAUGE_BOX_SENSITIVITY})",
            r.min_ratio, r.max_ratio
        ),
    );
}

#[test]
fn c08_tail_exponent() {
    let mut ok = true;
    let mut details = Vec::new();
    for eps in [0.5, 1.0] {
        let mut cfg = config("tail.conf");
        cfg.potential.eps = eps;
        let out = Study::new(cfg, 1).unwrap().run(Check::Tail).unwrap();
        let slope = constant(report(&out, "tail_exponent"), "slope");
        ok &= (slope + 0.5 * eps).abs() <= TAIL_SLOPE_TOL;
        details.push(format!("eps {eps}: slope {slope:.4} vs {:.2}", -0.5 * eps));
    }
    verdict("C08", ok, format!("tail exponent ({}; tol {TAIL_SLOPE_TOL})", details.join(", ")));
}

#[test]
fn c09_three_g() {
    let r = report(sine_green(), "three_g");
    let c = constant(r, "C");
    let unboundable = constant(r, "unboundable");
    let triples = sample_count(r);
    let change = r.refinement_change.unwrap();
    verdict(
        "C09",
        triples >= THREE_G_TRIPLES && c.is_finite() && unboundable == 0.0 && change < THREE_G_STABILITY,
        format!(
            "3G over {triples} triples (need {THREE_G_TRIPLES}): C = {c:.4}, change {change:.4} (limit {THREE_G_STABILITY}), \
             {unboundable} unboundable"
        ),
    );
}

#[test]
fn c10_doob_identity() {
    let s = study("sine.conf");
    let level = s.coarse().unwrap();
    assert!(!level.w.is_zero());
    let fd = &s.config.fd;
    let r = verify::doob_report(&level.grid, &level.hw, &level.w, fd.source, &fd.times, s.stepping(&level.grid)).unwrap();
    let err = constant(&r, "max_rel_error");
    verdict(
        "C10",
        sample_count(&r) > 0 && err <= DOOB_REL_TOL,
        format!("Doob transform: max rel err {err:.2e} over {} node values (tol {DOOB_REL_TOL})", sample_count(&r)),
    );
}

#[test]
fn c11_main_theorem() {
    let out = study("sine.conf").run(Check::MainTheorem).unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for id in ["main_theorem_w0", "main_theorem", "main_theorem_w0_remark", "main_theorem_remark"] {
        let r = report(&out, id);
        let spread = constant(r, "spread");
        let change = r.refinement_change.unwrap();
        let n = sample_count(r);
        let enough = id.ends_with("remark") || n >= MIN_KERNEL_SAMPLES;
        ok &= enough && spread < SPREAD_LIMIT && change < SPREAD_STABILITY;
        details.push(format!("{id}: spread {spread:.3}, change {change:.4}, n {n}"));
    }
    verdict(
        "C11",
        ok,
        format!("kernel bands ({}; limits spread {SPREAD_LIMIT:e}, change {SPREAD_STABILITY})", details.join("; ")),
    );
}

#[test]
fn c12_volume() {
    let r = report(sine_profiles(), "volume");
    let band = constant(r, "b/a");
    let change = r.refinement_change.unwrap();
    let n = sample_count(r);
    verdict(
        "C12",
        n == VOLUME_SAMPLES && band < VOLUME_BAND && change < VOLUME_STABILITY,
        format!("volume band over {n} samples: b/a = {band:.3} (limit {VOLUME_BAND}), change {change:.4} (limit {VOLUME_STABILITY})"),
    );
}
