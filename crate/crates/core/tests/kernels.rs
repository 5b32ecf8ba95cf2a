use std::f64::consts::PI;

use lipkernel_core::grid::Grid;
use lipkernel_core::kernel_fd::{fd_heat_kernel_snapshots, TimeStepping};
use lipkernel_core::kernel_mc::{mc_kernel_estimate, sample_paths};
use lipkernel_core::potential::ExactPotential;
use lipkernel_core::profile_solver::NodePotential;
use lipkernel_core::{BoundaryShape, GraphDomain, Point, Potential};

fn half_plane() -> GraphDomain {
    GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 8.0, 10.0, true).unwrap()
}

/// Image formula for the half plane, independent of the crate's own version.
fn image(t: f64, x: Point, y: Point) -> f64 {
    let g = |a: f64, b: f64| (-(a * a + b * b) / (4.0 * t)).exp() / (4.0 * PI * t);
    let ds = x.lateral() - y.lateral();
    g(ds, x.height() - y.height()) - g(ds, x.height() + y.height())
}

/// erf by the midpoint rule.
fn erf(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let s: f64 = (0..n).map(|i| (-((i as f64 + 0.5) * h).powi(2)).exp()).sum();
    s * h * 2.0 / PI.sqrt()
}

#[test]
fn fd_kernel_matches_images_on_coarse_grid() {
    let d = half_plane();
    let g = Grid::for_domain(&d, 0.1).unwrap();
    let x = Point::new(0.0, 1.0);
    let ks = fd_heat_kernel_snapshots(&g, &NodePotential::zero(&g), x, &[0.5, 1.0], TimeStepping::for_grid(&g)).unwrap();
    for k in &ks {
        let max = k.max();
        let mut worst = 0.0f64;
        for n in 0..g.node_count() {
            if k.values[n] >= 1e-3 * max {
                let e = image(k.t, x, g.point(n));
                worst = worst.max((k.values[n] - e).abs() / e);
            }
        }
        assert!(worst < 0.1, "t = {}: {worst}", k.t);
        let survival = erf(x.height() / (2.0 * k.t.sqrt()));
        assert!((k.mass(&g) - survival).abs() < 0.02, "mass {} vs {survival}", k.mass(&g));
    }
}

#[test]
fn mc_survival_and_density() {
    let d = half_plane();
    let zero = Potential::zero();
    let w = ExactPotential { potential: &zero, domain: &d };
    let x = Point::new(0.0, 1.0);
    let t = 0.5;
    let b = sample_paths(&d, &w, x, t, 1e-3 * t, 40_000, 11).unwrap();
    let exact = erf(1.0 / (2.0 * t.sqrt()));
    assert!((b.survival() - exact).abs() < 4.0 * b.survival_stderr() + 0.01);
    let y = Point::new(0.0, 1.2);
    let e = mc_kernel_estimate(&d, &b, y, 0.1).unwrap();
    let ex = image(t, x, y);
    assert!((e.value - ex).abs() < (0.1 * ex).max(4.0 * e.stderr), "{} vs {ex}", e.value);
}

#[test]
fn sampling_is_reproducible() {
    let d = half_plane();
    let zero = Potential::zero();
    let w = ExactPotential { potential: &zero, domain: &d };
    let x = Point::new(0.5, 0.7);
    let a = sample_paths(&d, &w, x, 0.25, 1e-3, 2_000, 5).unwrap();
    let b = sample_paths(&d, &w, x, 0.25, 1e-3, 2_000, 5).unwrap();
    assert_eq!(a.survival(), b.survival());
}
