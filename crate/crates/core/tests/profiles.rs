use std::f64::consts::PI;

use lipkernel_core::grid::Grid;
use lipkernel_core::potential::ExactPotential;
use lipkernel_core::profile_solver::{
    profile_ratio_report, solve_harmonic_profile, solve_schrodinger_profile, solve_wedge_profile, NodePotential,
};
use lipkernel_core::{BoundaryShape, GraphDomain, Potential};

#[test]
fn wedge_profile_converges() {
    let coarse = solve_wedge_profile(0.1).unwrap().max_relative_error(0.5, 2.0);
    let fine = solve_wedge_profile(0.05).unwrap().max_relative_error(0.5, 2.0);
    assert!(coarse.1 > 0 && fine.1 > coarse.1);
    assert!(fine.0 < 0.02, "{fine:?}");
}

#[test]
fn sine_profiles_are_comparable() {
    let d = GraphDomain::new(BoundaryShape::Sine { amplitude: 0.3, wavenumber: 1.0 }, 2.0 * PI, 8.0, true).unwrap();
    let w = Potential::pure_decay(1.0, 0.5).unwrap();
    let g = Grid::for_domain(&d, 4.0 * PI / 64.0).unwrap();
    let nodes = NodePotential::new(&g, &ExactPotential { potential: &w, domain: &d });
    let h = solve_harmonic_profile(&d, &g).unwrap();
    let hw = solve_schrodinger_profile(&d, &g, &nodes).unwrap();
    let rep = profile_ratio_report(&d, &g, &h, &hw).unwrap();
    let c = rep.constant("C").unwrap();
    assert!(rep.pass);
    assert!((1.0..10.0).contains(&c), "C = {c}");
    assert!(rep.min_ratio <= 1.0 && rep.max_ratio >= 1.0);
}
