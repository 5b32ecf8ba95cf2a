use lipkernel_core::kernel_fd::half_space_kernel_exact;
use lipkernel_core::{BoundaryShape, GraphDomain, Point};
use proptest::prelude::*;

fn sine() -> GraphDomain {
    GraphDomain::new(BoundaryShape::Sine { amplitude: 0.3, wavenumber: 1.0 }, std::f64::consts::PI, 8.0, true).unwrap()
}

proptest! {
    #[test]
    fn distance_bracket_is_tight_and_below_height(s in -3.0f64..3.0, lift in 0.01f64..5.0) {
        let d = sine();
        let x = Point::new(s, d.boundary(s) + lift);
        let b = d.distance_bracket(x, 1e-6).unwrap();
        prop_assert!(b.lower <= b.upper);
        prop_assert!(b.width() <= 1e-6);
        // The vertical gap bounds the distance from above, and a cone of
        // slope L from below.
        let gap = d.height_above(x);
        prop_assert!(b.lower <= gap + 1e-12);
        prop_assert!(b.upper >= gap / (1.0 + d.lipschitz * d.lipschitz).sqrt() - 1e-12);
    }

    #[test]
    fn half_space_kernel_is_symmetric(t in 0.05f64..4.0, a in -2.0f64..2.0, b in 0.01f64..3.0,
                                      c in -2.0f64..2.0, e in 0.01f64..3.0) {
        let x = Point::new(a, b);
        let y = Point::new(c, e);
        let p = half_space_kernel_exact(t, x, y, 0.0);
        let q = half_space_kernel_exact(t, y, x, 0.0);
        prop_assert!(p >= 0.0);
        prop_assert!((p - q).abs() <= 1e-14 * p.max(1e-300));
    }
}
