//! Harmonic and Schrödinger profiles on a grid, the exact cone profile, and
//! the structural checks that profiles must pass.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::{GraphDomain, Point};
use crate::grid::{BoundaryKind, Grid, GridLayout, Lateral, Region, ScalarField, FieldKind};
use crate::linalg::{CgSettings, SpdSolver};
use crate::potential::PotentialField;
use crate::report::BoundReport;

/// The normalization point `o = (0, 1 + 2M)`.
pub fn anchor(domain: &GraphDomain) -> Point {
    Point::new(0.0, 1.0 + 2.0 * domain.bound)
}

/// `W` at the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NodePotential {
    pub values: Vec<f64>,
}

impl NodePotential {
    pub fn zero(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn new(grid: &Grid, w: &dyn PotentialField) -> Self {
        if w.vanishes() {
            return Self::zero(grid);
        }
        Self {
            values: grid.node_values(|p| w.value(p)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Lateral mean of `W` on every node row (nodes outside the domain count as zero).
    fn row_means(&self, grid: &Grid) -> Vec<f64> {
        let mut sums = vec![0.0; grid.ny];
        for (k, &w) in self.values.iter().enumerate() {
            sums[grid.cell(k).1] += w;
        }
        sums.iter().map(|s| s / grid.nx as f64).collect()
    }
}

/// Solves `(S/Δx² + diag W) u = load(g)`.
fn solve_dirichlet(grid: &Grid, w: Option<&NodePotential>, g: &[f64], guess: Vec<f64>) -> Result<Vec<f64>> {
    let dx2 = grid.dx() * grid.dx();
    let shift = match w {
        Some(w) => w.values.clone(),
        None => vec![0.0; grid.node_count()],
    };
    let a = grid.stiffness().scaled_plus_diagonal(1.0 / dx2, &shift);
    let b = grid.boundary_load(g);
    let solver = SpdSolver::new(a, CgSettings::default())?;
    let mut u = guess;
    solver.solve(&b, &mut u)?;
    Ok(u)
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0)) {
        Some(node) => Err(Error::NonPositiveProfile {
            node,
            value: values[node],
        }),
        None => Ok(()),
    }
}

fn normalize(mut field: ScalarField, grid: &Grid, o: Point) -> Result<ScalarField> {
    let at = field.sample(grid, o);
    if !(at > 0.0) {
        return Err(Error::NonPositiveProfile { node: 0, value: at });
    }
    field = field.scaled(1.0 / at);
    Ok(field)
}

fn profile_guess(domain: &GraphDomain, grid: &Grid) -> Vec<f64> {
    grid.node_values(|p| domain.height_above(p).max(0.0))
}

/// `Δh = 0` with `h = 0` on the graph and `h = x_N + M` on the lid,
/// normalized to `h(o) = 1`.
pub fn solve_harmonic_profile(domain: &GraphDomain, grid: &Grid) -> Result<ScalarField> {
    let m = if domain.is_bounded() { domain.bound } else { 0.0 };
    let g: Vec<f64> = grid
        .crossings()
        .iter()
        .map(|c| match c.kind {
            BoundaryKind::Lid => c.point.height() + m,
            _ => 0.0,
        })
        .collect();
    let values = solve_dirichlet(grid, None, &g, profile_guess(domain, grid))?;
    check_positive(&values)?;
    let field = ScalarField {
        kind: FieldKind::Harmonic,
        values,
        boundary: g,
        above_lid_slope: 1.0,
    };
    normalize(field, grid, anchor(domain))
}

/// Lid value `u(H)` of the far-field problem `-u'' + W̄ u = 0` on `[-M, H]`
/// with `u(-M) = 0` and `u'(H) = 1`, `W̄` being the row mean of `W`.
pub fn far_field_lid_value(domain: &GraphDomain, grid: &Grid, w: &NodePotential) -> f64 {
    let means = w.row_means(grid);
    let dx = grid.dx();
    let top = grid.layout.lid;
    let row0 = top - grid.ny as f64 * dx;
    let wbar = |y: f64| -> f64 {
        let f = (y - row0) / dx;
        if f <= 0.0 {
            return means[0];
        }
        let j = f.floor() as usize;
        if j + 1 >= means.len() {
            return *means.last().unwrap();
        }
        let a = f - j as f64;
        (1.0 - a) * means[j] + a * means[j + 1]
    };
    // Integrate the two fundamental solutions downward from the lid.
    let bottom = -domain.bound;
    let steps = ((top - bottom) / (0.5 * dx)).ceil().max(1.0) as usize;
    let h = (top - bottom) / steps as f64;
    let rhs = |y: f64, s: [f64; 4]| -> [f64; 4] {
        let q = wbar(y);
        [s[1], q * s[0], s[3], q * s[2]]
    };
    let mut s = [1.0, 0.0, 0.0, 1.0];
    let mut y = top;
    for _ in 0..steps {
        let k1 = rhs(y, s);
        let mid = |k: &[f64; 4], c: f64| -> [f64; 4] {
            let mut out = s;
            for i in 0..4 {
                out[i] -= c * h * k[i];
            }
            out
        };
        let k2 = rhs(y - 0.5 * h, mid(&k1, 0.5));
        let k3 = rhs(y - 0.5 * h, mid(&k2, 0.5));
        let k4 = rhs(y - h, mid(&k3, 1.0));
        for i in 0..4 {
            s[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        y -= h;
    }
    // u = a φ1 + φ2 with u(-M) = 0.
    -s[2] / s[0]
}

/// `(Δ + W) h^W = 0` with zero data on the graph and the far-field value on
/// the lid, normalized to `h^W(o) = 1`.
pub fn solve_schrodinger_profile(domain: &GraphDomain, grid: &Grid, w: &NodePotential) -> Result<ScalarField> {
    if w.values.len() != grid.node_count() {
        return Err(invalid("potential values do not match the grid"));
    }
    if w.is_zero() {
        let mut h = solve_harmonic_profile(domain, grid)?;
        h.kind = FieldKind::Schrodinger;
        return Ok(h);
    }
    let lid = far_field_lid_value(domain, grid, w);
    let g: Vec<f64> = grid
        .crossings()
        .iter()
        .map(|c| if c.kind == BoundaryKind::Lid { lid } else { 0.0 })
        .collect();
    let values = solve_dirichlet(grid, Some(w), &g, profile_guess(domain, grid))?;
    check_positive(&values)?;
    let field = ScalarField {
        kind: FieldKind::Schrodinger,
        values,
        boundary: g,
        above_lid_slope: 1.0,
    };
    normalize(field, grid, anchor(domain))
}

/// `r^{2/3} sin(π/6 + 2θ/3)`, the profile of the wedge `-π/4 ≤ θ ≤ 5π/4`.
pub fn cone_profile_exact(r: f64, theta: f64) -> Result<f64> {
    let tol = 1e-12;
    if !(theta >= -PI / 4.0 - tol && theta <= 5.0 * PI / 4.0 + tol) {
        return Err(Error::AngleOutsideWedge(theta));
    }
    if !(r >= 0.0) {
        return Err(invalid("radius must be non-negative"));
    }
    Ok(r.powf(2.0 / 3.0) * (PI / 6.0 + 2.0 * theta / 3.0).sin())
}

/// Polar angle of `p` measured in the wedge range `(-π/2, 3π/2]`.
pub fn wedge_angle(p: Point) -> f64 {
    let t = p.height().atan2(p.lateral());
    if t <= -PI / 2.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// The truncated wedge `{r_in < r < r_out, x_2 > -|x_1|}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeRegion {
    pub r_in: f64,
    pub r_out: f64,
}

impl Region for WedgeRegion {
    fn inside(&self, p: Point) -> bool {
        let r2 = p.lateral() * p.lateral() + p.height() * p.height();
        r2 > self.r_in * self.r_in && r2 < self.r_out * self.r_out && p.height() > -p.lateral().abs()
    }
}

#[derive(Clone, Debug)]
pub struct WedgeSolve {
    pub grid: Grid,
    pub field: ScalarField,
}

impl WedgeSolve {
    /// Largest relative error against the exact profile over nodes with
    /// `r_lo ≤ r ≤ r_hi`, and the number of such nodes.
    pub fn max_relative_error(&self, r_lo: f64, r_hi: f64) -> (f64, usize) {
        let mut worst = 0.0f64;
        let mut count = 0;
        for k in 0..self.grid.node_count() {
            let p = self.grid.point(k);
            let r = p.distance(&Point::new(0.0, 0.0));
            if r < r_lo || r > r_hi {
                continue;
            }
            let exact = exact_at(p);
            if exact <= 0.0 {
                continue;
            }
            count += 1;
            worst = worst.max((self.field.values[k] - exact).abs() / exact);
        }
        (worst, count)
    }
}

fn exact_at(p: Point) -> f64 {
    let theta = wedge_angle(p).clamp(-PI / 4.0, 5.0 * PI / 4.0);
    cone_profile_exact(p.distance(&Point::new(0.0, 0.0)), theta).unwrap_or(0.0)
}

/// Solves `Δh = 0` on the wedge `1/4 < r < 4` with the exact profile as
/// Dirichlet data on the whole boundary.
pub fn solve_wedge_profile(dx: f64) -> Result<WedgeSolve> {
    let region = WedgeRegion { r_in: 0.25, r_out: 4.0 };
    let half = (4.0 / dx).ceil() * dx + dx;
    let layout = GridLayout {
        x_min: -half,
        x_max: half,
        y_min: -half,
        lid: half,
        dx,
        lateral: Lateral::Closed,
    };
    let grid = Grid::new(&region, layout)?;
    let g: Vec<f64> = grid.crossings().iter().map(|c| exact_at(c.point)).collect();
    let values = solve_dirichlet(&grid, None, &g, vec![0.0; grid.node_count()])?;
    let field = ScalarField {
        kind: FieldKind::Harmonic,
        values,
        boundary: g,
        above_lid_slope: 0.0,
    };
    Ok(WedgeSolve { grid, field })
}

/// Min and max of `h^W / h` over the nodes and `C = max(max, 1/min)`.
/// Both fields must be normalized at the anchor.
pub fn profile_ratio_report(
    domain: &GraphDomain,
    grid: &Grid,
    h: &ScalarField,
    hw: &ScalarField,
) -> Result<BoundReport> {
    if !h.matches(grid) || !hw.matches(grid) {
        return Err(invalid("fields do not belong to the grid"));
    }
    let o = anchor(domain);
    for f in [h, hw] {
        let at = f.sample(grid, o);
        if (at - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(at));
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, b) in h.values.iter().zip(&hw.values) {
        let r = b / a;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let c = hi.max(1.0 / lo);
    let mut rep = BoundReport::new("profile_sandwich").with_constant("C", c);
    rep.min_ratio = lo;
    rep.max_ratio = hi;
    rep.sample = format!("all {} grid nodes, dx = {}", grid.node_count(), grid.dx());
    rep.pass = c.is_finite() && lo > 0.0;
    Ok(rep)
}

/// Pairs of vertically adjacent nodes where `h` decreases by more than `tol`.
pub fn monotonicity_violations(grid: &Grid, h: &ScalarField, tol: f64) -> usize {
    let mut count = 0;
    for k in 0..grid.node_count() {
        let (i, j) = grid.cell(k);
        if let Some(up) = grid.node_at(i, j + 1) {
            if h.values[up] < h.values[k] - tol {
                count += 1;
            }
        }
    }
    count
}

/// Nodes whose value is at most zero while all four neighbours are larger.
pub fn nonpositive_local_minima(grid: &Grid, h: &ScalarField) -> usize {
    (0..grid.node_count())
        .filter(|&k| {
            let v = h.values[k];
            v <= 0.0
                && grid.arms(k).iter().all(|a| match *a {
                    crate::grid::Arm::Node(m) => h.values[m] > v,
                    _ => true,
                })
        })
        .count()
}

/// Constants `(a, b)` with `a (x_N - M) ≤ h ≤ b (x_N + M)` on nodes above `M`.
pub fn sandwich_constants(domain: &GraphDomain, grid: &Grid, h: &ScalarField) -> (f64, f64) {
    let m = domain.bound;
    let (mut a, mut b) = (f64::INFINITY, 0.0f64);
    for k in 0..grid.node_count() {
        let y = grid.point(k).height();
        if y <= m {
            continue;
        }
        let v = h.values[k];
        a = a.min(v / (y - m));
        b = b.max(v / (y + m));
    }
    (a, b)
}

/// `∫_{B(x,r)∩Ω} h² dz / (h(x+r)² r²)` with `h` sampled on a sub-lattice of
/// spacing `Δx / 4`.
pub fn volume_ratio(domain: &GraphDomain, grid: &Grid, h: &ScalarField, x: Point, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let s = 0.25 * grid.dx();
    let n = (r / s).ceil() as i64;
    let mut sum = 0.0;
    for a in -n..=n {
        for b in -n..=n {
            let (u, v) = ((a as f64 + 0.5) * s, (b as f64 + 0.5) * s);
            if u * u + v * v >= r * r {
                continue;
            }
            let z = Point::new(x.lateral() + u, x.height() + v);
            if domain.contains(z) {
                let hz = h.sample(grid, z);
                sum += hz * hz;
            }
        }
    }
    let top = h.sample(grid, x.shifted(r));
    if !(top > 0.0) {
        return Err(Error::Degenerate("profile vanishes at x + r".to_string()));
    }
    Ok(sum * s * s / (top * top * r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryShape;
    use crate::potential::{ExactPotential, Potential};

    #[test]
    fn cone_examples() {
        assert!((cone_profile_exact(1.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(cone_profile_exact(3.0, -PI / 4.0).unwrap().abs() < 1e-15);
        assert!((cone_profile_exact(8.0, PI / 2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(
            cone_profile_exact(1.0, -PI / 2.0),
            Err(Error::AngleOutsideWedge(_))
        ));
    }

    #[test]
    fn half_plane_profile_is_linear() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 2.0, 4.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let h = solve_harmonic_profile(&d, &g).unwrap();
        for k in 0..g.node_count() {
            let y = g.point(k).height();
            assert!((h.values[k] - y).abs() < 1e-7 * (1.0 + y), "{y} {}", h.values[k]);
        }
    }

    #[test]
    fn constant_boundary_translates() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.5 }, 2.0, 4.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let h = solve_harmonic_profile(&d, &g).unwrap();
        let o = anchor(&d);
        for k in 0..g.node_count() {
            let y = g.point(k).height();
            let want = (y - 0.5) / (o.height() - 0.5);
            assert!((h.values[k] - want).abs() < 1e-7, "{y}");
        }
    }

    #[test]
    fn zero_potential_reduces_to_harmonic() {
        let s = BoundaryShape::Sine {
            amplitude: 0.3,
            wavenumber: 1.0,
        };
        let d = GraphDomain::new(s, PI, 4.0, true).unwrap();
        let g = Grid::for_domain(&d, PI / 20.0).unwrap();
        let h = solve_harmonic_profile(&d, &g).unwrap();
        let hw = solve_schrodinger_profile(&d, &g, &NodePotential::zero(&g)).unwrap();
        assert_eq!(h.values, hw.values);
        assert_eq!(monotonicity_violations(&g, &h, 0.0), 0);
        assert_eq!(nonpositive_local_minima(&g, &h), 0);
        let rep = profile_ratio_report(&d, &g, &h, &hw).unwrap();
        assert!((rep.constant("C").unwrap() - 1.0).abs() < 1e-12);
        let doubled = hw.scaled(2.0);
        assert!(matches!(
            profile_ratio_report(&d, &g, &h, &doubled),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn far_field_reduces_to_linear_without_potential() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 1.0, 4.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let v = far_field_lid_value(&d, &g, &NodePotential::zero(&g));
        assert!((v - 4.0).abs() < 1e-12);
        let w = Potential::pure_decay(1.0, 0.5).unwrap();
        let nodes = NodePotential::new(&g, &ExactPotential { potential: &w, domain: &d });
        let lid = far_field_lid_value(&d, &g, &nodes);
        assert!(lid > 0.0 && lid < 4.0);
    }

    #[test]
    fn schrodinger_profile_sits_below_harmonic_shape() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 1.0, 6.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let w = Potential::pure_decay(1.0, 0.5).unwrap();
        let nodes = NodePotential::new(&g, &ExactPotential { potential: &w, domain: &d });
        let h = solve_harmonic_profile(&d, &g).unwrap();
        let hw = solve_schrodinger_profile(&d, &g, &nodes).unwrap();
        let rep = profile_ratio_report(&d, &g, &h, &hw).unwrap();
        let c = rep.constant("C").unwrap();
        assert!(c > 1.0 && c < 10.0, "{c}");
        assert_eq!(monotonicity_violations(&g, &hw, 0.0), 0);
    }

    #[test]
    fn half_plane_volume_ratio_matches_closed_form() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 4.0, 8.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.05).unwrap();
        let h = solve_harmonic_profile(&d, &g).unwrap();
        let x = Point::new(0.0, 2.0);
        let r = 1.0;
        let v = volume_ratio(&d, &g, &h, x, r).unwrap();
        // h = z_2 and ∫_{B(x,1)} z_2² dz = π (2² + 1/4)
        let exact = PI * (4.0 + 0.25) / 9.0;
        assert!((v - exact).abs() < 2e-3 * exact, "{v} {exact}");
    }
}
