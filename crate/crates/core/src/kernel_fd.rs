//! Finite-difference heat kernels for `Δ + W` and for the weighted operator
//! of the Doob transform, plus the half-space image formula.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::grid::{Arm, Grid, ScalarField};
use crate::linalg::{CgSettings, CsrMatrix, SpdSolver};
use crate::profile_solver::NodePotential;

/// Free-space Gaussian `(4πt)^{-1} e^{-|z|²/4t}` in two dimensions.
pub fn gaussian(t: f64, z2: f64) -> f64 {
    (-z2 / (4.0 * t)).exp() / (4.0 * PI * t)
}

/// Dirichlet heat kernel of the half-plane `{x_N > M}` by the method of images.
/// Zero when either point is not above the boundary.
pub fn half_space_kernel_exact(t: f64, x: Point, y: Point, m: f64) -> f64 {
    if x.height() <= m || y.height() <= m {
        return 0.0;
    }
    let ds = x.lateral() - y.lateral();
    let direct = ds * ds + (x.height() - y.height()).powi(2);
    // The image term is the direct one times e^{-(x_N - M)(y_N - M)/t}.
    gaussian(t, direct) * -(-(x.height() - m) * (y.height() - m) / t).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepping {
    /// Upper bound on the step.
    pub dt_max: f64,
    /// First step; zero selects `Δx² / 20`.
    pub dt_start: f64,
    /// Factor between consecutive nominal steps.
    pub growth: f64,
    /// Backward-Euler half steps before Crank–Nicolson takes over.
    pub euler_half_steps: usize,
    pub cg: CgSettings,
}

impl TimeStepping {
    /// Steps capped at `Δx`, growing by 5%.
    pub fn for_grid(grid: &Grid) -> Self {
        Self {
            dt_max: grid.dx(),
            dt_start: 0.0,
            growth: 1.05,
            euler_half_steps: 2,
            cg: CgSettings::default(),
        }
    }

    fn first_step(&self, grid: &Grid) -> f64 {
        let dt = if self.dt_start > 0.0 {
            self.dt_start
        } else {
            grid.dx() * grid.dx() / 20.0
        };
        dt.min(self.dt_max)
    }

    /// Halves every step size.
    pub fn halved(mut self) -> Self {
        self.dt_max *= 0.5;
        if self.dt_start > 0.0 {
            self.dt_start *= 0.5;
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    pub scheme: Scheme,
}

/// `M u' = -K u` with diagonal `M > 0` and symmetric positive definite `K`.
pub struct Evolution<'g> {
    grid: &'g Grid,
    mass: Vec<f64>,
    stiffness: CsrMatrix,
    stepping: TimeStepping,
    cached: Option<(f64, SpdSolver)>,
    pub steps_taken: usize,
    pub cg_iterations: usize,
}

impl<'g> Evolution<'g> {
    /// `u' = -(S/Δx² + W) u`: the heat semigroup of `Δ + W`.
    pub fn standard(grid: &'g Grid, w: &NodePotential, stepping: TimeStepping) -> Result<Self> {
        if w.values.len() != grid.node_count() {
            return Err(invalid("potential values do not match the grid"));
        }
        let dx2 = grid.dx() * grid.dx();
        let k = grid.stiffness().scaled_plus_diagonal(1.0 / dx2, &w.values);
        Self::new(grid, vec![1.0; grid.node_count()], k, stepping)
    }

    /// `h² v' = -K_h v`: the Doob transform by the positive field `h`, where
    /// `K_h` has edge weights `h_i h_j` and boundary weights `h_i g_b / θ_b`.
    pub fn weighted(grid: &'g Grid, h: &ScalarField, stepping: TimeStepping) -> Result<Self> {
        if !h.matches(grid) {
            return Err(invalid("field does not belong to the grid"));
        }
        if let Some(node) = h.values.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveProfile {
                node,
                value: h.values[node],
            });
        }
        let dx2 = grid.dx() * grid.dx();
        let hv = &h.values;
        let mut t = Vec::with_capacity(5 * grid.node_count());
        for k in 0..grid.node_count() {
            let mut diag = 0.0;
            for arm in grid.arms(k) {
                match *arm {
                    Arm::Node(m) => {
                        let e = hv[k] * hv[m] / dx2;
                        diag += e;
                        t.push((k, m, -e));
                    }
                    Arm::Crossing(c) => {
                        diag += hv[k] * h.boundary[c] / (grid.crossings()[c].theta * dx2);
                    }
                    Arm::Wall => {}
                }
            }
            t.push((k, k, diag));
        }
        let k = CsrMatrix::from_triplets(grid.node_count(), &t)?;
        let mass = hv.iter().map(|v| v * v).collect();
        Self::new(grid, mass, k, stepping)
    }

    fn new(grid: &'g Grid, mass: Vec<f64>, stiffness: CsrMatrix, stepping: TimeStepping) -> Result<Self> {
        if !(stepping.dt_max > 0.0) || !(stepping.growth >= 1.0) {
            return Err(invalid("time steps must be positive and non-decreasing"));
        }
        Ok(Self {
            grid,
            mass,
            stiffness,
            stepping,
            cached: None,
            steps_taken: 0,
            cg_iterations: 0,
        })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    fn solver(&mut self, c: f64) -> Result<&SpdSolver> {
        let fresh = !matches!(&self.cached, Some((key, _)) if *key == c);
        if fresh {
            let m = self.stiffness.scaled_plus_diagonal(c, &self.mass);
            self.cached = Some((c, SpdSolver::new(m, self.stepping.cg)?));
        }
        Ok(&self.cached.as_ref().unwrap().1)
    }

    fn advance(&mut self, u: &mut Vec<f64>, dt: f64, scheme: Scheme) -> Result<()> {
        let n = u.len();
        let mut rhs = vec![0.0; n];
        let c = match scheme {
            Scheme::BackwardEuler => {
                for i in 0..n {
                    rhs[i] = self.mass[i] * u[i];
                }
                dt
            }
            Scheme::CrankNicolson => {
                self.stiffness.mul_vec(u, &mut rhs);
                for i in 0..n {
                    rhs[i] = self.mass[i] * u[i] - 0.5 * dt * rhs[i];
                }
                0.5 * dt
            }
        };
        let stats = self.solver(c)?.solve(&rhs, u)?;
        self.cg_iterations += stats.iterations;
        self.steps_taken += 1;
        Ok(())
    }

    /// Evolves `u0` through the increasing `times`, returning the state at each.
    /// `observe` sees every step with the states before and after it.
    pub fn run(
        &mut self,
        u0: Vec<f64>,
        times: &[f64],
        observe: &mut dyn FnMut(Step, &[f64], &[f64]),
    ) -> Result<Vec<Vec<f64>>> {
        if times.is_empty() || !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("snapshot times must be positive and increasing"));
        }
        let mut u = u0;
        let mut prev = u.clone();
        let mut t = 0.0;
        let mut nominal = self.stepping.first_step(self.grid);
        let mut euler_left = self.stepping.euler_half_steps;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            while t < target {
                let rem = target - t;
                let (scheme, mut dt) = if euler_left > 0 {
                    (Scheme::BackwardEuler, 0.5 * nominal)
                } else {
                    (Scheme::CrankNicolson, nominal)
                };
                if rem <= dt * (1.0 + 1e-12) {
                    dt = rem;
                } else if rem < 2.0 * dt {
                    dt = 0.5 * rem;
                }
                prev.copy_from_slice(&u);
                self.advance(&mut u, dt, scheme)?;
                let t1 = if dt == rem { target } else { t + dt };
                observe(Step { t0: t, t1, scheme }, &prev, &u);
                t = t1;
                if euler_left > 0 {
                    euler_left -= 1;
                } else {
                    nominal = (nominal * self.stepping.growth).min(self.stepping.dt_max);
                }
            }
            out.push(u.clone());
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelMethod {
    Fd,
    Weighted,
    Mc,
    Exact,
}

/// `p(t, x, ·)` on the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelEstimate {
    pub source: Point,
    pub source_node: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub method: KernelMethod,
    pub dx: f64,
    pub dt_max: f64,
    /// Most negative value before clamping, relative to the maximum.
    pub clamped: f64,
}

impl KernelEstimate {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `∫ p(t, x, y) dy` by the node rule.
    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.values)
    }

    pub fn at(&self, grid: &Grid, y: Point) -> f64 {
        grid.interpolate(&self.values, |_| 0.0, y)
    }
}

/// Negative values below this fraction of the maximum are an error.
pub const NEGATIVE_LIMIT: f64 = 1e-6;

fn finish(
    mut values: Vec<f64>,
    source: Point,
    source_node: usize,
    t: f64,
    method: KernelMethod,
    grid: &Grid,
    stepping: &TimeStepping,
) -> Result<KernelEstimate> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(0.0, f64::min);
    let clamped = if max > 0.0 { min / max } else { 0.0 };
    if clamped < -NEGATIVE_LIMIT {
        return Err(Error::NegativeMass(min * grid.dx() * grid.dx()));
    }
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(KernelEstimate {
        source,
        source_node,
        t,
        values,
        method,
        dx: grid.dx(),
        dt_max: stepping.dt_max,
        clamped,
    })
}

/// Unit mass at the source node.
pub fn discrete_delta(grid: &Grid, node: usize) -> Vec<f64> {
    let mut u = vec![0.0; grid.node_count()];
    u[node] = 1.0 / (grid.dx() * grid.dx());
    u
}

/// `p^W(t, x, ·)` at each of the increasing `times`, started from the node
/// nearest to `x`.
pub fn fd_heat_kernel_snapshots(
    grid: &Grid,
    w: &NodePotential,
    x: Point,
    times: &[f64],
    stepping: TimeStepping,
) -> Result<Vec<KernelEstimate>> {
    let node = grid.snap(x)?;
    let mut evo = Evolution::standard(grid, w, stepping)?;
    let states = evo.run(discrete_delta(grid, node), times, &mut |_, _, _| {})?;
    let source = grid.point(node);
    states
        .into_iter()
        .zip(times)
        .map(|(u, &t)| finish(u, source, node, t, KernelMethod::Fd, grid, &stepping))
        .collect()
}

/// `p^W(t, x, ·)`.
pub fn fd_heat_kernel(
    grid: &Grid,
    w: &NodePotential,
    x: Point,
    t: f64,
    stepping: TimeStepping,
) -> Result<KernelEstimate> {
    if stepping.dt_max > t {
        return Err(Error::StepTooLarge {
            dt: stepping.dt_max,
            limit: t,
        });
    }
    Ok(fd_heat_kernel_snapshots(grid, w, x, &[t], stepping)?.remove(0))
}

/// `p_μ(t, x, ·)`, the kernel of the Doob-transformed operator as a density
/// against `μ = h² dx`, at each of the increasing `times`.
pub fn fd_weighted_heat_kernel_snapshots(
    grid: &Grid,
    h: &ScalarField,
    x: Point,
    times: &[f64],
    stepping: TimeStepping,
) -> Result<Vec<KernelEstimate>> {
    let node = grid.snap(x)?;
    let mut evo = Evolution::weighted(grid, h, stepping)?;
    let hx = h.values[node];
    let mut v0 = vec![0.0; grid.node_count()];
    v0[node] = 1.0 / (hx * hx * grid.dx() * grid.dx());
    let states = evo.run(v0, times, &mut |_, _, _| {})?;
    let source = grid.point(node);
    states
        .into_iter()
        .zip(times)
        .map(|(u, &t)| finish(u, source, node, t, KernelMethod::Weighted, grid, &stepping))
        .collect()
}

pub fn fd_weighted_heat_kernel(
    grid: &Grid,
    h: &ScalarField,
    x: Point,
    t: f64,
    stepping: TimeStepping,
) -> Result<KernelEstimate> {
    if stepping.dt_max > t {
        return Err(Error::StepTooLarge {
            dt: stepping.dt_max,
            limit: t,
        });
    }
    Ok(fd_weighted_heat_kernel_snapshots(grid, h, x, &[t], stepping)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryShape, GraphDomain};

    #[test]
    fn image_formula_examples() {
        let x = Point::new(0.0, 1.0);
        let v = half_space_kernel_exact(0.25, x, x, 0.0);
        assert!((v - 0.3124798372537343).abs() < 1e-15);
        assert_eq!(half_space_kernel_exact(0.3, x, Point::new(0.4, 0.0), 0.0), 0.0);
        // short times approach the free Gaussian on the diagonal
        let t = 1e-3;
        let ratio = half_space_kernel_exact(t, x, x, 0.0) * 4.0 * PI * t;
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steps_land_on_snapshots_and_respect_the_cap() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 1.0, 2.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let st = TimeStepping::for_grid(&g);
        let mut evo = Evolution::standard(&g, &NodePotential::zero(&g), st).unwrap();
        let mut steps = Vec::new();
        let times = [0.05, 0.3, 0.31, 1.0];
        evo.run(discrete_delta(&g, 30), &times, &mut |s, _, _| steps.push(s)).unwrap();
        assert_eq!(steps[0].scheme, Scheme::BackwardEuler);
        assert_eq!(steps[1].scheme, Scheme::BackwardEuler);
        assert_eq!(steps[2].scheme, Scheme::CrankNicolson);
        for w in steps.windows(2) {
            assert_eq!(w[0].t1, w[1].t0);
        }
        for s in &steps {
            assert!(s.t1 - s.t0 <= st.dt_max * (1.0 + 1e-12));
        }
        for t in times {
            assert!(steps.iter().any(|s| s.t1 == t));
        }
    }

    #[test]
    fn unit_weight_reduces_to_standard_kernel() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 1.0, 2.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let st = TimeStepping::for_grid(&g);
        let x = Point::new(0.0, 0.8);
        let a = fd_heat_kernel(&g, &NodePotential::zero(&g), x, 0.2, st).unwrap();
        let b = fd_weighted_heat_kernel(&g, &ScalarField::constant(&g, 1.0), x, 0.2, st).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).abs() <= 1e-9 * a.max());
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 1.0, 2.0, true).unwrap();
        let g = Grid::for_domain(&d, 0.1).unwrap();
        let st = TimeStepping::for_grid(&g);
        let err = fd_heat_kernel(&g, &NodePotential::zero(&g), Point::new(0.0, 1.0), 0.05, st);
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
    }
}
