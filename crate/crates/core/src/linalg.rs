//! Sparse symmetric systems: CSR storage, a modified incomplete LU
//! preconditioner and preconditioned conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Compressed sparse row matrix. Every row stores its diagonal entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// missing diagonal entries are stored as explicit zeros.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(invalid("triplet index out of range"));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(triplets.len() + n);
        let mut vals = Vec::with_capacity(triplets.len() + n);
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, 0.0));
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for &(j, v) in row.iter() {
                if cols.len() > start && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            let d = start + cols[start..].iter().position(|&j| j == i).unwrap();
            diag.push(d);
            row_ptr.push(cols.len());
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag.iter().map(|&k| self.vals[k]).collect()
    }

    /// Entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    /// `scale * A + diag(shift)` on the same sparsity pattern.
    pub fn scaled_plus_diagonal(&self, scale: f64, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for v in out.vals.iter_mut() {
            *v *= scale;
        }
        for (i, &k) in out.diag.iter().enumerate() {
            out.vals[k] += shift[i];
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, v)| {
                let t = self.row(j).find(|&(c, _)| c == i).map_or(0.0, |e| e.1);
                (v - t).abs() <= tol * (1.0 + v.abs())
            })
        })
    }
}

/// Modified ILU(0): fill outside the pattern is dropped and a fraction
/// `omega` of it is moved onto the diagonal. For symmetric M-matrices the
/// factors are those of a modified incomplete Cholesky factorization.
#[derive(Clone, Debug)]
pub struct Milu {
    lu: CsrMatrix,
}

impl Milu {
    pub const DEFAULT_OMEGA: f64 = 0.97;

    pub fn new(a: &CsrMatrix, omega: f64) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            let di = lu.diag[i];
            for kk in start..di {
                let k = lu.cols[kk];
                let pivot = lu.vals[lu.diag[k]];
                let lik = lu.vals[kk] / pivot;
                lu.vals[kk] = lik;
                for jj in lu.diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[jj];
                    let update = lik * lu.vals[jj];
                    match pos[j] {
                        usize::MAX => lu.vals[di] -= omega * update,
                        p => lu.vals[p] -= update,
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            let d = lu.vals[di];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Degenerate(alloc::format!(
                    "incomplete factorization breaks down at row {i} (pivot {d:e})"
                )));
            }
        }
        Ok(Self { lu })
    }

    /// `z = (LU)^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = r[i];
            for k in lu.row_ptr[i]..lu.diag[i] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for k in lu.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s / lu.vals[lu.diag[i]];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `||b - Ax|| / ||b||`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 5000,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG for symmetric positive definite `a`; `x` holds the
/// initial guess on entry and the solution on exit.
pub fn pcg(a: &CsrMatrix, m: &Milu, b: &[f64], x: &mut [f64], settings: CgSettings) -> Result<SolveStats> {
    let n = a.dim();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = dot(&r, &r).sqrt() / bnorm;
    if res <= settings.rel_tol {
        return Ok(SolveStats {
            iterations: 0,
            residual: res,
        });
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=settings.max_iter {
        a.mul_vec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Degenerate("matrix is not positive definite".into()));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= settings.rel_tol {
            return Ok(SolveStats {
                iterations: it,
                residual: res,
            });
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
        residual: res,
    })
}

/// Factorizes once and solves repeatedly, warm-starting from the last solution.
#[derive(Clone, Debug)]
pub struct SpdSolver {
    pub matrix: CsrMatrix,
    precond: Milu,
    pub settings: CgSettings,
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix, settings: CgSettings) -> Result<Self> {
        let precond = Milu::new(&matrix, Milu::DEFAULT_OMEGA)?;
        Ok(Self {
            matrix,
            precond,
            settings,
        })
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<SolveStats> {
        pcg(&self.matrix, &self.precond, b, x, self.settings)
    }
}

/// Least-squares fit `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(invalid("a linear fit needs at least two points"));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("linear fit with coincident abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(nx: usize, ny: usize, shift: f64) -> CsrMatrix {
        let id = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                t.push((id(i, j), id(i, j), 4.0 + shift));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                }
                if i + 1 < nx {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                }
                if j + 1 < ny {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(nx * ny, &t).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 1, 5.0)]).unwrap();
        assert_eq!(a.row(0).collect::<Vec<_>>(), vec![(0, 0.0), (1, 3.0)]);
        assert_eq!(a.diagonal(), vec![0.0, 5.0]);
        assert!(!a.is_symmetric(1e-12));
    }

    #[test]
    fn pcg_solves_poisson() {
        let a = laplacian(40, 30, 0.0);
        assert!(a.is_symmetric(0.0));
        let n = a.dim();
        let exact: Vec<f64> = (0..n).map(|k| ((k as f64) * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&exact, &mut b);
        let solver = SpdSolver::new(a, CgSettings::default()).unwrap();
        let mut x = vec![0.0; n];
        let stats = solver.solve(&b, &mut x).unwrap();
        assert!(stats.residual <= 1e-10);
        assert!(stats.iterations < 200, "{}", stats.iterations);
        let err = x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn warm_start_returns_immediately() {
        let a = laplacian(10, 10, 1.0);
        let b = vec![1.0; 100];
        let s = SpdSolver::new(a, CgSettings::default()).unwrap();
        let mut x = vec![0.0; 100];
        s.solve(&b, &mut x).unwrap();
        let again = s.solve(&b, &mut x).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let a = laplacian(30, 30, 0.0);
        let settings = CgSettings {
            rel_tol: 1e-14,
            max_iter: 2,
        };
        let s = SpdSolver::new(a, settings).unwrap();
        let mut x = vec![0.0; 900];
        let err = s.solve(&vec![1.0; 900], &mut x).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 2, .. }));
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (a, b) = linear_fit(&xs, &ys).unwrap();
        assert!((a - 2.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14);
    }
}
