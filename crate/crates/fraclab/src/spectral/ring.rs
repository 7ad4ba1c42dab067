//! Hemisphere operator on a periodic φ ring, solved by Fourier decoupling in
//! φ, tridiagonal elimination in θ and a dense Schur system on the free
//! equator nodes.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::HemisphereGrid;
use crate::linalg::Tridiag;

/// K and M restricted to a ring of `n` consecutive φ columns of `grid` with
/// periodic closure. Vectors are stored row-major (θ outer) with the pole
/// row replicated; Dirichlet equator entries are zero.
pub(crate) struct RingOperator<'g> {
    pub grid: &'g HemisphereGrid,
    pub n: usize,
    pub phi_scale: f64,
    pub free: Vec<bool>,
    pub extra: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

pub(crate) struct ShiftedSolver<'a, 'g> {
    op: &'a RingOperator<'g>,
    modes: Vec<(Tridiag, Vec<Complex64>)>,
    free_idx: Vec<usize>,
    schur: Option<nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'g> RingOperator<'g> {
    pub fn new(grid: &'g HemisphereGrid, n: usize, phi_scale: f64, free: Vec<bool>) -> Self {
        assert_eq!(free.len(), n);
        let mut planner = FftPlanner::new();
        Self {
            grid,
            n,
            phi_scale,
            free,
            extra: vec![0.0; n],
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn nt(&self) -> usize {
        self.grid.n_theta()
    }

    pub fn len(&self) -> usize {
        self.nt() * self.n
    }

    fn wavenumber(&self, m: usize) -> f64 {
        2.0 - 2.0 * (TAU * m as f64 / self.n as f64).cos()
    }

    /// Zeroes Dirichlet entries and replicates the pole average.
    pub fn project(&self, x: &mut [f64]) {
        let n = self.n;
        for l in 0..n {
            if !self.free[l] {
                x[l] = 0.0;
            }
        }
        let p = (self.nt() - 1) * n;
        let avg = x[p..].iter().sum::<f64>() / n as f64;
        x[p..].iter_mut().for_each(|v| *v = avg);
    }

    pub fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.grid.row_measure();
        let n = self.n;
        x.iter().enumerate().map(|(i, v)| m[i / n] * v).collect()
    }

    pub fn mass_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let m = self.grid.row_measure();
        let n = self.n;
        m.iter()
            .enumerate()
            .map(|(j, mj)| mj * (0..n).map(|l| x[j * n + l] * y[j * n + l]).sum::<f64>())
            .sum()
    }

    /// Ring energy xᵀKx including the equator reaction term.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let (nt, n) = (self.nt(), self.n);
        let ct = self.grid.cond_theta();
        let cp = self.grid.cond_phi();
        let mut acc = 0.0;
        for j in 0..nt - 1 {
            let c = cp[j] * self.phi_scale;
            for l in 0..n {
                let u = x[j * n + l];
                let dt = x[(j + 1) * n + l] - u;
                let dp = x[j * n + (l + 1) % n] - u;
                acc += ct[j] * dt * dt + c * dp * dp;
            }
        }
        acc + (0..n).map(|l| self.extra[l] * x[l] * x[l]).sum::<f64>()
    }

    /// K x on the degrees of freedom. The pole row carries the full pole
    /// equation in every entry divided by n, so row sums reproduce it.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (nt, n) = (self.nt(), self.n);
        let ct = self.grid.cond_theta();
        let cp = self.grid.cond_phi();
        let mut y = vec![0.0; x.len()];
        for j in 0..nt - 1 {
            let c = cp[j] * self.phi_scale;
            for l in 0..n {
                let i = j * n + l;
                let u = x[i];
                let mut acc = c * (2.0 * u - x[j * n + (l + 1) % n] - x[j * n + (l + n - 1) % n]);
                acc += ct[j] * (u - x[i + n]);
                if j > 0 {
                    acc += ct[j - 1] * (u - x[i - n]);
                } else {
                    acc += self.extra[l] * u;
                }
                y[i] = acc;
            }
        }
        let p = (nt - 1) * n;
        let c = ct[nt - 2];
        let pole: f64 = (0..n).map(|l| c * (x[p + l] - x[p - n + l])).sum();
        y[p..].iter_mut().for_each(|v| *v = pole / n as f64);
        for l in 0..n {
            if !self.free[l] {
                y[l] = 0.0;
            }
        }
        y
    }

    /// Euclidean norm over degrees of freedom (pole counted once).
    pub fn dof_norm(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let p = (self.nt() - 1) * n;
        let body: f64 = x[..p]
            .iter()
            .enumerate()
            .filter(|(i, _)| *i >= n || self.free[*i])
            .map(|(_, v)| v * v)
            .sum();
        let pole: f64 = x[p..].iter().sum();
        (body + pole * pole).sqrt()
    }

    fn dft_row(&self, row: &[f64], inverse: bool) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if inverse {
            self.inv.process(&mut buf);
        } else {
            self.fwd.process(&mut buf);
        }
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    fn idft(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter().map(|c| c.re * s).collect()
    }

    /// Factorization of K − σM on the degrees of freedom.
    pub fn factor(&self, sigma: f64) -> Result<ShiftedSolver<'_, 'g>> {
        let (nt, n) = (self.nt(), self.n);
        let ct = self.grid.cond_theta();
        let cp = self.grid.cond_phi();
        let m = self.grid.row_measure();
        let ni = nt - 2;
        let mut modes = Vec::with_capacity(n);
        let mut circ = vec![0.0; n];
        for mode in 0..n {
            let w = self.wavenumber(mode) * self.phi_scale;
            let with_pole = mode == 0;
            let size = ni + usize::from(with_pole);
            let mut diag = Vec::with_capacity(size);
            let mut off = Vec::with_capacity(size);
            for j in 1..nt - 1 {
                diag.push(ct[j - 1] + ct[j] + cp[j] * w - sigma * m[j]);
                if j < nt - 2 {
                    off.push(-ct[j]);
                }
            }
            if with_pole {
                off.push(-ct[nt - 2]);
                diag.push(ct[nt - 2] - sigma * m[nt - 1]);
            }
            let t = Tridiag::factor(&diag, &off)?;
            let mut e1 = vec![Complex64::new(0.0, 0.0); size];
            e1[0] = Complex64::new(1.0, 0.0);
            t.solve(&mut e1);
            let d0 = ct[0] + cp[0] * w - sigma * m[0];
            circ[mode] = d0 - ct[0] * ct[0] * e1[0].re;
            modes.push((t, e1));
        }
        // First column of the physical circulant from its eigenvalues.
        let col = self.idft(circ.iter().map(|&v| Complex64::new(v, 0.0)).collect());
        let scale = 1.0 / (n as f64).sqrt();
        let free_idx: Vec<usize> = (0..n).filter(|&l| self.free[l]).collect();
        let schur = if free_idx.is_empty() {
            None
        } else {
            let k = free_idx.len();
            let mut s = DMatrix::<f64>::zeros(k, k);
            for (a, &la) in free_idx.iter().enumerate() {
                for (b, &lb) in free_idx.iter().enumerate() {
                    s[(a, b)] = col[(la + n - lb) % n] * scale;
                }
                s[(a, a)] += self.extra[la];
            }
            let lu = s.lu();
            if !lu.is_invertible() {
                return Err(Error::Singular("equator Schur complement is singular".into()));
            }
            Some(lu)
        };
        Ok(ShiftedSolver {
            op: self,
            modes,
            free_idx,
            schur,
        })
    }
}

impl ShiftedSolver<'_, '_> {
    /// Solves (K − σM) x = b where the pole equation's right-hand side is the
    /// sum of the pole row of `b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let op = self.op;
        let (nt, n) = (op.nt(), op.n);
        let ct0 = op.grid.cond_theta()[0];
        // rows 1..nt−1 in mode space, indexed [row][mode]
        let rows: Vec<Vec<Complex64>> = (1..nt)
            .map(|j| op.dft_row(&b[j * n..(j + 1) * n], false))
            .collect();
        let ni = nt - 2;
        let mut z: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for (mode, (t, _)) in self.modes.iter().enumerate() {
            let mut v: Vec<Complex64> = (0..ni).map(|r| rows[r][mode]).collect();
            if mode == 0 {
                v.push(rows[ni][0]);
            }
            t.solve(&mut v);
            z.push(v);
        }
        let z1: Vec<Complex64> = z.iter().map(|v| v[0]).collect();
        let z1_phys = op.idft(z1);
        let mut x0 = vec![0.0; n];
        if let Some(lu) = &self.schur {
            let rhs = DVector::from_iterator(
                self.free_idx.len(),
                self.free_idx.iter().map(|&l| b[l] + ct0 * z1_phys[l]),
            );
            let sol = lu.solve(&rhs).expect("factor checked invertible");
            for (a, &l) in self.free_idx.iter().enumerate() {
                x0[l] = sol[a];
            }
        }
        let x0_hat = op.dft_row(&x0, false);
        let mut out = vec![0.0; nt * n];
        out[..n].copy_from_slice(&x0);
        let mut cols = vec![vec![Complex64::new(0.0, 0.0); n]; ni];
        let mut pole_hat = Complex64::new(0.0, 0.0);
        for (mode, ((_, e1), zv)) in self.modes.iter().zip(&z).enumerate() {
            let c = x0_hat[mode] * ct0;
            for r in 0..ni {
                cols[r][mode] = zv[r] + c * e1[r];
            }
            if mode == 0 {
                pole_hat = zv[ni] + c * e1[ni];
            }
        }
        for (r, col) in cols.into_iter().enumerate() {
            let row = op.idft(col);
            out[(r + 1) * n..(r + 2) * n].copy_from_slice(&row);
        }
        let p = pole_hat.re / (n as f64).sqrt();
        out[(nt - 1) * n..].iter_mut().for_each(|v| *v = p);
        out
    }
}

/// Lowest eigenpair of (K, M) on the ring.
pub(crate) struct RingEigen {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub residual: f64,
}

pub(crate) const EIGEN_TOL: f64 = 1e-11;
/// Accepted once refinement stalls at roundoff.
pub(crate) const ACCEPT_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;

/// Shifted inverse iteration from the all-ones start with Rayleigh shift
/// refresh; the result is M-normalized with positive mean.
pub(crate) fn lowest_eigenpair(op: &RingOperator, start: Option<&[f64]>) -> Result<RingEigen> {
    let mut x = match start {
        Some(s) => s.to_vec(),
        None => vec![1.0; op.len()],
    };
    op.project(&mut x);
    let mut sigma = -1.0;
    let mut solver = op.factor(sigma)?;
    let mut last = (f64::NAN, f64::INFINITY);
    let mut shifted = false;
    for _ in 0..MAX_ITER {
        let mut y = solver.solve(&op.mass_apply(&x));
        op.project(&mut y);
        let norm = op.mass_inner(&y, &y).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Singular("inverse iteration produced a null vector".into()));
        }
        let mean: f64 = y.iter().sum();
        let sign = if mean < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|v| *v *= sign / norm);
        let lambda = op.energy(&y);
        let ky = op.apply(&y);
        let my = op.mass_apply(&y);
        let r: Vec<f64> = ky.iter().zip(&my).map(|(k, m)| k - lambda * m).collect();
        let residual = op.dof_norm(&r) / op.dof_norm(&my);
        x = y;
        let stalled = residual < ACCEPT_TOL && residual > 0.5 * last.1;
        last = (lambda, residual);
        if residual < EIGEN_TOL || stalled {
            return Ok(RingEigen { lambda, x, residual });
        }
        if !shifted && residual < 1e-2 {
            shifted = true;
            sigma = lambda - 1e-4 * (1.0 + lambda.abs());
            solver = op.factor(sigma)?;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        last_change: last.1,
    })
}
