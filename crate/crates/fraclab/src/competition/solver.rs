//! Half-ball β-system on one φ period: Fourier modes in φ, banded Cholesky
//! in (r, θ) per mode, Schur complement onto the flat sheet, PCG on the
//! sheet, and a backtracking fixed-point loop for the coupled pair.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HalfBallGrid;
use crate::linalg::BandCholesky;

/// Convergence log entry of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveLogRow {
    pub iter: usize,
    #[serde(rename = "I")]
    pub energy: f64,
    pub interaction: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_outer: usize,
    pub rel_tol: f64,
    pub pcg_tol: f64,
    pub max_pcg: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_outer: 300,
            rel_tol: 1e-10,
            pcg_tol: 1e-11,
            max_pcg: 2000,
        }
    }
}

struct Mode {
    s: DMatrix<f64>,
    c: Vec<Complex64>,
}

/// Sheet reduction of the energy on a ring of `n` φ columns:
/// Q(x) = Σ_m x̂ᴴ S_m x̂ + 2 Re ĉᴴ x̂ + e.
pub(crate) struct SheetProblem<'a> {
    grid: &'a HalfBallGrid,
    n: usize,
    ns: usize,
    modes: Vec<Mode>,
    e: f64,
    area: Vec<f64>,
    boundary: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

struct Coeffs<'a> {
    ct: &'a [f64],
    cp: &'a [f64],
    m: &'a [f64],
    aw: Vec<f64>,
    res: Vec<f64>,
    nt: usize,
    ns: usize,
}

impl Coeffs<'_> {
    fn radial(&self, i: usize, j: usize) -> f64 {
        self.m[j] / self.res[i]
    }

    fn nb(&self, mode: usize) -> usize {
        self.nt - 2 + usize::from(mode == 0)
    }

    /// Interior band entry (p ≥ q) for unknowns (i, j = r + 1).
    fn interior(&self, w: f64, nb: usize, p: usize, q: usize) -> f64 {
        let (i, r) = (p / nb, p % nb);
        let (iq, rq) = (q / nb, q % nb);
        let j = r + 1;
        if p == q {
            let mut d = if j < self.nt - 1 {
                self.aw[i] * (self.ct[j - 1] + self.ct[j] + self.cp[j] * w)
            } else {
                self.aw[i] * self.ct[self.nt - 2]
            };
            d += self.radial(i, j);
            if i > 0 {
                d += self.radial(i - 1, j);
            }
            d
        } else if iq == i && rq + 1 == r {
            -self.aw[i] * self.ct[r]
        } else if iq + 1 == i && rq == r {
            -self.radial(i - 1, j)
        } else {
            0.0
        }
    }

    fn sheet(&self, w: f64) -> DMatrix<f64> {
        let ns = self.ns;
        let mut s = DMatrix::zeros(ns, ns);
        for i in 0..ns {
            s[(i, i)] = self.aw[i] * (self.ct[0] + self.cp[0] * w) + self.radial(i, 0);
            if i > 0 {
                s[(i, i)] += self.radial(i - 1, 0);
                s[(i, i - 1)] = -self.radial(i - 1, 0);
                s[(i - 1, i)] = -self.radial(i - 1, 0);
            }
        }
        s
    }
}

impl<'a> SheetProblem<'a> {
    /// `boundary` holds the outer-shell data on the ring, row-major in θ.
    pub fn new(grid: &'a HalfBallGrid, n: usize, boundary: &[f64]) -> Result<Self> {
        let sphere = grid.sphere();
        let nt = sphere.n_theta();
        let nr = grid.n_r();
        let ns = nr - 1;
        let mut faces_aw = grid.shell_angular_weights();
        faces_aw.truncate(nr);
        let co = Coeffs {
            ct: sphere.cond_theta(),
            cp: sphere.cond_phi(),
            m: sphere.row_measure(),
            aw: faces_aw,
            res: (0..nr - 1).map(|i| grid.layer_resistance(i)).collect(),
            nt,
            ns,
        };
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let dft = |row: &[f64]| -> Vec<Complex64> {
            let mut b: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fwd.process(&mut b);
            let s = 1.0 / (n as f64).sqrt();
            b.iter_mut().for_each(|c| *c *= s);
            b
        };
        let g_hat: Vec<Vec<Complex64>> = (0..nt).map(|j| dft(&boundary[j * n..(j + 1) * n])).collect();
        let last = ns - 1;
        let half = n / 2;

        let results: Vec<Result<(Mode, f64)>> = (0..=half)
            .into_par_iter()
            .map(|mode| {
                let w = 2.0 - 2.0 * (TAU * mode as f64 / n as f64).cos();
                let nb = co.nb(mode);
                let ni = ns * nb;
                let chol = BandCholesky::factor(ni, nb, |p, q| co.interior(w, nb, p, q))?;
                // response to the sheet unknowns
                let mut s = co.sheet(w);
                let mut col = vec![0.0; ni];
                for i2 in 0..ns {
                    col.iter_mut().for_each(|v| *v = 0.0);
                    col[i2 * nb] = -co.aw[i2] * co.ct[0];
                    chol.solve(&mut col);
                    for i in 0..ns {
                        s[(i, i2)] += co.aw[i] * co.ct[0] * col[i * nb];
                    }
                }
                // response to the Dirichlet shell
                let mut bd_re = vec![0.0; ni];
                let mut bd_im = vec![0.0; ni];
                for r in 0..nb {
                    let gj = g_hat[r + 1][mode];
                    let c = -co.radial(last, r + 1);
                    bd_re[last * nb + r] = c * gj.re;
                    bd_im[last * nb + r] = c * gj.im;
                }
                let mut yd_re = bd_re.clone();
                let mut yd_im = bd_im.clone();
                chol.solve(&mut yd_re);
                chol.solve(&mut yd_im);
                let mut c = vec![Complex64::new(0.0, 0.0); ns];
                for (i, ci) in c.iter_mut().enumerate() {
                    *ci = Complex64::new(yd_re[i * nb], yd_im[i * nb]) * (co.aw[i] * co.ct[0]);
                }
                c[last] -= g_hat[0][mode] * co.radial(last, 0);
                let cross: f64 = (0..ni).map(|p| bd_re[p] * yd_re[p] + bd_im[p] * yd_im[p]).sum();
                let weight = if mode == 0 || 2 * mode == n { 1.0 } else { 2.0 };
                s = 0.5 * (&s + s.transpose());
                Ok((Mode { s, c }, weight * cross))
            })
            .collect();
        let mut modes = Vec::with_capacity(half + 1);
        let mut cross_total = 0.0;
        for r in results {
            let (m, cr) = r?;
            modes.push(m);
            cross_total += cr;
        }

        // Dirichlet-only energy: outer shell tangential part plus the
        // boundary half of the last radial layer.
        let aw_last = grid.shell_angular_weights()[nr - 1];
        let mut e_dd = 0.0;
        for j in 0..nt - 1 {
            let cpj = co.cp[j];
            for l in 0..n {
                let u = boundary[j * n + l];
                let dt = boundary[(j + 1) * n + l] - u;
                let dp = boundary[j * n + (l + 1) % n] - u;
                e_dd += aw_last * (co.ct[j] * dt * dt + cpj * dp * dp);
            }
        }
        for j in 0..nt {
            for l in 0..n {
                e_dd += co.radial(last, j) * boundary[j * n + l].powi(2);
            }
        }
        let dphi = sphere.dphi();
        let area = grid.shell_flat_weights()[..ns].iter().map(|w| w * dphi).collect();
        Ok(Self {
            grid,
            n,
            ns,
            modes,
            e: e_dd - cross_total,
            area,
            boundary: boundary.to_vec(),
            fwd,
            inv,
        })
    }

    fn mode(&self, m: usize) -> &Mode {
        if m <= self.n / 2 {
            &self.modes[m]
        } else {
            &self.modes[self.n - m]
        }
    }

    fn dft_rows(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        let s = 1.0 / (self.n as f64).sqrt();
        x.chunks(self.n)
            .map(|row| {
                let mut b: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v * s, 0.0)).collect();
                self.fwd.process(&mut b);
                b
            })
            .collect()
    }

    fn idft_into(&self, rows: Vec<Vec<Complex64>>, out: &mut [f64]) {
        let s = 1.0 / (self.n as f64).sqrt();
        for (row, dst) in rows.into_iter().zip(out.chunks_mut(self.n)) {
            let mut b = row;
            self.inv.process(&mut b);
            for (d, c) in dst.iter_mut().zip(&b) {
                *d = c.re * s;
            }
        }
    }

    /// Physical S x for sheet vectors laid out [shell][φ].
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let xh = self.dft_rows(x);
        let mut yh = vec![vec![Complex64::new(0.0, 0.0); self.n]; self.ns];
        for m in 0..self.n {
            let s = &self.mode(m).s;
            for i in 0..self.ns {
                let mut acc = Complex64::new(0.0, 0.0);
                for i2 in 0..self.ns {
                    acc += xh[i2][m] * s[(i, i2)];
                }
                yh[i][m] = acc;
            }
        }
        let mut out = vec![0.0; x.len()];
        self.idft_into(yh, &mut out);
        out
    }

    /// Physical linear coefficient c.
    pub fn linear(&self) -> Vec<f64> {
        let mut ch = vec![vec![Complex64::new(0.0, 0.0); self.n]; self.ns];
        for m in 0..self.n {
            let c = &self.mode(m).c;
            for i in 0..self.ns {
                ch[i][m] = if m <= self.n / 2 { c[i] } else { c[i].conj() };
            }
        }
        let mut out = vec![0.0; self.ns * self.n];
        self.idft_into(ch, &mut out);
        out
    }

    fn mirror(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; x.len()];
        for (src, dst) in x.chunks(n).zip(out.chunks_mut(n)) {
            for l in 0..n {
                dst[l] = src[(n - l) % n];
            }
        }
        out
    }

    fn overlap(&self, x: &[f64]) -> f64 {
        let v = self.mirror(x);
        x.iter()
            .zip(&v)
            .enumerate()
            .map(|(p, (a, b))| self.area[p / self.n] * a * a * b * b)
            .sum()
    }

    /// PCG for (S + diag(dvec)) x = rhs with per-column radial block
    /// preconditioning.
    fn pcg(&self, dvec: &[f64], rhs: &[f64], x: &mut [f64], opts: &SolveOptions) -> Result<usize> {
        let (n, ns) = (self.n, self.ns);
        let mut mean = DMatrix::<f64>::zeros(ns, ns);
        for m in 0..n {
            mean += &self.mode(m).s;
        }
        mean /= n as f64;
        let blocks: Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>> = (0..n)
            .map(|l| {
                let mut b = mean.clone();
                for i in 0..ns {
                    b[(i, i)] += dvec[i * n + l];
                }
                b.cholesky()
                    .ok_or_else(|| Error::Singular("sheet preconditioner block is not SPD".into()))
            })
            .collect::<Result<_>>()?;
        let precond = |r: &[f64]| -> Vec<f64> {
            let mut z = vec![0.0; r.len()];
            for (l, blk) in blocks.iter().enumerate() {
                let v = nalgebra::DVector::from_iterator(ns, (0..ns).map(|i| r[i * n + l]));
                let s = blk.solve(&v);
                for i in 0..ns {
                    z[i * n + l] = s[i];
                }
            }
            z
        };
        let op = |v: &[f64]| -> Vec<f64> {
            let mut y = self.apply(v);
            y.iter_mut().zip(dvec).zip(v).for_each(|((y, d), v)| *y += d * v);
            y
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bnorm = dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
        let ax = op(x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        if dot(&r, &r).sqrt() <= opts.pcg_tol * bnorm {
            return Ok(0);
        }
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=opts.max_pcg {
            let ap = op(&p);
            let alpha = rz / dot(&p, &ap);
            x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
            r.iter_mut().zip(&ap).for_each(|(r, a)| *r -= alpha * a);
            if dot(&r, &r).sqrt() <= opts.pcg_tol * bnorm {
                return Ok(it);
            }
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        }
        Err(Error::NoConvergence {
            iterations: opts.max_pcg,
            last_change: dot(&r, &r).sqrt() / bnorm,
        })
    }

    /// Minimizes Q(x) + ½β Σ A x² (x∘σ)² from `x0`. Energies in the log are
    /// per ring; the caller scales them to the full circle.
    pub fn minimize(
        &self,
        beta: f64,
        x0: Vec<f64>,
        opts: &SolveOptions,
    ) -> Result<(Vec<f64>, Vec<SolveLogRow>, bool)> {
        let c = self.linear();
        let rhs: Vec<f64> = c.iter().map(|v| -v).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let quad = |x: &[f64], sx: &[f64]| dot(x, sx) + 2.0 * dot(&c, x) + self.e;
        let mut x = x0;
        let mut sx = self.apply(&x);
        let mut f = quad(&x, &sx) + 0.5 * beta * self.overlap(&x);
        let mut log = vec![SolveLogRow {
            iter: 0,
            energy: f,
            interaction: beta * self.overlap(&x),
            delta: f64::NAN,
        }];
        let mut converged = false;
        for it in 1..=opts.max_outer {
            let v = self.mirror(&x);
            let dvec: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(p, vv)| beta * self.area[p / self.n] * vv * vv)
                .collect();
            let mut y = x.clone();
            self.pcg(&dvec, &rhs, &mut y, opts)?;
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let sd = self.apply(&d);
            let (g1, g2) = (dot(&d, &sx) + dot(&c, &d), dot(&d, &sd));
            let q0 = quad(&x, &sx);
            let mut tau = 1.0;
            let mut accepted = None;
            while tau > 1e-12 {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + tau * b).collect();
                let ft = q0 + 2.0 * tau * g1 + tau * tau * g2 + 0.5 * beta * self.overlap(&trial);
                if ft <= f {
                    accepted = Some((trial, ft));
                    break;
                }
                tau *= 0.5;
            }
            let Some((trial, ft)) = accepted else {
                converged = true;
                break;
            };
            let delta = f - ft;
            sx.iter_mut().zip(&sd).for_each(|(s, d)| *s += tau * d);
            x = trial;
            f = ft;
            log.push(SolveLogRow {
                iter: it,
                energy: f,
                interaction: beta * self.overlap(&x),
                delta,
            });
            if delta <= opts.rel_tol * f.abs() {
                converged = true;
                break;
            }
        }
        Ok((x, log, converged))
    }

    /// Full ring field (r outermost, then θ, φ) from sheet values.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        let grid = self.grid;
        let sphere = grid.sphere();
        let nt = sphere.n_theta();
        let (n, ns) = (self.n, self.ns);
        let nr = grid.n_r();
        let co = Coeffs {
            ct: sphere.cond_theta(),
            cp: sphere.cond_phi(),
            m: sphere.row_measure(),
            aw: grid.shell_angular_weights(),
            res: (0..nr - 1).map(|i| grid.layer_resistance(i)).collect(),
            nt,
            ns,
        };
        let xh = self.dft_rows(x);
        let s = 1.0 / (n as f64).sqrt();
        let g_hat: Vec<Vec<Complex64>> = (0..nt)
            .map(|j| {
                let mut b: Vec<Complex64> = self.boundary[j * n..(j + 1) * n]
                    .iter()
                    .map(|&v| Complex64::new(v * s, 0.0))
                    .collect();
                self.fwd.process(&mut b);
                b
            })
            .collect();
        let last = ns - 1;
        let half = n / 2;
        // interior solutions per mode, indexed [mode][i * nb + r]
        let sols: Vec<Result<Vec<Complex64>>> = (0..=half)
            .into_par_iter()
            .map(|mode| {
                let w = 2.0 - 2.0 * (TAU * mode as f64 / n as f64).cos();
                let nb = co.nb(mode);
                let ni = ns * nb;
                let chol = BandCholesky::factor(ni, nb, |p, q| co.interior(w, nb, p, q))?;
                let mut re = vec![0.0; ni];
                let mut im = vec![0.0; ni];
                for i in 0..ns {
                    let v = xh[i][mode] * (co.aw[i] * co.ct[0]);
                    re[i * nb] += v.re;
                    im[i * nb] += v.im;
                }
                for r in 0..nb {
                    let v = g_hat[r + 1][mode] * co.radial(last, r + 1);
                    re[last * nb + r] += v.re;
                    im[last * nb + r] += v.im;
                }
                chol.solve(&mut re);
                chol.solve(&mut im);
                Ok(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect())
            })
            .collect();
        let sols: Vec<Vec<Complex64>> = sols.into_iter().collect::<Result<_>>()?;
        let mut out = vec![0.0; nr * nt * n];
        let plane = nt * n;
        for i in 0..ns {
            out[i * plane..i * plane + n].copy_from_slice(&x[i * n..(i + 1) * n]);
            for j in 1..nt {
                let mut row = vec![Complex64::new(0.0, 0.0); n];
                for (m, slot) in row.iter_mut().enumerate() {
                    let (mm, conj) = if m <= half { (m, false) } else { (n - m, true) };
                    let nb = co.nb(mm);
                    let val = if j == nt - 1 {
                        if mm == 0 {
                            sols[0][i * nb + nt - 2]
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    } else {
                        sols[mm][i * nb + j - 1]
                    };
                    *slot = if conj { val.conj() } else { val };
                }
                self.inv.process(&mut row);
                for l in 0..n {
                    out[i * plane + j * n + l] = row[l].re * s;
                }
            }
        }
        out[last * plane + plane..].copy_from_slice(&self.boundary);
        debug_assert_eq!(out.len(), (last + 2) * plane);
        Ok(out)
    }
}
