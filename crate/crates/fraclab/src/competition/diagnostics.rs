//! Almgren quantities E, H, N on shell ladders, the doubling bound, the
//! Pohozaev balance and the blow-up/blow-down rescalings.

use serde::{Deserialize, Serialize};

use super::{energy_i, outer_shell, CompetitionState};
use crate::error::{Error, Result};
use crate::geometry::{FractionalParams, HalfBallGrid, ScalarField};

/// H values at or below this are treated as a vanishing state.
pub const H_FLOOR: f64 = 1e-200;

/// Relative dip of N tolerated before a radius is flagged.
pub const MONOTONE_TOL: f64 = 1e-6;

/// Cumulative shell integrals of a state.
///
/// Layer i spans [r_i, r_{i+1}]; its angular part uses the upper half-cell
/// of shell i and the lower half-cell of shell i+1. The part inside r_0 is
/// summed as the geometric continuation of the first two layers.
#[derive(Debug, Clone)]
pub struct Profile {
    radii: Vec<f64>,
    grad: Vec<f64>,
    inter: Vec<f64>,
    h: Vec<f64>,
    /// Σ_S yᵃ|∇_T u|² + |∇_T v|² per shell on the unit sphere.
    tangential: Vec<f64>,
    /// Δφ Σ u²v² on the flat row of each shell.
    flat: Vec<f64>,
    beta: f64,
    a: f64,
}

fn core(l0: f64, l1: f64, fallback: f64) -> f64 {
    if l0 > 0.0 && l1 > l0 {
        l0 / (l1 / l0 - 1.0)
    } else {
        fallback
    }
}

fn interp(r0: f64, r1: f64, f0: f64, f1: f64, r: f64) -> f64 {
    let t = (r / r0).ln() / (r1 / r0).ln();
    if f0 > 0.0 && f1 > 0.0 {
        (f0.ln() + t * (f1 / f0).ln()).exp()
    } else {
        f0 + t * (f1 - f0)
    }
}

impl Profile {
    pub fn new(state: &CompetitionState) -> Self {
        let grid = &state.grid;
        let sphere = grid.sphere();
        let (nr, len, n) = (grid.n_r(), grid.shell_len(), sphere.n_phi());
        let a = sphere.params().a();
        let (u, v) = (state.u.values(), state.v.values());
        let m = sphere.node_measure();
        let shell = |f: &[f64], i: usize| f[i * len..(i + 1) * len].to_vec();
        let tangential: Vec<f64> = (0..nr)
            .map(|i| sphere.energy_raw(&shell(u, i), 1.0) + sphere.energy_raw(&shell(v, i), 1.0))
            .collect();
        let flat: Vec<f64> = (0..nr)
            .map(|i| {
                sphere.dphi()
                    * (0..n)
                        .map(|l| (u[i * len + l] * v[i * len + l]).powi(2))
                        .sum::<f64>()
            })
            .collect();
        let h: Vec<f64> = (0..nr)
            .map(|i| {
                (0..len)
                    .map(|p| m[p] * (u[i * len + p].powi(2) + v[i * len + p].powi(2)))
                    .sum()
            })
            .collect();
        let r = grid.r_nodes();
        let c = grid.faces();
        let mom = |p: f64, lo: f64, hi: f64| grid.radial_moment(p, lo, hi);
        let mut lg = Vec::with_capacity(nr - 1);
        let mut li = Vec::with_capacity(nr - 1);
        for i in 0..nr - 1 {
            let radial: f64 = (0..len)
                .map(|p| {
                    let du = u[(i + 1) * len + p] - u[i * len + p];
                    let dv = v[(i + 1) * len + p] - v[i * len + p];
                    m[p] * (du * du + dv * dv)
                })
                .sum::<f64>()
                / grid.layer_resistance(i);
            lg.push(
                mom(a, r[i], c[i + 1]) * tangential[i]
                    + mom(a, c[i + 1], r[i + 1]) * tangential[i + 1]
                    + radial,
            );
            li.push(mom(1.0, r[i], c[i + 1]) * flat[i] + mom(1.0, c[i + 1], r[i + 1]) * flat[i + 1]);
        }
        let mut grad = vec![core(lg[0], lg[1], mom(a, 0.0, r[0]) * tangential[0])];
        let mut inter = vec![core(li[0], li[1], mom(1.0, 0.0, r[0]) * flat[0])];
        for i in 0..nr - 1 {
            grad.push(grad[i] + lg[i]);
            inter.push(inter[i] + li[i]);
        }
        Self {
            radii: r.to_vec(),
            grad,
            inter,
            h,
            tangential,
            flat,
            beta: state.beta,
            a,
        }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn locate(&self, r: f64) -> Result<usize> {
        let (lo, hi) = (self.radii[0], *self.radii.last().unwrap());
        if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { radius: r, lo, hi });
        }
        Ok(self.radii.partition_point(|&x| x <= r).clamp(1, self.radii.len() - 1) - 1)
    }

    fn at(&self, f: &[f64], r: f64) -> Result<f64> {
        let i = self.locate(r)?;
        Ok(interp(self.radii[i], self.radii[i + 1], f[i], f[i + 1], r))
    }

    /// ∫_{B_r⁺} yᵃ(|∇u|² + |∇v|²).
    pub fn gradient(&self, r: f64) -> Result<f64> {
        self.at(&self.grad, r)
    }

    /// ∫_{∂⁰B_r⁺} u²v².
    pub fn interaction(&self, r: f64) -> Result<f64> {
        self.at(&self.inter, r)
    }

    pub fn h(&self, r: f64) -> Result<f64> {
        let h = self.at(&self.h, r)?;
        if h <= H_FLOOR {
            return Err(Error::Degenerate { radius: r, h });
        }
        Ok(h)
    }

    pub fn e(&self, r: f64) -> Result<f64> {
        Ok(r.powf(-(1.0 + self.a)) * (self.gradient(r)? + self.beta * self.interaction(r)?))
    }

    pub fn n(&self, r: f64) -> Result<f64> {
        let h = self.h(r)?;
        Ok(self.e(r)? / h)
    }

    /// ½ d log H / d log r from the two shells bracketing r.
    pub fn log_slope(&self, r: f64) -> Result<f64> {
        let i = self.locate(r)?;
        let (h0, h1) = (self.h[i], self.h[i + 1]);
        if h0 <= H_FLOOR || h1 <= H_FLOOR {
            return Err(Error::Degenerate { radius: r, h: h0.min(h1) });
        }
        Ok(0.5 * (h1 / h0).ln() / (self.radii[i + 1] / self.radii[i]).ln())
    }
}

/// E, H, N on a radius ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyTrace {
    pub radii: Vec<f64>,
    pub e_vals: Vec<f64>,
    pub h_vals: Vec<f64>,
    pub n_vals: Vec<f64>,
    pub params: FractionalParams,
    /// Indices i > 0 with N_i < N_{i−1} − 1e-6·max(1, N_{i−1}).
    pub violations: Vec<usize>,
}

impl FrequencyTrace {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest relative dip N_{i−1} − N_i over max(1, N_{i−1}).
    pub fn max_dip(&self) -> f64 {
        self.n_vals
            .windows(2)
            .map(|w| (w[0] - w[1]) / w[0].max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,E,H,N\n");
        for i in 0..self.radii.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.radii[i], self.e_vals[i], self.h_vals[i], self.n_vals[i]
            ));
        }
        out
    }
}

pub fn frequency_trace(state: &CompetitionState, radii: &[f64]) -> Result<FrequencyTrace> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("radii must be sorted".into()));
    }
    let p = Profile::new(state);
    let mut e_vals = Vec::with_capacity(radii.len());
    let mut h_vals = Vec::with_capacity(radii.len());
    let mut n_vals = Vec::with_capacity(radii.len());
    for &r in radii {
        let h = p.h(r)?;
        let e = p.e(r)?;
        e_vals.push(e);
        h_vals.push(h);
        n_vals.push(e / h);
    }
    let violations = (1..n_vals.len())
        .filter(|&i| n_vals[i] < n_vals[i - 1] - MONOTONE_TOL * n_vals[i - 1].max(1.0))
        .collect();
    Ok(FrequencyTrace {
        radii: radii.to_vec(),
        e_vals,
        h_vals,
        n_vals,
        params: state.params(),
        violations,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DoublingReport {
    pub r1: f64,
    pub r2: f64,
    /// H(r2)/H(r1).
    pub lhs: f64,
    /// e^{d/(1−a)}(r2/r1)^{2d}.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks H(r2)/H(r1) ≤ e^{d/(1−a)}(r2/r1)^{2d} after verifying
/// N(r_max) ≤ d(1 + tol).
pub fn doubling_check(state: &CompetitionState, r1: f64, r2: f64, d: f64, tol: f64) -> Result<DoublingReport> {
    if !(r1 > 0.0 && r1 <= r2) {
        return Err(Error::InvalidParameter(format!("radii {r1}, {r2} must satisfy 0 < r1 ≤ r2")));
    }
    let p = Profile::new(state);
    let n_max = p.n(state.grid.r_max())?;
    if n_max > d * (1.0 + tol) {
        return Err(Error::Precondition(format!("N(r_max) = {n_max} exceeds d = {d}")));
    }
    let a = state.params().a();
    let lhs = p.h(r2)? / p.h(r1)?;
    let rhs = (d / (1.0 - a)).exp() * (r2 / r1).powf(2.0 * d);
    Ok(DoublingReport {
        r1,
        r2,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + tol),
    })
}

/// Relative imbalance of the Pohozaev identity on B_r⁺, r snapped to the
/// nearest shell with two neighbours.
pub fn pohozaev_residual(state: &CompetitionState, r: f64) -> Result<f64> {
    let grid = &state.grid;
    let p = Profile::new(state);
    p.locate(r)?;
    let radii = grid.r_nodes();
    let nr = grid.n_r();
    let i = (1..nr - 1)
        .min_by(|&x, &y| {
            let dx = (radii[x] / r).ln().abs();
            let dy = (radii[y] / r).ln().abs();
            dx.total_cmp(&dy)
        })
        .expect("at least three shells");
    let ri = radii[i];
    let len = grid.shell_len();
    let m = grid.sphere().node_measure();
    let span = (radii[i + 1] / radii[i - 1]).ln();
    let (u, v) = (state.u.values(), state.v.values());
    let radial: f64 = (0..len)
        .map(|q| {
            let du = (u[(i + 1) * len + q] - u[(i - 1) * len + q]) / span;
            let dv = (v[(i + 1) * len + q] - v[(i - 1) * len + q]) / span;
            m[q] * (du * du + dv * dv)
        })
        .sum();
    let a = p.a;
    let beta = state.beta;
    let lhs = (1.0 + a) * p.grad[i];
    let rhs = ri.powf(1.0 + a) * (p.tangential[i] - radial) + beta * ri * ri * p.flat[i]
        - 2.0 * beta * p.inter[i];
    if lhs == 0.0 && rhs == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE))
}

/// Root of β r^{2s} H(r) = 1 on [r_0, r_max] by bisection in log r.
pub fn select_r_beta(state: &CompetitionState) -> Result<f64> {
    let p = Profile::new(state);
    let s = state.params().s();
    let f = |r: f64| -> Result<f64> { Ok(state.beta * r.powf(2.0 * s) * p.h(r)? - 1.0) };
    let (mut lo, mut hi) = (state.grid.r_min(), state.grid.r_max());
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_hi < 0.0 || f(lo)? > 0.0 {
        return Err(Error::Precondition(format!(
            "β r^{{2s}} H(r) = 1 has no root in [{lo}, {hi}] for β = {}",
            state.beta
        )));
    }
    while (hi / lo).ln() > 1e-14 {
        let mid = (lo * hi).sqrt();
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

fn rescaled(state: &CompetitionState, radius: f64, amplitude: f64, beta: f64) -> Result<CompetitionState> {
    let grid: HalfBallGrid = state.grid.dilated(1.0 / radius);
    let u = ScalarField::new(grid.grid_ref(), state.u.values().iter().map(|x| x * amplitude).collect())?;
    let v = ScalarField::new(grid.grid_ref(), state.v.values().iter().map(|x| x * amplitude).collect())?;
    let energy = energy_i(&grid, &u, &v, beta)?;
    Ok(CompetitionState {
        boundary_u: outer_shell(&grid, &u)?,
        boundary_v: outer_shell(&grid, &v)?,
        grid,
        u,
        v,
        beta,
        k: state.k,
        energy,
        converged: state.converged,
        log: Vec::new(),
    })
}

/// (ū, v̄)(z) = β^{1/2} r_b^s (u, v)(r_b z) with unit coupling.
pub fn blow_up(state: &CompetitionState, r_b: f64) -> Result<CompetitionState> {
    let hi = state.grid.r_max();
    if !(r_b > 0.0 && r_b <= hi) {
        return Err(Error::OutOfRange { radius: r_b, lo: 0.0, hi });
    }
    if !(state.beta > 0.0) {
        return Err(Error::InvalidParameter("blow-up needs β > 0".into()));
    }
    let amp = state.beta.sqrt() * r_b.powf(state.params().s());
    rescaled(state, r_b, amp, 1.0)
}

#[derive(Debug, Clone)]
pub struct BlowDownResult {
    pub scale_r: f64,
    pub normalizer_l: f64,
    pub kappa: f64,
    /// ½ d log H / d log r of the rescaled pair at radius 1.
    pub d_hat: f64,
    pub rescaled: CompetitionState,
    pub homogeneity_deviation: f64,
}

/// (u_R, v_R)(z) = L⁻¹(u, v)(Rz) with H((u_R, v_R), 1) = 1 and coupling
/// κ_R β, κ_R = L²R^{1−a}.
pub fn blow_down(state: &CompetitionState, r: f64) -> Result<BlowDownResult> {
    let hi = state.grid.r_max();
    if !(r >= 1.0 && r <= hi * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { radius: r, lo: 1.0, hi });
    }
    let a = state.params().a();
    let l = Profile::new(state).h(r)?.sqrt();
    let kappa = l * l * r.powf(1.0 - a);
    let out = rescaled(state, r, 1.0 / l, kappa * state.beta)?;
    let p = Profile::new(&out);
    let d_hat = p.log_slope(1.0)?;
    let radii = out.grid.r_nodes();
    let i_ref = radii.partition_point(|&x| x <= 1.0 + 1e-12).max(1) - 1;
    let r_ref = radii[i_ref];
    let len = out.grid.shell_len();
    let m = out.grid.sphere().node_measure();
    let w = out.grid.shell_volume_weights();
    let (u, v) = (out.u.values(), out.v.values());
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=i_ref {
        if radii[i] < 0.1 * (1.0 - 1e-12) {
            continue;
        }
        let f = (radii[i] / r_ref).powf(d_hat);
        for q in 0..len {
            let (ui, vi) = (u[i * len + q], v[i * len + q]);
            let du = ui - f * u[i_ref * len + q];
            let dv = vi - f * v[i_ref * len + q];
            num += w[i] * m[q] * (du * du + dv * dv);
            den += w[i] * m[q] * (ui * ui + vi * vi);
        }
    }
    let homogeneity_deviation = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(BlowDownResult {
        scale_r: r,
        normalizer_l: l,
        kappa,
        d_hat,
        rescaled: out,
        homogeneity_deviation,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthRate {
    /// N(r_max).
    pub frequency_tail: f64,
    /// Least-squares slope of ½ log H against log r over [r_max/10, r_max].
    pub log_slope: f64,
}

pub fn growth_rate_estimate(state: &CompetitionState) -> Result<GrowthRate> {
    let grid = &state.grid;
    let (lo, hi) = (grid.r_min(), grid.r_max());
    if hi / lo < 10f64.sqrt() {
        return Err(Error::InvalidParameter(format!(
            "radial range [{lo}, {hi}] spans less than half a decade"
        )));
    }
    let p = Profile::new(state);
    let frequency_tail = p.n(hi)?;
    let pts: Vec<(f64, f64)> = grid
        .r_nodes()
        .iter()
        .zip(&p.h)
        .filter(|(r, _)| **r >= hi / 10.0 * (1.0 - 1e-12))
        .map(|(r, h)| {
            if *h <= H_FLOOR {
                Err(Error::Degenerate { radius: *r, h: *h })
            } else {
                Ok((r.ln(), 0.5 * h.ln()))
            }
        })
        .collect::<Result<_>>()?;
    let nf = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / nf,
        pts.iter().map(|p| p.1).sum::<f64>() / nf,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(GrowthRate {
        frequency_tail,
        log_slope: sxy / sxx,
    })
}
