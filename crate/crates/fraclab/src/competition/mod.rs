//! β-competition system on the half-ball B⁺_R in dimension N = 2:
//! weighted harmonic u, v with Dirichlet data on the spherical boundary and
//! the reaction ∂ᵃ_y u = βuv², ∂ᵃ_y v = βvu² on the flat disk.

mod diagnostics;
mod solver;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FractionalParams, HalfBallGrid, HemisphereGrid, ScalarField};
use crate::spectral::EigenResult;
use solver::SheetProblem;

pub use diagnostics::{
    blow_down, blow_up, doubling_check, frequency_trace, growth_rate_estimate, pohozaev_residual,
    select_r_beta, BlowDownResult, DoublingReport, FrequencyTrace, GrowthRate, Profile,
};
pub use solver::{SolveLogRow, SolveOptions};

/// Relative slack of the energy ceiling 2I ≤ d.
pub const ENERGY_TOL: f64 = 0.02;

/// A pair (u, v) on a half-ball grid together with its data and coupling.
#[derive(Debug, Clone)]
pub struct CompetitionState {
    pub grid: HalfBallGrid,
    pub u: ScalarField,
    pub v: ScalarField,
    pub beta: f64,
    pub k: usize,
    pub boundary_u: ScalarField,
    pub boundary_v: ScalarField,
    /// I(u, v) over the whole grid.
    pub energy: f64,
    pub converged: bool,
    pub log: Vec<SolveLogRow>,
}

/// JSON companion of a serialized state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateManifest {
    pub s: f64,
    pub k: usize,
    pub beta: f64,
    pub grid: crate::geometry::GridRef,
    pub energy: f64,
    pub converged: bool,
}

fn mirror_full(grid: &HalfBallGrid, values: &[f64]) -> Vec<f64> {
    let n = grid.sphere().n_phi();
    let mut out = vec![0.0; values.len()];
    for (src, dst) in values.chunks(n).zip(out.chunks_mut(n)) {
        for l in 0..n {
            dst[l] = src[(n - l) % n];
        }
    }
    out
}

fn outer_shell(grid: &HalfBallGrid, f: &ScalarField) -> Result<ScalarField> {
    let len = grid.shell_len();
    let start = (grid.n_r() - 1) * len;
    ScalarField::new(grid.sphere().grid_ref(), f.values()[start..start + len].to_vec())
}

/// Field r^d g(θ, φ) on every shell.
pub fn homogeneous_extension(g: &ScalarField, d: f64, grid: &HalfBallGrid) -> Result<ScalarField> {
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("exponent {d} must be nonnegative")));
    }
    g.check_sphere(grid.sphere())?;
    let values = grid
        .r_nodes()
        .iter()
        .flat_map(|&r| {
            let f = r.powf(d);
            g.values().iter().map(move |x| f * x)
        })
        .collect();
    ScalarField::new(grid.grid_ref(), values)
}

/// Boundary pair (g, h = g∘σ) scaled so that ∫yᵃ(g² + h²) = 1.
pub fn boundary_pair(sphere: &HemisphereGrid, g: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    g.check_sphere(sphere)?;
    let h = g.reflected(sphere, 0)?;
    let mass = sphere.inner_raw(g.values(), g.values()) + sphere.inner_raw(h.values(), h.values());
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter("boundary data vanish identically".into()));
    }
    let c = 1.0 / mass.sqrt();
    Ok((g.scaled(c), h.scaled(c)))
}

/// ½∫yᵃ(|∇u|² + |∇v|²) + ½β∫_{∂⁰}u²v² over the whole grid.
pub fn energy_i(grid: &HalfBallGrid, u: &ScalarField, v: &ScalarField, beta: f64) -> Result<f64> {
    u.check_ball(grid)?;
    v.check_ball(grid)?;
    Ok(0.5 * (gradient_energy(grid, u.values()) + gradient_energy(grid, v.values()))
        + 0.5 * beta * interaction_raw(grid, u.values(), v.values()))
}

pub(crate) fn gradient_energy(grid: &HalfBallGrid, f: &[f64]) -> f64 {
    let sphere = grid.sphere();
    let len = grid.shell_len();
    let aw = grid.shell_angular_weights();
    let m = sphere.node_measure();
    let mut acc = 0.0;
    for i in 0..grid.n_r() {
        acc += aw[i] * sphere.energy_raw(&f[i * len..(i + 1) * len], 1.0);
        if i + 1 < grid.n_r() {
            let res = grid.layer_resistance(i);
            acc += (0..len)
                .map(|p| m[p] * (f[(i + 1) * len + p] - f[i * len + p]).powi(2))
                .sum::<f64>()
                / res;
        }
    }
    acc
}

pub(crate) fn interaction_raw(grid: &HalfBallGrid, u: &[f64], v: &[f64]) -> f64 {
    let len = grid.shell_len();
    let n = grid.sphere().n_phi();
    let dphi = grid.sphere().dphi();
    grid.shell_flat_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let row = &u[i * len..i * len + n];
            let vr = &v[i * len..i * len + n];
            w * dphi * row.iter().zip(vr).map(|(a, b)| a * a * b * b).sum::<f64>()
        })
        .sum()
}

impl CompetitionState {
    /// Wraps given fields; boundary data are the outer-shell traces.
    pub fn from_fields(grid: HalfBallGrid, u: ScalarField, v: ScalarField, beta: f64, k: usize) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be nonnegative")));
        }
        let energy = energy_i(&grid, &u, &v, beta)?;
        Ok(Self {
            boundary_u: outer_shell(&grid, &u)?,
            boundary_v: outer_shell(&grid, &v)?,
            grid,
            u,
            v,
            beta,
            k,
            energy,
            converged: true,
            log: Vec::new(),
        })
    }

    pub fn params(&self) -> FractionalParams {
        self.grid.sphere().params()
    }

    /// Smallest value of u and v over nodes off the outer shell.
    pub fn interior_min(&self) -> f64 {
        let end = (self.grid.n_r() - 1) * self.grid.shell_len();
        self.u.values()[..end]
            .iter()
            .chain(&self.v.values()[..end])
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// β∫_{∂⁰}u²v² over the whole grid.
    pub fn interaction(&self) -> f64 {
        self.beta * interaction_raw(&self.grid, self.u.values(), self.v.values())
    }

    pub fn manifest(&self) -> StateManifest {
        StateManifest {
            s: self.params().s(),
            k: self.k,
            beta: self.beta,
            grid: self.grid.grid_ref(),
            energy: self.energy,
            converged: self.converged,
        }
    }

    /// Writes `manifest.json`, `u.bin`, `v.bin` and `log.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = serde_json::to_string_pretty(&self.manifest()).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), manifest)?;
        std::fs::write(dir.join("u.bin"), self.u.to_bytes())?;
        std::fs::write(dir.join("v.bin"), self.v.to_bytes())?;
        std::fs::write(dir.join("log.csv"), log_csv(&self.log))?;
        Ok(())
    }

    /// Reads a state written by [`CompetitionState::save`]; the log is not
    /// restored.
    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let m: StateManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let sphere = HemisphereGrid::new(m.grid.n_theta, m.grid.n_phi, FractionalParams::planar(m.s)?)?;
        let grid = HalfBallGrid::new(sphere, m.grid.n_r, m.grid.r_min, m.grid.r_max)?;
        let u = ScalarField::from_bytes(grid.grid_ref(), &std::fs::read(dir.join("u.bin"))?)?;
        let v = ScalarField::from_bytes(grid.grid_ref(), &std::fs::read(dir.join("v.bin"))?)?;
        let mut st = Self::from_fields(grid, u, v, m.beta, m.k)?;
        st.converged = m.converged;
        Ok(st)
    }
}

pub fn log_csv(log: &[SolveLogRow]) -> String {
    let mut out = String::from("iter,I,interaction,delta\n");
    for r in log {
        out.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", r.iter, r.energy, r.interaction, r.delta));
    }
    out
}

/// Minimizes I over 2π/k-periodic pairs with v = u∘σ, Dirichlet data
/// (g, g∘σ) from the k-symmetric eigenfunction, starting from the
/// homogeneous extension of the data.
pub fn solve_beta_system(
    grid: &HalfBallGrid,
    k: usize,
    beta: f64,
    eigen: &EigenResult,
    opts: &SolveOptions,
) -> Result<CompetitionState> {
    let sphere = grid.sphere();
    let (nt, np) = (sphere.n_theta(), sphere.n_phi());
    if k == 0 || (np / 2) % k != 0 {
        return Err(Error::SymmetryMisaligned { k, half: np / 2 });
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be nonnegative")));
    }
    let (g, h) = boundary_pair(sphere, &eigen.eigenfunction)?;
    let n = np / k;
    let gv = g.values();
    let scale = gv.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for j in 0..nt {
        for l in 0..np {
            if (gv[j * np + l] - gv[j * np + l % n]).abs() > 1e-12 * scale {
                return Err(Error::Precondition(format!(
                    "boundary data are not invariant under rotation by 2π/{k}"
                )));
            }
        }
    }
    let ring: Vec<f64> = (0..nt * n).map(|p| gv[(p / n) * np + p % n]).collect();
    let problem = SheetProblem::new(grid, n, &ring)?;
    let ns = grid.n_r() - 1;
    let x0: Vec<f64> = (0..ns * n)
        .map(|p| grid.r_nodes()[p / n].powf(eigen.exponent_d) * ring[p % n])
        .collect();
    let (x, mut log, converged) = problem.minimize(beta, x0, opts)?;
    let kf = k as f64;
    for row in &mut log {
        row.energy *= kf;
        row.interaction *= kf;
    }
    let ring_u = problem.reconstruct(&x)?;
    let len = nt * np;
    let mut u = vec![0.0; grid.n_r() * len];
    for i in 0..grid.n_r() {
        for j in 0..nt {
            for l in 0..np {
                u[i * len + j * np + l] = ring_u[(i * nt + j) * n + l % n];
            }
        }
    }
    let v = mirror_full(grid, &u);
    let u = ScalarField::new(grid.grid_ref(), u)?;
    let v = ScalarField::new(grid.grid_ref(), v)?;
    let energy = energy_i(grid, &u, &v, beta)?;
    let state = CompetitionState {
        grid: grid.clone(),
        u,
        v,
        beta,
        k,
        boundary_u: g,
        boundary_v: h,
        energy,
        converged,
        log,
    };
    if 2.0 * energy > eigen.exponent_d * (1.0 + ENERGY_TOL) {
        return Err(Error::PropertyViolation(format!(
            "2I = {} exceeds d = {} beyond tolerance",
            2.0 * energy,
            eigen.exponent_d
        )));
    }
    if converged && state.interior_min() <= 0.0 {
        return Err(Error::PropertyViolation(format!(
            "interior minimum {} is not positive",
            state.interior_min()
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests;
