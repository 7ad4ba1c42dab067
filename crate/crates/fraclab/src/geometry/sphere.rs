use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::params::FractionalParams;
use crate::error::{Error, Result};
use crate::quad::integrate_sin_power;

pub const MIN_NODES: usize = 8;
pub const MAX_NODES: usize = 1024;

/// Tensor grid on the upper hemisphere with θ = 0 on the equator and
/// θ = π/2 at the pole.
///
/// Values are stored row-major with θ outer. The pole row holds a single
/// degree of freedom replicated across φ. Cells in θ are split at node
/// midpoints; weights integrate sinᵃθ·cosθ exactly over each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereGrid {
    params: FractionalParams,
    gamma: f64,
    theta: Vec<f64>,
    phi: Vec<f64>,
    dphi: f64,
    row_measure: Vec<f64>,
    cond_theta: Vec<f64>,
    cond_phi: Vec<f64>,
}

/// Serializable grid summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDescription {
    pub s: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub grading_gamma: f64,
}

impl HemisphereGrid {
    pub fn new(n_theta: usize, n_phi: usize, params: FractionalParams) -> Result<Self> {
        for (name, n) in [("n_theta", n_theta), ("n_phi", n_phi)] {
            if n < MIN_NODES {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {n} is below the minimum resolution {MIN_NODES}"
                )));
            }
            if n > MAX_NODES {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {n} exceeds the cap {MAX_NODES}"
                )));
            }
        }
        if n_phi % 2 != 0 {
            return Err(Error::InvalidParameter(format!("n_phi = {n_phi} must be even")));
        }
        let a = params.a();
        let gamma = if a.abs() > 0.5 { 1.0 + a.abs() } else { 1.0 };
        let last = (n_theta - 1) as f64;
        let theta: Vec<f64> = (0..n_theta)
            .map(|j| FRAC_PI_2 * (j as f64 / last).powf(gamma))
            .collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi = (0..n_phi).map(|l| l as f64 * dphi).collect();

        let mut faces = Vec::with_capacity(n_theta + 1);
        faces.push(0.0);
        for j in 0..n_theta - 1 {
            faces.push(0.5 * (theta[j] + theta[j + 1]));
        }
        faces.push(FRAC_PI_2);
        let cap = |t: f64| t.sin().powf(a + 1.0) / (a + 1.0);
        let mut row_measure: Vec<f64> = (0..n_theta)
            .map(|j| dphi * (cap(faces[j + 1]) - cap(faces[j])))
            .collect();
        // Pole cap shared between the replicated pole nodes.
        row_measure[n_theta - 1] = 2.0 * PI * (cap(FRAC_PI_2) - cap(faces[n_theta - 1])) / n_phi as f64;

        let cond_theta = (0..n_theta - 1)
            .map(|j| {
                let mid = 0.5 * (theta[j] + theta[j + 1]);
                let resist = integrate_sin_power(-a, |_| 1.0, theta[j], theta[j + 1]);
                mid.cos() * dphi / resist
            })
            .collect();
        let mut cond_phi: Vec<f64> = (0..n_theta)
            .map(|j| {
                if j == n_theta - 1 {
                    0.0
                } else {
                    integrate_sin_power(a, |t| 1.0 / t.cos(), faces[j], faces[j + 1]) / dphi
                }
            })
            .collect();
        cond_phi[n_theta - 1] = 0.0;

        Ok(Self {
            params,
            gamma,
            theta,
            phi,
            dphi,
            row_measure,
            cond_theta,
            cond_phi,
        })
    }

    pub fn params(&self) -> FractionalParams {
        self.params
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grading_gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi_nodes(&self) -> &[f64] {
        &self.phi
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    /// Row index of the equator circle.
    pub fn equator_index(&self) -> usize {
        0
    }

    pub fn pole_index(&self) -> usize {
        self.n_theta() - 1
    }

    /// Quadrature weight of a single node in row `j`.
    pub fn row_measure(&self) -> &[f64] {
        &self.row_measure
    }

    /// Per-node weights for dμ = sinᵃθ cosθ dθ dφ, row-major.
    pub fn node_measure(&self) -> Vec<f64> {
        let n = self.n_phi();
        self.row_measure
            .iter()
            .flat_map(|&m| std::iter::repeat_n(m, n))
            .collect()
    }

    /// Conductance of the θ-edge between rows j and j+1 (one per φ column).
    pub fn cond_theta(&self) -> &[f64] {
        &self.cond_theta
    }

    /// Conductance of the φ-edges in row j; zero on the pole row.
    pub fn cond_phi(&self) -> &[f64] {
        &self.cond_phi
    }

    pub fn total_measure(&self) -> f64 {
        self.row_measure.iter().sum::<f64>() * self.n_phi() as f64
    }

    pub fn index(&self, j: usize, l: usize) -> usize {
        j * self.n_phi() + l
    }

    pub fn description(&self) -> GridDescription {
        GridDescription {
            s: self.params.s(),
            n_theta: self.n_theta(),
            n_phi: self.n_phi(),
            grading_gamma: self.gamma,
        }
    }

    /// Rebuild a grid from its description.
    pub fn from_description(d: &GridDescription) -> Result<Self> {
        let g = Self::new(d.n_theta, d.n_phi, FractionalParams::planar(d.s)?)?;
        if (g.gamma - d.grading_gamma).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "grading_gamma {} does not match the grading rule ({})",
                d.grading_gamma, g.gamma
            )));
        }
        Ok(g)
    }

    /// Node permutation of the reflection φ ↦ 2α − φ with 2α a multiple of Δφ.
    pub fn reflection_map(&self, twice_alpha_steps: usize) -> Vec<usize> {
        let n = self.n_phi();
        (0..n).map(|l| (twice_alpha_steps + n - l) % n).collect()
    }

    /// Σ m f g over the whole grid for raw value slices.
    pub(crate) fn inner_raw(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.n_phi();
        let mut acc = 0.0;
        for (j, m) in self.row_measure.iter().enumerate() {
            let row: f64 = (0..n).map(|l| f[j * n + l] * g[j * n + l]).sum();
            acc += m * row;
        }
        acc
    }

    /// Edge-sum Dirichlet energy with the φ conductances scaled by `phi_scale`.
    pub(crate) fn energy_raw(&self, f: &[f64], phi_scale: f64) -> f64 {
        let n = self.n_phi();
        let mut acc = 0.0;
        for j in 0..self.n_theta() - 1 {
            let ct = self.cond_theta[j];
            let cp = self.cond_phi[j] * phi_scale;
            for l in 0..n {
                let u = f[j * n + l];
                let dt = f[(j + 1) * n + l] - u;
                let dp = f[j * n + (l + 1) % n] - u;
                acc += ct * dt * dt + cp * dp * dp;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nt: usize, np: usize, s: f64) -> HemisphereGrid {
        HemisphereGrid::new(nt, np, FractionalParams::planar(s).unwrap()).unwrap()
    }

    #[test]
    fn total_measure_matches_closed_form() {
        for s in [0.25, 0.5, 0.75] {
            let g = grid(64, 128, s);
            let exact = 2.0 * PI / (g.params().a() + 1.0);
            assert!((g.total_measure() - exact).abs() < 1e-12 * exact);
        }
        let g = grid(64, 128, 0.75);
        assert!((g.total_measure() - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_resolutions() {
        let p = FractionalParams::planar(0.5).unwrap();
        assert!(HemisphereGrid::new(7, 16, p).is_err());
        assert!(HemisphereGrid::new(16, 17, p).is_err());
        assert!(HemisphereGrid::new(16, 2048, p).is_err());
    }

    #[test]
    fn grading_clusters_at_equator() {
        let g = grid(32, 16, 0.9);
        assert!(g.grading_gamma() > 1.0);
        let t = g.theta_nodes();
        assert!(t[1] - t[0] < t[31] - t[30]);
        assert_eq!(grid(32, 16, 0.5).grading_gamma(), 1.0);
    }

    #[test]
    fn description_round_trip() {
        let g = grid(16, 32, 0.75);
        let d = g.description();
        let json = serde_json::to_string(&d).unwrap();
        let back: GridDescription = serde_json::from_str(&json).unwrap();
        assert_eq!(HemisphereGrid::from_description(&back).unwrap(), g);
    }
}
