use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ball::HalfBallGrid;
use super::sphere::HemisphereGrid;
use crate::error::{Error, Result};

/// Identifies the grid a field lives on. `n_r == 0` marks hemisphere fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRef {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub s: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl HemisphereGrid {
    pub fn grid_ref(&self) -> GridRef {
        GridRef {
            n_r: 0,
            n_theta: self.n_theta(),
            n_phi: self.n_phi(),
            s: self.params().s(),
            r_min: 1.0,
            r_max: 1.0,
        }
    }
}

impl HalfBallGrid {
    pub fn grid_ref(&self) -> GridRef {
        GridRef {
            n_r: self.n_r(),
            r_min: self.r_min(),
            r_max: self.r_max(),
            ..self.sphere().grid_ref()
        }
    }
}

/// Nodal values on a hemisphere or half-ball grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridRef,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridRef, values: Vec<f64>) -> Result<Self> {
        let expected = grid.n_r.max(1) * grid.n_theta * grid.n_phi;
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {expected} nodes",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &HemisphereGrid, c: f64) -> Self {
        Self {
            grid: grid.grid_ref(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples f(θ, φ); the pole row takes the value at φ = 0.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &HemisphereGrid, f: F) -> Self {
        let n = grid.n_phi();
        let pole = grid.pole_index();
        let mut values = Vec::with_capacity(grid.len());
        for (j, &t) in grid.theta_nodes().iter().enumerate() {
            for &p in grid.phi_nodes() {
                values.push(if j == pole { f(t, 0.0) } else { f(t, p) });
            }
        }
        debug_assert_eq!(values.len(), grid.n_theta() * n);
        Self {
            grid: grid.grid_ref(),
            values,
        }
    }

    pub fn grid_ref(&self) -> GridRef {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_sphere(&self, grid: &HemisphereGrid) -> Result<()> {
        if self.grid != grid.grid_ref() {
            return Err(Error::GridMismatch(format!(
                "field on {:?} used with grid {:?}",
                self.grid,
                grid.grid_ref()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_ball(&self, grid: &HalfBallGrid) -> Result<()> {
        if self.grid != grid.grid_ref() {
            return Err(Error::GridMismatch(format!(
                "field on {:?} used with grid {:?}",
                self.grid,
                grid.grid_ref()
            )));
        }
        Ok(())
    }

    /// f ∘ σ for the reflection φ ↦ (twice_alpha_steps·Δφ) − φ.
    pub fn reflected(&self, grid: &HemisphereGrid, twice_alpha_steps: usize) -> Result<Self> {
        self.check_sphere(grid)?;
        let map = grid.reflection_map(twice_alpha_steps);
        let n = grid.n_phi();
        let mut values = vec![0.0; self.values.len()];
        for j in 0..grid.n_theta() {
            for l in 0..n {
                values[j * n + l] = self.values[j * n + map[l]];
            }
        }
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// CSV with header `theta_index,phi_index,value`.
    pub fn to_csv(&self) -> String {
        let n = self.grid.n_phi;
        let mut out = String::from("theta_index,phi_index,value\n");
        for (idx, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:e}", idx / n, idx % n, v);
        }
        out
    }

    /// Parses the CSV layout of [`ScalarField::to_csv`]; every node must
    /// appear exactly once. Errors carry 1-based line numbers.
    pub fn from_csv(grid: &HemisphereGrid, text: &str) -> Result<Self> {
        let (nt, np) = (grid.n_theta(), grid.n_phi());
        let mut values = vec![f64::NAN; nt * np];
        let mut seen = vec![false; nt * np];
        let mut header_done = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_done {
                header_done = true;
                if line.replace(' ', "") == "theta_index,phi_index,value" {
                    continue;
                }
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = |msg: String| Error::Parse { line: line_no, msg };
            if parts.len() != 3 {
                return Err(err(format!("expected 3 columns, found {}", parts.len())));
            }
            let j: usize = parts[0]
                .parse()
                .map_err(|_| err(format!("bad theta index '{}'", parts[0])))?;
            let l: usize = parts[1]
                .parse()
                .map_err(|_| err(format!("bad phi index '{}'", parts[1])))?;
            let v: f64 = parts[2]
                .parse()
                .map_err(|_| err(format!("bad value '{}'", parts[2])))?;
            if j >= nt || l >= np {
                return Err(err(format!("index ({j},{l}) outside {nt}x{np} grid")));
            }
            if !v.is_finite() {
                return Err(err("non-finite value".into()));
            }
            if seen[j * np + l] {
                return Err(err(format!("duplicate node ({j},{l})")));
            }
            seen[j * np + l] = true;
            values[j * np + l] = v;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("node ({},{}) missing", missing / np, missing % np),
            });
        }
        Ok(Self {
            grid: grid.grid_ref(),
            values,
        })
    }

    /// Little-endian f64 values in storage order.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_bytes(grid: GridRef, bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 8 != 0 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("binary length {} is not a multiple of 8", bytes.len()),
            });
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(grid, values)
    }
}

/// Uniform [0,1) values from a seeded stream; the pole row shares one value.
pub fn random_field(grid: &HemisphereGrid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_phi();
    let mut values: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    let p = grid.pole_index() * n;
    let pole = values[p];
    values[p..].iter_mut().for_each(|v| *v = pole);
    ScalarField {
        grid: grid.grid_ref(),
        values,
    }
}

/// Σ m f g with the hemisphere node weights.
pub fn weighted_l2_inner(f: &ScalarField, g: &ScalarField, grid: &HemisphereGrid) -> Result<f64> {
    f.check_sphere(grid)?;
    g.check_sphere(grid)?;
    Ok(grid.inner_raw(&f.values, &g.values))
}

/// Weighted tangential Dirichlet energy.
pub fn weighted_dirichlet_energy(f: &ScalarField, grid: &HemisphereGrid) -> Result<f64> {
    folded_dirichlet_energy(f, grid, 1)
}

/// Dirichlet energy with the φ-derivative coefficient multiplied by k².
pub fn folded_dirichlet_energy(f: &ScalarField, grid: &HemisphereGrid, k: usize) -> Result<f64> {
    f.check_sphere(grid)?;
    Ok(grid.energy_raw(&f.values, (k * k) as f64))
}
