use std::f64::consts::PI;

use super::sphere::HemisphereGrid;
use crate::error::{Error, Result};

/// Shells r_0 < … < r_{n_r−1} carrying copies of a hemisphere grid.
///
/// Radii are geometric. Shell i owns the radial cell [c_i, c_{i+1}] with
/// c_0 = 0, interior faces at geometric midpoints and c_{n_r} = r_max.
/// Values are stored with r outermost, then θ, then φ.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfBallGrid {
    sphere: HemisphereGrid,
    radii: Vec<f64>,
    faces: Vec<f64>,
}

impl HalfBallGrid {
    pub fn new(sphere: HemisphereGrid, n_r: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if n_r < 3 {
            return Err(Error::InvalidParameter(format!("n_r = {n_r} must be at least 3")));
        }
        if n_r > super::sphere::MAX_NODES {
            return Err(Error::InvalidParameter(format!("n_r = {n_r} exceeds the cap")));
        }
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::InvalidParameter(format!(
                "radial range ({r_min}, {r_max}) must satisfy 0 < r_min < r_max"
            )));
        }
        let q = (r_max / r_min).powf(1.0 / (n_r - 1) as f64);
        let mut radii: Vec<f64> = (0..n_r).map(|i| r_min * q.powi(i as i32)).collect();
        radii[n_r - 1] = r_max;
        Ok(Self::from_radii(sphere, radii))
    }

    fn from_radii(sphere: HemisphereGrid, radii: Vec<f64>) -> Self {
        let n = radii.len();
        let mut faces = Vec::with_capacity(n + 1);
        faces.push(0.0);
        for i in 1..n {
            faces.push((radii[i - 1] * radii[i]).sqrt());
        }
        faces.push(radii[n - 1]);
        Self { sphere, radii, faces }
    }

    /// Same grid with every radius multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Self {
        Self::from_radii(
            self.sphere.clone(),
            self.radii.iter().map(|r| r * factor).collect(),
        )
    }

    pub fn sphere(&self) -> &HemisphereGrid {
        &self.sphere
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn shell_len(&self) -> usize {
        self.sphere.len()
    }

    pub fn len(&self) -> usize {
        self.n_r() * self.shell_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Radial cell faces c_0 = 0 < c_1 < … < c_{n_r} = r_max.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// ∫ ρ^p dρ over [lo, hi].
    pub fn radial_moment(&self, p: f64, lo: f64, hi: f64) -> f64 {
        (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0)
    }

    /// Per-shell ∫ ρ^{2+a} dρ over its cell.
    pub fn shell_volume_weights(&self) -> Vec<f64> {
        let a = self.sphere.params().a();
        (0..self.n_r())
            .map(|i| self.radial_moment(2.0 + a, self.faces[i], self.faces[i + 1]))
            .collect()
    }

    /// Per-shell ∫ ρ^a dρ, the factor multiplying tangential conductances.
    pub fn shell_angular_weights(&self) -> Vec<f64> {
        let a = self.sphere.params().a();
        (0..self.n_r())
            .map(|i| self.radial_moment(a, self.faces[i], self.faces[i + 1]))
            .collect()
    }

    /// Per-shell ∫ ρ dρ, the radial part of the flat-disk area element.
    pub fn shell_flat_weights(&self) -> Vec<f64> {
        (0..self.n_r())
            .map(|i| 0.5 * (self.faces[i + 1].powi(2) - self.faces[i].powi(2)))
            .collect()
    }

    /// ∫ ρ^{−(2+a)} dρ across the layer between shells i and i+1.
    pub fn layer_resistance(&self, i: usize) -> f64 {
        let a = self.sphere.params().a();
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        (r0.powf(-(1.0 + a)) - r1.powf(-(1.0 + a))) / (1.0 + a)
    }

    /// Per-node weights for yᵃ dz, r outermost.
    pub fn volume_measure(&self) -> Vec<f64> {
        let m = self.sphere.node_measure();
        self.shell_volume_weights()
            .into_iter()
            .flat_map(|w| m.iter().map(move |mj| w * mj).collect::<Vec<_>>())
            .collect()
    }

    /// Weights of the flat-disk nodes (θ = 0 row of each shell), indexed
    /// [shell][φ].
    pub fn flat_boundary_measure(&self) -> Vec<f64> {
        let dphi = self.sphere.dphi();
        let n = self.sphere.n_phi();
        self.shell_flat_weights()
            .into_iter()
            .flat_map(|w| std::iter::repeat_n(w * dphi, n))
            .collect()
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.sphere.n_theta() + j) * self.sphere.n_phi() + l
    }

    /// Closed form ∫_{B⁺_{r_max}} yᵃ dz.
    pub fn exact_volume(&self) -> f64 {
        let a = self.sphere.params().a();
        2.0 * PI / (a + 1.0) * self.r_max().powf(3.0 + a) / (3.0 + a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FractionalParams;

    #[test]
    fn measures_sum_to_closed_forms() {
        for s in [0.25, 0.5, 0.75] {
            let sp = HemisphereGrid::new(16, 32, FractionalParams::planar(s).unwrap()).unwrap();
            let b = HalfBallGrid::new(sp, 20, 1e-3, 1.0).unwrap();
            let v: f64 = b.volume_measure().iter().sum();
            assert!((v - b.exact_volume()).abs() < 1e-12 * v);
            let a: f64 = b.flat_boundary_measure().iter().sum();
            assert!((a - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_scales_radii() {
        let sp = HemisphereGrid::new(8, 8, FractionalParams::planar(0.5).unwrap()).unwrap();
        let b = HalfBallGrid::new(sp, 5, 0.01, 1.0).unwrap();
        let d = b.dilated(10.0);
        assert!((d.r_max() - 10.0).abs() < 1e-12);
        assert!((d.r_min() - 0.1).abs() < 1e-14);
        assert!(HalfBallGrid::new(b.sphere().clone(), 2, 0.1, 1.0).is_err());
    }
}
