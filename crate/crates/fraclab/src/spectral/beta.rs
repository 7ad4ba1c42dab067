//! Symmetric β-pair on the hemisphere: minimize
//! J = ½E(u) + ½E(v) + ½β∫_{S¹}u²v² with v = u∘σ, ∫yᵃu² = 1.

use serde::{Deserialize, Serialize};

use super::ring::{lowest_eigenpair, RingOperator};
use super::{check_symmetry, first_eigenvalue_symmetric};
use crate::error::{Error, Result};
use crate::geometry::{HemisphereGrid, ScalarField};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BetaPairOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for BetaPairOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereBetaPair {
    pub u: ScalarField,
    pub v: ScalarField,
    pub beta: f64,
    pub lambda_beta: f64,
    /// β∫_{S¹} u²v².
    pub interaction: f64,
    /// J_β at the returned pair.
    pub j_beta: f64,
    /// J_β after every accepted step, starting from the segregated pair.
    pub history: Vec<f64>,
    pub converged: bool,
}

struct Pair<'a, 'g> {
    op: &'a RingOperator<'g>,
    k: f64,
    beta: f64,
    dphi: f64,
}

impl Pair<'_, '_> {
    fn mirror(&self, x: &[f64]) -> Vec<f64> {
        let n = self.op.n;
        (0..n).map(|l| x[(n - l) % n]).collect()
    }

    /// Full-grid gradient energy and equator ∫u²v².
    fn parts(&self, x: &[f64]) -> (f64, f64) {
        let v = self.mirror(x);
        let mut op_energy = self.op.energy(x);
        let extra: f64 = (0..self.op.n).map(|l| self.op.extra[l] * x[l] * x[l]).sum();
        op_energy -= extra;
        let overlap: f64 = (0..self.op.n).map(|l| self.dphi * x[l] * x[l] * v[l] * v[l]).sum();
        (self.k * op_energy, self.k * overlap)
    }

    fn j(&self, x: &[f64]) -> f64 {
        let (e, o) = self.parts(x);
        e + 0.5 * self.beta * o
    }

    fn normalize(&self, x: &mut [f64]) {
        let norm = (self.k * self.op.mass_inner(x, x)).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Alternating eigen-updates with v frozen to the mirror of the previous
/// iterate and a backtracking step along u_new − u_old; J never increases.
pub fn sphere_beta_pair(
    grid: &HemisphereGrid,
    k: usize,
    beta: f64,
    opts: BetaPairOptions,
) -> Result<SphereBetaPair> {
    check_symmetry(grid, k)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
    }
    let ring_n = grid.n_phi() / k;
    let seed = first_eigenvalue_symmetric(grid, k)?;
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let mut x: Vec<f64> = (0..nt * ring_n)
        .map(|i| seed.eigenfunction.values()[(i / ring_n) * np + i % ring_n])
        .collect();
    let mut op = RingOperator::new(grid, ring_n, 1.0, vec![true; ring_n]);
    let dphi = grid.dphi();
    let kf = k as f64;

    let mut history = Vec::new();
    let mut converged = false;
    let mut j_old = {
        let pair = Pair { op: &op, k: kf, beta, dphi };
        pair.normalize(&mut x);
        pair.j(&x)
    };
    history.push(j_old);
    for _ in 0..opts.max_iter {
        let v = {
            let pair = Pair { op: &op, k: kf, beta, dphi };
            pair.mirror(&x)
        };
        op.extra = v.iter().map(|vl| beta * dphi * vl * vl).collect();
        let e = lowest_eigenpair(&op, Some(&x))?;
        let extra = std::mem::replace(&mut op.extra, vec![0.0; ring_n]);
        let pair = Pair { op: &op, k: kf, beta, dphi };
        let mut tau = 1.0;
        let mut accepted = None;
        while tau > 1e-12 {
            let mut trial: Vec<f64> = x.iter().zip(&e.x).map(|(a, b)| a + tau * (b - a)).collect();
            pair.normalize(&mut trial);
            let jt = pair.j(&trial);
            if jt <= j_old {
                accepted = Some((trial, jt));
                break;
            }
            tau *= 0.5;
        }
        drop(extra);
        let Some((trial, jt)) = accepted else {
            converged = true;
            break;
        };
        let delta = j_old - jt;
        x = trial;
        j_old = jt;
        history.push(jt);
        if delta <= opts.rel_tol * jt.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let pair = Pair { op: &op, k: kf, beta, dphi };
    let (energy, overlap) = pair.parts(&x);
    let mut u = vec![0.0; nt * np];
    for j in 0..nt {
        for l in 0..np {
            u[j * np + l] = x[j * ring_n + l % ring_n];
        }
    }
    let u = ScalarField::new(grid.grid_ref(), u)?;
    let v = u.reflected(grid, 0)?;
    Ok(SphereBetaPair {
        u,
        v,
        beta,
        lambda_beta: energy + beta * overlap,
        interaction: beta * overlap,
        j_beta: j_old,
        history,
        converged,
    })
}
