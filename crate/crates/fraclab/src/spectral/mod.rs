//! First eigenvalues of the weighted spherical operator with mixed
//! boundary conditions, exponent maps and the symmetric k-chain.

mod beta;
pub(crate) mod ring;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArcSet, FractionalParams, HemisphereGrid, ScalarField};
use ring::{lowest_eigenpair, RingOperator};

pub use beta::{sphere_beta_pair, BetaPairOptions, SphereBetaPair};

/// d(t) = √(((N−2s)/2)² + t) − (N−2s)/2.
pub fn characteristic_exponent(t: f64, params: FractionalParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("eigenvalue {t} must be nonnegative")));
    }
    let c = 0.5 * (params.dim_n() as f64 - 2.0 * params.s());
    Ok((c * c + t).sqrt() - c)
}

/// λ = d(d + N − 1 + a).
pub fn exponent_to_eigenvalue(d: f64, params: FractionalParams) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("exponent {d} must be nonnegative")));
    }
    Ok(d * (d + params.dim_n() as f64 - 1.0 + params.a()))
}

/// λ for ω = ∅, attained by y^{2s}.
pub fn lambda_empty(params: FractionalParams) -> f64 {
    exponent_to_eigenvalue(2.0 * params.s(), params).expect("2s is nonnegative")
}

/// First eigenpair with its exponent and boundary region.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda: f64,
    pub eigenfunction: ScalarField,
    pub exponent_d: f64,
    pub omega: ArcSet,
    pub residual: f64,
}

/// One row of the k-chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub lambda: f64,
    pub d: f64,
    pub residual: f64,
}

fn check_symmetry(grid: &HemisphereGrid, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("symmetry order k must be at least 1".into()));
    }
    let half = grid.n_phi() / 2;
    if half % k != 0 {
        return Err(Error::SymmetryMisaligned { k, half });
    }
    Ok(())
}

/// Tiles a ring solution periodically over the full φ grid and normalizes.
fn finish(
    grid: &HemisphereGrid,
    ring_n: usize,
    x: &[f64],
    lambda: f64,
    residual: f64,
    omega: ArcSet,
) -> Result<EigenResult> {
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let mut values = vec![0.0; nt * np];
    for j in 0..nt {
        for l in 0..np {
            values[j * np + l] = x[j * ring_n + l % ring_n];
        }
    }
    let norm = grid.inner_raw(&values, &values).sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    let lambda = lambda.max(0.0);
    Ok(EigenResult {
        lambda,
        eigenfunction: ScalarField::new(grid.grid_ref(), values)?,
        exponent_d: characteristic_exponent(lambda, grid.params())?,
        omega,
        residual,
    })
}

/// λ₁ˢ(ω): Dirichlet on equator nodes outside the open interior of ω,
/// natural condition inside.
pub fn first_eigenvalue(grid: &HemisphereGrid, omega: &ArcSet) -> Result<EigenResult> {
    let free = omega.interior_mask(grid.n_phi())?;
    let op = RingOperator::new(grid, grid.n_phi(), 1.0, free);
    let e = lowest_eigenpair(&op, None)?;
    finish(grid, grid.n_phi(), &e.x, e.lambda, e.residual, omega.clone())
}

/// λ₁ˢ(k) over fields invariant under rotation by 2π/k with Dirichlet data
/// off ω_k, solved on one period of the φ grid.
pub fn first_eigenvalue_symmetric(grid: &HemisphereGrid, k: usize) -> Result<EigenResult> {
    check_symmetry(grid, k)?;
    let omega = ArcSet::canonical(k)?;
    let ring_n = grid.n_phi() / k;
    let free = omega.interior_mask(grid.n_phi())?[..ring_n].to_vec();
    let op = RingOperator::new(grid, ring_n, 1.0, free);
    let e = lowest_eigenpair(&op, None)?;
    finish(grid, ring_n, &e.x, e.lambda, e.residual, omega)
}

/// λ₁ˢ(k) through the folded energy: half-circle Dirichlet data with the
/// φ-derivative coefficient multiplied by k².
pub fn first_eigenvalue_folded(grid: &HemisphereGrid, k: usize) -> Result<EigenResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("symmetry order k must be at least 1".into()));
    }
    let omega = ArcSet::half();
    let free = omega.interior_mask(grid.n_phi())?;
    let op = RingOperator::new(grid, grid.n_phi(), (k * k) as f64, free);
    let e = lowest_eigenpair(&op, None)?;
    finish(grid, grid.n_phi(), &e.x, e.lambda, e.residual, omega)
}

/// (k, λ₁ˢ(k), d(k)) for k = 1..=k_max using the folded formulation, which
/// needs no divisibility of the φ grid.
pub fn sweep_k(grid: &HemisphereGrid, k_max: usize) -> Result<Vec<SweepRow>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let e = first_eigenvalue_folded(grid, k)?;
            Ok(SweepRow {
                k,
                lambda: e.lambda,
                d: e.exponent_d,
                residual: e.residual,
            })
        })
        .collect()
}

/// Chain diagnostics for a sweep table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub lambda_monotone: bool,
    pub d_monotone: bool,
    pub below_ceiling: bool,
    pub gap_nonincreasing: bool,
    pub strictly_increasing: bool,
}

pub fn summarize_sweep(rows: &[SweepRow], params: FractionalParams) -> SweepSummary {
    let two_s = 2.0 * params.s();
    let pairs = || rows.windows(2);
    SweepSummary {
        lambda_monotone: pairs().all(|w| w[1].lambda >= w[0].lambda),
        d_monotone: pairs().all(|w| w[1].d >= w[0].d),
        below_ceiling: rows.iter().all(|r| r.d < two_s),
        gap_nonincreasing: pairs().all(|w| two_s - w[1].d <= two_s - w[0].d),
        strictly_increasing: pairs().all(|w| w[1].lambda > w[0].lambda),
    }
}
