//! Polarization across planes through the y-axis and foliated Schwarz
//! symmetrization about the equator point φ = π/2.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HemisphereGrid, ScalarField};

/// Half space {x·n(α) > 0} with α = jΔφ/2, 0 ≤ j < n_phi. Each contains
/// the direction φ = π/2 − ε for small ε > 0 (j = 0 has π/2 on its
/// boundary), and its reflection permutes the φ nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceThroughAxis {
    normal_angle: f64,
    half_steps: usize,
    n_phi: usize,
}

impl HalfSpaceThroughAxis {
    pub fn new(grid: &HemisphereGrid, normal_angle: f64) -> Result<Self> {
        let n = grid.n_phi();
        let q = 2.0 * normal_angle / grid.dphi();
        let j = q.round();
        if (q - j).abs() > 1e-9 || j < 0.0 || j >= n as f64 {
            return Err(Error::InvalidParameter(format!(
                "normal angle {normal_angle} is not an aligned angle in [0, π)"
            )));
        }
        Ok(Self::from_steps(grid, j as usize))
    }

    fn from_steps(grid: &HemisphereGrid, j: usize) -> Self {
        Self {
            normal_angle: j as f64 * 0.5 * grid.dphi(),
            half_steps: j,
            n_phi: grid.n_phi(),
        }
    }

    /// All aligned half spaces containing φ = π/2 − ε.
    pub fn family(grid: &HemisphereGrid) -> Vec<Self> {
        (0..grid.n_phi()).map(|j| Self::from_steps(grid, j)).collect()
    }

    pub fn normal_angle(&self) -> f64 {
        self.normal_angle
    }

    /// Mirror node of column l.
    pub fn mirror(&self, l: usize) -> usize {
        let n = self.n_phi;
        (self.half_steps + n / 2 + n - l) % n
    }

    /// +1 inside H, 0 on ∂H, −1 outside.
    pub fn side(&self, l: usize) -> i8 {
        let n2 = 2 * self.n_phi;
        let t = (2 * l + n2 - self.half_steps) % n2;
        let (twice, n) = (2 * t, self.n_phi);
        if twice == n || twice == 3 * n {
            0
        } else if twice < n || twice > 3 * n {
            1
        } else {
            -1
        }
    }

    fn check(&self, grid: &HemisphereGrid) -> Result<()> {
        if self.n_phi != grid.n_phi() {
            return Err(Error::GridMismatch("half space built for another φ grid".into()));
        }
        Ok(())
    }
}

fn check_nonnegative(f: &ScalarField) -> Result<()> {
    if let Some(i) = f.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rearrangements need nonnegative input; node {i} holds {}",
            f.values()[i]
        )));
    }
    Ok(())
}

/// Two-point rearrangement: the larger value of each mirror pair moves into H.
pub fn polarize(f: &ScalarField, h: &HalfSpaceThroughAxis, grid: &HemisphereGrid) -> Result<ScalarField> {
    f.check_sphere(grid)?;
    h.check(grid)?;
    check_nonnegative(f)?;
    Ok(polarize_raw(f, h, grid))
}

fn polarize_raw(f: &ScalarField, h: &HalfSpaceThroughAxis, grid: &HemisphereGrid) -> ScalarField {
    let n = grid.n_phi();
    let mut out = f.values().to_vec();
    for row in out.chunks_mut(n) {
        for l in 0..n {
            if h.side(l) == 1 {
                let m = h.mirror(l);
                let (a, b) = (row[l], row[m]);
                row[l] = a.max(b);
                row[m] = a.min(b);
            }
        }
    }
    ScalarField::new(f.grid_ref(), out).expect("same grid")
}

/// Column order from φ = π/2 outward; at equal distance the node with the
/// smaller φ comes first.
pub fn arrangement_order(n_phi: usize) -> Vec<usize> {
    let dphi = std::f64::consts::TAU / n_phi as f64;
    let mut idx: Vec<usize> = (0..n_phi).collect();
    let key = |l: usize| {
        let off = (l as f64 * dphi - FRAC_PI_2).rem_euclid(std::f64::consts::TAU);
        let signed = if off > std::f64::consts::PI { off - std::f64::consts::TAU } else { off };
        (signed.abs(), signed > 0.0)
    };
    idx.sort_by(|&a, &b| {
        let (da, sa) = key(a);
        let (db, sb) = key(b);
        if (da - db).abs() > 1e-9 * dphi {
            da.total_cmp(&db)
        } else {
            sa.cmp(&sb)
        }
    });
    idx
}

/// Per-latitude decreasing rearrangement centred at φ = π/2.
pub fn foliated_schwarz(f: &ScalarField, grid: &HemisphereGrid) -> Result<ScalarField> {
    f.check_sphere(grid)?;
    check_nonnegative(f)?;
    let n = grid.n_phi();
    let order = arrangement_order(n);
    let mut out = vec![0.0; f.values().len()];
    for (src, dst) in f.values().chunks(n).zip(out.chunks_mut(n)) {
        let mut vals = src.to_vec();
        vals.sort_by(|a, b| b.total_cmp(a));
        for (r, &l) in order.iter().enumerate() {
            dst[l] = vals[r];
        }
    }
    ScalarField::new(f.grid_ref(), out)
}

/// One step of the greedy polarization sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub distance: f64,
    pub chosen_plane_angle: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PolarizationRun {
    pub field: ScalarField,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

fn distance(grid: &HemisphereGrid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.inner_raw(&d, &d).sqrt()
}

/// f_{n+1} = (f_n)_{H_n} with H_n the aligned half space bringing f_n
/// closest to f*; stops below `tol`, after `max_iter` steps, or when no
/// half space decreases the distance.
pub fn polarization_sequence(
    f: &ScalarField,
    grid: &HemisphereGrid,
    max_iter: usize,
    tol: f64,
) -> Result<PolarizationRun> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let target = foliated_schwarz(f, grid)?;
    let family = HalfSpaceThroughAxis::family(grid);
    let mut cur = f.clone();
    let mut dist = distance(grid, cur.values(), target.values());
    let mut trace = vec![TraceRow {
        iter: 0,
        distance: dist,
        chosen_plane_angle: None,
    }];
    for it in 1..=max_iter {
        if dist < tol {
            break;
        }
        let best = family
            .iter()
            .map(|h| {
                let p = polarize_raw(&cur, h, grid);
                let d = distance(grid, p.values(), target.values());
                (d, *h, p)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("family is nonempty");
        if best.0 >= dist {
            break;
        }
        dist = best.0;
        cur = best.2;
        trace.push(TraceRow {
            iter: it,
            distance: dist,
            chosen_plane_angle: Some(best.1.normal_angle()),
        });
    }
    Ok(PolarizationRun {
        field: cur,
        converged: dist < tol,
        trace,
    })
}

/// CSV rendering of a trace with header `iter,distance,chosen_plane_angle`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iter,distance,chosen_plane_angle\n");
    for r in trace {
        let angle = r.chosen_plane_angle.map(|a| format!("{a:.17e}")).unwrap_or_default();
        out.push_str(&format!("{},{:.17e},{}\n", r.iter, r.distance, angle));
    }
    out
}
