use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Finite union of half-open arcs [lo, hi) ⊂ [0, 2π), sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    arcs: Vec<(f64, f64)>,
}

impl ArcSet {
    /// Validates, sorts and merges touching arcs.
    pub fn new(mut arcs: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &arcs {
            if !(lo.is_finite() && hi.is_finite()) || lo < -EPS || hi > TAU + EPS || hi <= lo {
                return Err(Error::InvalidParameter(format!(
                    "arc [{lo}, {hi}) is not a nonempty subinterval of [0, 2π)"
                )));
            }
        }
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(arcs.len());
        for (lo, hi) in arcs {
            let (lo, hi) = (lo.max(0.0), hi.min(TAU));
            if let Some(last) = merged.last_mut() {
                if lo < last.1 - EPS {
                    return Err(Error::InvalidParameter(format!(
                        "arcs overlap near φ = {lo}"
                    )));
                }
                if (lo - last.1).abs() <= EPS {
                    last.1 = hi;
                    continue;
                }
            }
            merged.push((lo, hi));
        }
        Ok(Self { arcs: merged })
    }

    pub fn empty() -> Self {
        Self { arcs: Vec::new() }
    }

    pub fn full() -> Self {
        Self { arcs: vec![(0.0, TAU)] }
    }

    /// ω₁ = {0 < φ < π}.
    pub fn half() -> Self {
        Self { arcs: vec![(0.0, PI)] }
    }

    /// k arcs of length π/k starting at multiples of 2π/k.
    pub fn canonical(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("symmetry order k must be at least 1".into()));
        }
        let t = TAU / k as f64;
        Ok(Self {
            arcs: (0..k).map(|i| (i as f64 * t, i as f64 * t + 0.5 * t)).collect(),
        })
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn length(&self) -> f64 {
        self.arcs.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for &(lo, hi) in &self.arcs {
            if lo > cursor + EPS {
                out.push((cursor, lo));
            }
            cursor = hi;
        }
        if cursor < TAU - EPS {
            out.push((cursor, TAU));
        }
        Self { arcs: out }
    }

    /// Membership of an angle taken modulo 2π.
    pub fn contains(&self, phi: f64) -> bool {
        let p = phi.rem_euclid(TAU);
        self.arcs.iter().any(|&(lo, hi)| p >= lo && p < hi)
    }

    /// Whether every endpoint sits on a node of the uniform φ grid.
    pub fn is_aligned(&self, n_phi: usize) -> bool {
        let d = TAU / n_phi as f64;
        self.arcs.iter().all(|&(lo, hi)| {
            [lo, hi].iter().all(|x| {
                let q = x / d;
                (q - q.round()).abs() < 1e-9
            })
        })
    }

    /// Moves each endpoint to the nearest φ node, dropping arcs that collapse.
    pub fn snapped(&self, n_phi: usize) -> Self {
        let d = TAU / n_phi as f64;
        let arcs = self
            .arcs
            .iter()
            .map(|&(lo, hi)| ((lo / d).round() * d, (hi / d).round() * d))
            .filter(|(lo, hi)| hi > lo)
            .collect();
        Self::new(arcs).unwrap_or_else(|_| Self::empty())
    }

    /// Equator nodes lying in the open interior of ω: these carry the natural
    /// condition, all others are Dirichlet.
    pub fn interior_mask(&self, n_phi: usize) -> Result<Vec<bool>> {
        if !self.is_aligned(n_phi) {
            return Err(Error::ArcMisaligned(format!(
                "endpoints of {:?} are not multiples of 2π/{n_phi}",
                self.arcs
            )));
        }
        let d = TAU / n_phi as f64;
        Ok((0..n_phi)
            .map(|l| {
                let p = l as f64 * d;
                self.contains(p - 0.5 * d) && self.contains(p + 0.5 * d)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_arcs() {
        assert_eq!(ArcSet::canonical(1).unwrap(), ArcSet::half());
        let w2 = ArcSet::canonical(2).unwrap();
        assert_eq!(w2.arcs(), &[(0.0, PI / 2.0), (PI, 1.5 * PI)]);
        let w4 = ArcSet::canonical(4).unwrap();
        assert_eq!(w4.arcs().len(), 4);
        for (i, &(lo, hi)) in w4.arcs().iter().enumerate() {
            assert!((lo - i as f64 * PI / 2.0).abs() < 1e-15);
            assert!((hi - lo - PI / 4.0).abs() < 1e-15);
        }
        assert!(ArcSet::canonical(0).is_err());
    }

    #[test]
    fn complement_algebra() {
        for w in [
            ArcSet::empty(),
            ArcSet::full(),
            ArcSet::canonical(3).unwrap(),
            ArcSet::new(vec![(0.5, 1.0), (2.0, 6.0)]).unwrap(),
        ] {
            let c = w.complement();
            assert!((w.length() + c.length() - TAU).abs() < 1e-12);
            assert_eq!(c.complement(), w);
        }
    }

    #[test]
    fn reflection_maps_omega_k_to_complement() {
        for k in 1..6 {
            let w = ArcSet::canonical(k).unwrap();
            let c = w.complement();
            for i in 0..400 {
                let p = (i as f64 + 0.37) * TAU / 400.0;
                assert_eq!(w.contains(-p), c.contains(p));
            }
        }
    }

    #[test]
    fn interior_mask_marks_endpoints_dirichlet() {
        let m = ArcSet::half().interior_mask(8).unwrap();
        assert_eq!(m, vec![false, true, true, true, false, false, false, false]);
        assert!(ArcSet::full().interior_mask(8).unwrap().iter().all(|&b| b));
        let adj = ArcSet::new(vec![(0.0, PI / 2.0), (PI / 2.0, PI)]).unwrap();
        assert_eq!(adj.interior_mask(8).unwrap(), m);
        assert!(ArcSet::new(vec![(0.1, 1.0)]).unwrap().interior_mask(8).is_err());
    }

    #[test]
    fn rejects_overlaps() {
        assert!(ArcSet::new(vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(ArcSet::new(vec![(1.0, 0.5)]).is_err());
    }
}
