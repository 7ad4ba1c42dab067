//! Small factorizations used by the Fourier-decoupled solvers.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// LDLᵀ factors of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub(crate) struct Tridiag {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Tridiag {
    /// `off[i]` couples unknowns i and i+1.
    pub fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n];
        d[0] = diag[0];
        for i in 1..n {
            if d[i - 1] == 0.0 || !d[i - 1].is_finite() {
                return Err(Error::Singular(format!("zero pivot in tridiagonal row {}", i - 1)));
            }
            l[i] = off[i - 1] / d[i - 1];
            d[i] = diag[i] - l[i] * off[i - 1];
        }
        if d[n - 1] == 0.0 {
            return Err(Error::Singular("zero pivot in last tridiagonal row".into()));
        }
        Ok(Self { d, l })
    }

    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 1..n {
            let prev = b[i - 1];
            b[i] -= prev * self.l[i];
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n - 1).rev() {
            let next = b[i + 1];
            b[i] -= next * self.l[i + 1];
        }
    }
}

/// Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// `entry(i, j)` must return A[i][j] for i − bw ≤ j ≤ i.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, bw: usize, entry: F) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::Singular(format!(
                            "band matrix not positive definite at row {i} (pivot {sum:e})"
                        )));
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = sum / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let s = b[i] / self.l[i * w + bw];
            b[i] = s;
            for k in i.saturating_sub(bw)..i {
                b[k] -= self.l[i * w + (k + bw - i)] * s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve_matches_product() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let off = [-1.0, -2.0, 0.5];
        let x = [1.0, -2.0, 3.0, 0.25];
        let mut b: Vec<Complex64> = (0..4)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += off[i - 1] * x[i - 1];
                }
                if i < 3 {
                    v += off[i] * x[i + 1];
                }
                Complex64::new(v, 2.0 * v)
            })
            .collect();
        Tridiag::factor(&diag, &off).unwrap().solve(&mut b);
        for i in 0..4 {
            assert!((b[i].re - x[i]).abs() < 1e-14 && (b[i].im - 2.0 * x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn band_cholesky_solves_laplacian() {
        let n = 30;
        let bw = 3;
        let a = |i: usize, j: usize| {
            if i == j {
                7.0
            } else if i.abs_diff(j) <= bw {
                -1.0 / (1.0 + i.abs_diff(j) as f64)
            } else {
                0.0
            }
        };
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a(i, j) * x[j]).sum()).collect();
        BandCholesky::factor(n, bw, a).unwrap().solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
        assert!(BandCholesky::factor(2, 1, |i, j| if i == j { -1.0 } else { 0.0 }).is_err());
    }
}
