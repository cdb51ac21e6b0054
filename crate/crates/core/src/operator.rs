//! Operator data: the constant symmetric positive definite matrix `A` of
//! `E u = sum a_hk u_{x_h x_k}` and the point types shared by the rest of the
//! crate.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{CalorixError, Result};

/// Absolute tolerance on `|a_hk - a_kh|` accepted by [`CoefficientMatrix::new`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-14;

/// Validated SPD coefficient matrix with its inverse, determinant and
/// lower-triangular Cholesky factor (all row-major, `n * n`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    n: usize,
    entries: Vec<f64>,
    inv: Vec<f64>,
    det: f64,
    chol: Vec<f64>,
}

impl CoefficientMatrix {
    /// Builds the matrix from rows. Entries within [`SYMMETRY_TOLERANCE`] of
    /// symmetric are stored symmetrized so that `a_hk == a_kh` exactly.
    pub fn new(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if n == 0 || n > crate::kernel::MAX_DIM {
            return Err(CalorixError::InvalidEntries(format!(
                "dimension must be between 1 and {}, got {n}",
                crate::kernel::MAX_DIM
            )));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CalorixError::InvalidEntries(format!("expected a {n}x{n} matrix")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CalorixError::InvalidEntries("non-finite entry".into()));
        }
        let mut entries = vec![0.0; n * n];
        for h in 0..n {
            for k in 0..n {
                let diff = (rows[h][k] - rows[k][h]).abs();
                if diff > SYMMETRY_TOLERANCE {
                    return Err(CalorixError::NotSymmetric { row: h, col: k, diff });
                }
                entries[h * n + k] = if h <= k { rows[h][k] } else { rows[k][h] };
            }
        }

        let chol = cholesky(n, &entries)?;
        let det = (0..n).map(|i| chol[i * n + i] * chol[i * n + i]).product();
        let inv = cholesky_inverse(n, &chol);
        Ok(Self { n, entries, inv, det, chol })
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(n, &rows).expect("identity is SPD")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        Self::new(n, &rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, h: usize, k: usize) -> f64 {
        self.entries[h * self.n + k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn inverse(&self) -> &[f64] {
        &self.inv
    }

    pub fn determinant(&self) -> f64 {
        self.det
    }

    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (row, o) in self.entries.chunks(n).zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `<A^{-1} z, z>`.
    #[inline]
    pub fn inverse_quadratic_form(&self, z: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for (h, inv_row) in self.inv.chunks(n).enumerate() {
            let row: f64 = inv_row.iter().zip(z).map(|(a, b)| a * b).sum();
            acc += row * z[h];
        }
        acc
    }

    /// `<A xi, xi>`.
    #[inline]
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for h in 0..n {
            for k in 0..n {
                acc += self.entries[h * n + k] * xi[h] * xi[k];
            }
        }
        acc
    }

    /// Extreme eigenvalue bounds from Gershgorin discs, clamped to stay
    /// positive. Only used for sizing quadrature windows.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let n = self.n;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for h in 0..n {
            let radius: f64 = (0..n).filter(|&k| k != h).map(|k| self.get(h, k).abs()).sum();
            lo = lo.min(self.get(h, h) - radius);
            hi = hi.max(self.get(h, h) + radius);
        }
        let lo = if lo > 0.0 { lo } else { self.det.powf(1.0 / n as f64).min(hi) * 1e-3 };
        (lo, hi)
    }

    /// Entries as exact rationals. Binary floats are dyadic rationals, so
    /// the conversion is exact.
    pub fn exact_entries(&self) -> Result<Vec<BigRational>> {
        self.entries
            .iter()
            .map(|&v| BigRational::from_float(v).ok_or(CalorixError::NonRationalCoefficients))
            .collect()
    }
}

fn cholesky(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(CalorixError::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_inverse(n: usize, l: &[f64]) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        // forward solve L y = e_c
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        // backward solve L^T x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for i in 0..n {
            inv[i * n + c] = col[i];
        }
    }
    // symmetrize away rounding asymmetry
    for h in 0..n {
        for k in (h + 1)..n {
            let m = 0.5 * (inv[h * n + k] + inv[k * n + h]);
            inv[h * n + k] = m;
            inv[k * n + h] = m;
        }
    }
    inv
}

/// A point `(x, t)` of space-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: impl Into<Vec<f64>>, t: f64) -> Self {
        Self { x: x.into(), t }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    /// Exact rational coordinates `(x, t)`.
    pub fn exact(&self) -> Option<(Vec<BigRational>, BigRational)> {
        let x = self.x.iter().map(|&v| BigRational::from_float(v)).collect::<Option<Vec<_>>>()?;
        Some((x, BigRational::from_float(self.t)?))
    }
}

/// Frequency vector `xi` of the caloric exponentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector(pub Vec<f64>);

impl FrequencyVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}
