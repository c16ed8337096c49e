//! Dense Cholesky factorization that grows by appended rows.

use std::time::Instant;

use nalgebra::{DMatrixView, DMatrixViewMut};

/// Ridge values tried, in order, once the plain factorization fails.
pub(crate) const RIDGE_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// A pivot below this fraction of its (ridged) diagonal entry is treated as
/// numerically singular.
const PIVOT_RTOL: f64 = 1e-10;

/// Rows appended per step; the deadline is checked between steps.
const CHUNK_ROWS: usize = 256;

/// Column panel width of the blocked forward substitution.
const PANEL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FactorError {
    Singular,
    Expired,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    let mut acc = [0.0f64; 8];
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// Lower factor `L` with `L Lᵀ = G + ridge·I`, stored as packed rows.
#[derive(Debug, Clone, Default)]
pub(crate) struct Cholesky {
    rows: Vec<Vec<f64>>,
    ridge: f64,
}

impl Cholesky {
    pub(crate) fn new(ridge: f64) -> Self {
        Self {
            rows: Vec::new(),
            ridge,
        }
    }

    #[cfg(test)]
    pub(crate) fn dim(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Factors a full matrix given as lower rows (`lower[i].len() == i + 1`).
    pub(crate) fn factor(lower: &[Vec<f64>], ridge: f64, deadline: Option<Instant>) -> Result<Self, FactorError> {
        let mut c = Self::new(ridge);
        c.extend(lower, deadline)?;
        Ok(c)
    }

    /// Appends the rows `lower[k][0..=k]` for `k = dim..dim+new`. On failure
    /// the factor is left as it was. The first chunk always runs; later
    /// chunks give up once `deadline` has passed.
    pub(crate) fn extend(&mut self, new_rows: &[Vec<f64>], deadline: Option<Instant>) -> Result<(), FactorError> {
        let old = self.rows.len();
        for (c, chunk) in new_rows.chunks(CHUNK_ROWS).enumerate() {
            let res = if c > 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                Err(FactorError::Expired)
            } else {
                self.append(chunk)
            };
            if res.is_err() {
                self.rows.truncate(old);
                return res;
            }
        }
        Ok(())
    }

    fn append(&mut self, rows: &[Vec<f64>]) -> Result<(), FactorError> {
        let old = self.rows.len();
        let p = rows.len();

        // x = G21 L11⁻ᵀ, p × old, column-major.
        let mut x = vec![0.0; p * old];
        for (r, g) in rows.iter().enumerate() {
            for (j, v) in g[..old].iter().enumerate() {
                x[j * p + r] = *v;
            }
        }
        self.forward(&mut x, p);

        // Schur complement G22 - x xᵀ (lower part used), column-major p × p.
        let mut s = vec![0.0; p * p];
        for (t, g) in rows.iter().enumerate() {
            for u in 0..=t {
                s[u * p + t] = g[old + u];
            }
        }
        if old > 0 && p > 0 {
            let a = DMatrixView::from_slice(&x, p, old);
            let at = DMatrixView::from_slice_with_strides(&x, old, p, p, 1);
            DMatrixViewMut::from_slice(&mut s, p, p).gemm(-1.0, &a, &at, 1.0);
        }

        let mut tail: Vec<Vec<f64>> = Vec::with_capacity(p);
        for t in 0..p {
            let mut l = vec![0.0; t + 1];
            for u in 0..t {
                let lu = &tail[u];
                l[u] = (s[u * p + t] - dot(&l[..u], &lu[..u])) / lu[u];
            }
            let diag = rows[t][old + t] + self.ridge;
            let pivot = s[t * p + t] + self.ridge - dot(&l[..t], &l[..t]);
            if !pivot.is_finite() || pivot <= PIVOT_RTOL * diag.abs() || pivot <= 0.0 {
                return Err(FactorError::Singular);
            }
            l[t] = pivot.sqrt();
            tail.push(l);
        }

        for (t, l) in tail.into_iter().enumerate() {
            let mut row = Vec::with_capacity(old + t + 1);
            row.extend((0..old).map(|j| x[j * p + t]));
            row.extend(l);
            self.rows.push(row);
        }
        Ok(())
    }

    /// Solves `L11 yᵀ = xᵀ` in place for the `p` rows of column-major `x`,
    /// one column panel at a time.
    fn forward(&self, x: &mut [f64], p: usize) {
        let old = self.rows.len();
        for j0 in (0..old).step_by(PANEL) {
            let j1 = (j0 + PANEL).min(old);
            let nb = j1 - j0;
            let (done, rest) = x.split_at_mut(j0 * p);
            let panel = &mut rest[..nb * p];
            if j0 > 0 {
                let mut lb = Vec::with_capacity(nb * j0);
                for row in &self.rows[j0..j1] {
                    lb.extend_from_slice(&row[..j0]);
                }
                let a = DMatrixView::from_slice(done, p, j0);
                let b = DMatrixView::from_slice(&lb, j0, nb);
                DMatrixViewMut::from_slice(panel, p, nb).gemm(-1.0, &a, &b, 1.0);
            }
            for j in j0..j1 {
                let row = &self.rows[j];
                let (before, cur) = panel.split_at_mut((j - j0) * p);
                let col = &mut cur[..p];
                for i in j0..j {
                    let lji = row[i];
                    let ci = &before[(i - j0) * p..(i - j0 + 1) * p];
                    for (c, v) in col.iter_mut().zip(ci) {
                        *c -= lji * v;
                    }
                }
                let d = row[j];
                for c in col.iter_mut() {
                    *c /= d;
                }
            }
        }
    }

    /// Solves `L Lᵀ x = rhs`.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        debug_assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let r = &self.rows[i];
            y[i] = (y[i] - dot(&r[..i], &y[..i])) / r[i];
        }
        for i in (0..n).rev() {
            y[i] /= self.rows[i][i];
            let yi = y[i];
            for (j, v) in self.rows[i][..i].iter().enumerate() {
                y[j] -= v * yi;
            }
        }
        y
    }
}
