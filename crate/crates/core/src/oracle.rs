//! Brute-force references over all `2^n` points. Only for tests, the
//! `oracle` subcommand and cross-checking; the solver never calls into here.
//!
//! Tables are indexed by `x ∈ [0, 2^n)` with `s_i = -1` exactly where bit `i`
//! of `x` is set, so `s_i = (-1)^{x_i}`.

use nalgebra::{DMatrix, DVector};

use crate::bias::BiasKind;
use crate::cnf::{Assignment, Formula};
use crate::error::{Error, Result};
use crate::fourier::{SparsePoly, VarSet};
use crate::indicator::ColumnKey;

pub const MAX_TABLE_VARS: usize = 24;
pub const MAX_LSTSQ_VARS: usize = 16;

fn check_size(what: &'static str, n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::TooLarge { what, max, got: n });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTable {
    num_vars: usize,
    values: Vec<f64>,
}

impl DenseTable {
    /// Panics above `MAX_TABLE_VARS`; use [`DenseTable::try_from_fn`] for a
    /// checked version.
    pub fn from_fn<F: FnMut(&Assignment) -> f64>(n: usize, f: F) -> Self {
        Self::try_from_fn(n, f).expect("table too large")
    }

    pub fn try_from_fn<F: FnMut(&Assignment) -> f64>(n: usize, mut f: F) -> Result<Self> {
        check_size("dense table", n, MAX_TABLE_VARS)?;
        let values = (0..1u64 << n).map(|x| f(&Assignment::from_index(n, x))).collect();
        Ok(Self { num_vars: n, values })
    }

    pub fn from_values(num_vars: usize, values: Vec<f64>) -> Result<Self> {
        check_size("dense table", num_vars, MAX_TABLE_VARS)?;
        if values.len() != 1 << num_vars {
            return Err(Error::AssignmentLength {
                expected: 1 << num_vars,
                got: values.len(),
            });
        }
        Ok(Self { num_vars, values })
    }

    /// Evaluates a sparse polynomial at every point.
    pub fn from_poly(p: &SparsePoly) -> Self {
        Self::from_fn(p.num_vars(), |s| p.evaluate(s).expect("length matches"))
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn pointwise(&self, other: &DenseTable, op: impl Fn(f64, f64) -> f64) -> DenseTable {
        assert_eq!(self.num_vars, other.num_vars);
        DenseTable {
            num_vars: self.num_vars,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect(),
        }
    }

    /// `2^{-n} Σ_x f(x) g(x)`.
    pub fn inner_product(&self, other: &DenseTable) -> f64 {
        let sum: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        sum / self.values.len() as f64
    }

    /// Table of `f(s | s_i = b)` as a function of all `n` variables.
    pub fn condition(&self, i: usize, b: i8) -> DenseTable {
        let bit = 1usize << i;
        let values = (0..self.values.len())
            .map(|x| {
                let y = if b == 1 { x & !bit } else { x | bit };
                self.values[y]
            })
            .collect();
        DenseTable {
            num_vars: self.num_vars,
            values,
        }
    }
}

/// 1 on satisfying points, 0 elsewhere.
pub fn dense_omega(f: &Formula) -> Result<DenseTable> {
    DenseTable::try_from_fn(f.num_vars(), |s| (f.count_unsat(s) == 0) as u8 as f64)
}

pub fn count_solutions(f: &Formula) -> Result<u64> {
    check_size("solution count", f.num_vars(), MAX_TABLE_VARS)?;
    Ok((0..1u64 << f.num_vars())
        .filter(|&x| f.count_unsat(&Assignment::from_index(f.num_vars(), x)) == 0)
        .count() as u64)
}

/// Fourier coefficients by an in-place Walsh–Hadamard butterfly, scaled by
/// `2^{-n}` so the polynomial evaluates back to the table.
pub fn dense_transform(t: &DenseTable) -> Result<SparsePoly> {
    let n = t.num_vars;
    check_size("dense transform", n, MAX_TABLE_VARS)?;
    let mut v = t.values.clone();
    let mut h = 1;
    while h < v.len() {
        for block in (0..v.len()).step_by(2 * h) {
            for x in block..block + h {
                let (a, b) = (v[x], v[x + h]);
                v[x] = a + b;
                v[x + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / v.len() as f64;
    SparsePoly::from_terms(
        n,
        v.into_iter().enumerate().map(|(mask, c)| {
            (VarSet::from_indices((0..n).filter(|i| mask >> i & 1 == 1)), c * scale)
        }),
    )
}

/// Column of `A` by direct evaluation: 1 where every clause in the key is
/// violated.
pub fn dense_column(f: &Formula, key: &ColumnKey) -> Result<DenseTable> {
    DenseTable::try_from_fn(f.num_vars(), |s| {
        key.clauses().iter().all(|&m| !f.clause(m).is_satisfied(s)) as u8 as f64
    })
}

/// Minimum-norm least-squares weights of the true `ω` on the constant column
/// followed by `keys`, computed on dense enumerations.
pub fn exact_lstsq(f: &Formula, keys: &[ColumnKey]) -> Result<Vec<f64>> {
    let n = f.num_vars();
    check_size("exact least squares", n, MAX_LSTSQ_VARS)?;
    let mut cols = vec![DenseTable::from_values(n, vec![1.0; 1 << n])?];
    for key in keys {
        if key.clauses().iter().any(|&m| m >= f.num_clauses()) {
            return Err(Error::InvalidColumnKey(format!("{:?}", key)));
        }
        cols.push(dense_column(f, key)?);
    }
    let omega = dense_omega(f)?;
    let rows = 1usize << n;
    let a = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c].values[r]);
    let b = DVector::from_column_slice(&omega.values);
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-10)
        .map_err(|e| Error::InvalidColumnKey(format!("least squares failed: {}", e)))?;
    Ok(x.iter().copied().collect())
}

/// Bias computed by direct summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBias {
    /// Partition sums over the `2^{n-1}` points on each side: `Σ f` for
    /// bias1, `Σ f²` for bias2, positive side minus negative side.
    pub raw: f64,
    /// Same quantity on the normalized scale of the sparse code: `raw / 2^n`
    /// for bias1, `raw / 2^{n-1}` for bias2.
    pub normalized: f64,
}

pub fn exact_bias(t: &DenseTable, i: usize, kind: BiasKind) -> Result<ExactBias> {
    let n = t.num_vars;
    check_size("exact bias", n, MAX_TABLE_VARS)?;
    if i >= n {
        return Err(Error::VarOutOfRange {
            index: i,
            num_vars: n,
        });
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for (x, &v) in t.values.iter().enumerate() {
        let term = match kind {
            BiasKind::Bias1 => v,
            BiasKind::Bias2 => v * v,
        };
        if x >> i & 1 == 0 {
            pos += term;
        } else {
            neg += term;
        }
    }
    let raw = pos - neg;
    let normalized = match kind {
        BiasKind::Bias1 => raw / (1u64 << n) as f64,
        BiasKind::Bias2 => raw / (1u64 << (n - 1)) as f64,
    };
    Ok(ExactBias { raw, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_tables() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        let w = dense_omega(&f).unwrap();
        assert_eq!(w.values().iter().filter(|&&v| v == 1.0).count(), 3);
        // Index 3 is s = (-1, -1).
        assert_eq!(w.get(3), 0.0);
        let contra = Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        assert!(dense_omega(&contra).unwrap().values().iter().all(|&v| v == 0.0));
        let empty = Formula::new(3, vec![]).unwrap();
        assert!(dense_omega(&empty).unwrap().values().iter().all(|&v| v == 1.0));
        assert_eq!(count_solutions(&f).unwrap(), 3);
    }

    #[test]
    fn transform_examples() {
        let ones = DenseTable::from_values(3, vec![1.0; 8]).unwrap();
        assert!(dense_transform(&ones).unwrap().approx_eq(&SparsePoly::constant(3, 1.0), 0.0));
        let e0 = DenseTable::from_fn(3, |s| s.get(0) as f64);
        let want = SparsePoly::from_terms(3, [(VarSet::singleton(0), 1.0)]).unwrap();
        assert!(dense_transform(&e0).unwrap().approx_eq(&want, 0.0));
    }

    #[test]
    fn transform_inverts_evaluation() {
        let t = DenseTable::from_values(4, (0..16).map(|x| ((x * 7) % 5) as f64 - 1.5).collect()).unwrap();
        let p = dense_transform(&t).unwrap();
        let back = DenseTable::from_poly(&p);
        for (a, b) in back.values().iter().zip(t.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lstsq_examples() {
        let f = Formula::from_dimacs_clauses(3, &[&[1, -2, 3], &[2, 3]]).unwrap();
        let mean = exact_lstsq(&f, &[]).unwrap();
        let count = count_solutions(&f).unwrap() as f64;
        assert!((mean[0] - count / 8.0).abs() < 1e-12);

        let contra = Formula::from_dimacs_clauses(2, &[&[1], &[-1]]).unwrap();
        let w = exact_lstsq(&contra, &[ColumnKey::single(0), ColumnKey::single(1)]).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-12));

        let single = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        let w = exact_lstsq(&single, &[ColumnKey::single(0)]).unwrap();
        assert!((w[0] + w[1]).abs() < 1e-12 && (w[0] - 1.0).abs() < 1e-12);

        let big = Formula::new(17, vec![]).unwrap();
        assert!(matches!(exact_lstsq(&big, &[]), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn exact_bias_examples() {
        let c = DenseTable::from_values(2, vec![0.5; 4]).unwrap();
        for kind in [BiasKind::Bias1, BiasKind::Bias2] {
            assert_eq!(exact_bias(&c, 1, kind).unwrap().raw, 0.0);
        }
        let e1 = DenseTable::from_fn(3, |s| s.get(1) as f64);
        let b = exact_bias(&e1, 1, BiasKind::Bias1).unwrap();
        assert_eq!((b.raw, b.normalized), (8.0, 1.0));
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        let w = dense_omega(&f).unwrap();
        assert_eq!(exact_bias(&w, 0, BiasKind::Bias1).unwrap().raw, 1.0);
        assert!(DenseTable::try_from_fn(25, |_| 0.0).is_err());
    }
}
