//! Least-squares approximation of the solution indicator in the span of
//! indicator columns.
//!
//! Every column is the 0/1 indicator of a subcube, so Gram entries are cube
//! overlaps and equal columns are detected by comparing cubes. Column
//! spectra are only needed to assemble the approximation.
//!
//! With the all-ones column first and every other column an indicator
//! (product), the right-hand side `Aᵀω` is taken to be `e_∅`: indicator
//! columns are orthogonal to `ω` and the overlap with the constant is set to
//! 1, which only rescales the result.

use std::time::Instant;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::cnf::Formula;
use crate::error::{Error, Result};
use crate::fourier::SparsePoly;
use crate::indicator::{ColumnKey, Cube, IndicatorCache, DEFAULT_MAX_ORDER};
use crate::linalg::{Cholesky, FactorError, RIDGE_LADDER};
use crate::refine::ColumnRegistry;

/// Solves `G a = e_0` for a full symmetric `gram`, escalating a ridge term if
/// the matrix is numerically singular. Returns the weights and the ridge used.
pub fn solve_weights(gram: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let lower: Vec<Vec<f64>> = gram.iter().enumerate().map(|(i, r)| r[..=i].to_vec()).collect();
    let factor = factor_with_ridge(&lower, 0.0, None)?;
    Ok((factor.solve(&unit_rhs(gram.len())), factor.ridge()))
}

fn factor_with_ridge(lower: &[Vec<f64>], min_ridge: f64, deadline: Option<Instant>) -> Result<Cholesky> {
    for ridge in std::iter::once(0.0).chain(RIDGE_LADDER).filter(|&r| r >= min_ridge) {
        match Cholesky::factor(lower, ridge, deadline) {
            Ok(c) => return Ok(c),
            Err(FactorError::Expired) => return Err(Error::DeadlineExceeded),
            Err(FactorError::Singular) => {}
        }
    }
    Err(Error::SingularGram {
        ridge: RIDGE_LADDER[RIDGE_LADDER.len() - 1],
    })
}

fn unit_rhs(k: usize) -> Vec<f64> {
    let mut rhs = vec![0.0; k];
    if k > 0 {
        rhs[0] = 1.0;
    }
    rhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seen {
    Column(usize),
    Duplicate(usize),
    Zero,
}

#[derive(Debug, Clone)]
pub struct ApproxState {
    num_vars: usize,
    keys: Vec<ColumnKey>,
    polys: Vec<SparsePoly>,
    cubes: Vec<Cube>,
    /// Lower triangle, `gram[i][j]` for `j <= i`.
    gram: Vec<Vec<f64>>,
    weights: Vec<f64>,
    omega_tilde: SparsePoly,
    /// Column position of each support; equal supports are equal functions.
    cube_index: FxHashMap<Cube, usize>,
    seen: FxHashMap<ColumnKey, Seen>,
    cache: IndicatorCache,
    factor: Cholesky,
    deadline: Option<Instant>,
}

impl ApproxState {
    /// Constant column plus one column per distinct clause, product order up
    /// to 2 allowed for later refinement.
    pub fn first_order(f: &Formula) -> Result<Self> {
        Self::first_order_with(f, DEFAULT_MAX_ORDER)
    }

    pub fn first_order_with(f: &Formula, max_order: usize) -> Result<Self> {
        let keys: Vec<ColumnKey> = (0..f.num_clauses()).map(ColumnKey::single).collect();
        Self::from_keys(f, &keys, max_order)
    }

    /// Builds the state from scratch for the constant column followed by `keys`.
    pub fn from_keys(f: &Formula, keys: &[ColumnKey], max_order: usize) -> Result<Self> {
        let n = f.num_vars();
        let mut state = Self {
            num_vars: n,
            keys: Vec::new(),
            polys: Vec::new(),
            cubes: Vec::new(),
            gram: Vec::new(),
            weights: Vec::new(),
            omega_tilde: SparsePoly::zero(n),
            cube_index: FxHashMap::default(),
            seen: FxHashMap::default(),
            cache: IndicatorCache::new(f, max_order),
            factor: Cholesky::new(0.0),
            deadline: None,
        };
        let mut all = Vec::with_capacity(keys.len() + 1);
        all.push(ColumnKey::constant());
        all.extend_from_slice(keys);
        state.add_columns(&all)?;
        Ok(state)
    }

    /// Appends the columns whose functions are not already present (and not
    /// identically zero), extends the Gram matrix by the new rows only, and
    /// re-solves. Returns how many columns were added.
    pub fn add_columns(&mut self, new_keys: &[ColumnKey]) -> Result<usize> {
        let start = self.keys.len();
        for key in new_keys {
            if self.seen.contains_key(key) {
                continue;
            }
            let Some(cube) = self.cache.column_cube(key)? else {
                self.seen.insert(key.clone(), Seen::Zero);
                continue;
            };
            if let Some(&pos) = self.cube_index.get(&cube) {
                self.seen.insert(key.clone(), Seen::Duplicate(pos));
                continue;
            }
            let pos = self.keys.len();
            self.cube_index.insert(cube.clone(), pos);
            self.seen.insert(key.clone(), Seen::Column(pos));
            self.keys.push(key.clone());
            self.polys.push(self.cache.column_poly(key)?);
            self.cubes.push(cube);
        }
        let added = self.keys.len() - start;
        if added == 0 && start > 0 {
            return Ok(0);
        }

        let cubes = &self.cubes;
        let rows: Vec<Vec<f64>> = (start..cubes.len())
            .into_par_iter()
            .map(|i| (0..=i).map(|j| cubes[i].overlap(&cubes[j])).collect())
            .collect();
        self.gram.extend(rows);

        match self.factor.extend(&self.gram[start..], self.deadline) {
            Ok(()) => {}
            Err(FactorError::Expired) => {
                self.rollback(start);
                return Err(Error::DeadlineExceeded);
            }
            Err(FactorError::Singular) => {
                let floor = self.factor.ridge();
                match factor_with_ridge(&self.gram, floor, self.deadline) {
                    Ok(c) => self.factor = c,
                    Err(e) => {
                        self.rollback(start);
                        return Err(e);
                    }
                }
            }
        }
        self.weights = self.factor.solve(&unit_rhs(self.keys.len()));
        self.rebuild_omega();
        Ok(added)
    }

    /// Long factorizations stop once `deadline` passes; the columns being
    /// added are then dropped again.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn rollback(&mut self, len: usize) {
        self.keys.truncate(len);
        self.seen.retain(|_, seen| match seen {
            Seen::Column(pos) | Seen::Duplicate(pos) => *pos < len,
            Seen::Zero => true,
        });
        for cube in self.cubes.drain(len..) {
            self.cube_index.remove(&cube);
        }
        self.polys.truncate(len);
        self.gram.truncate(len);
    }

    fn rebuild_omega(&mut self) {
        let mut omega = SparsePoly::zero(self.num_vars);
        for (p, &a) in self.polys.iter().zip(&self.weights) {
            omega.add_scaled_in_place(p, a);
        }
        omega.prune();
        self.omega_tilde = omega;
    }

    /// True when adding `key` would not create a new column: its function is
    /// zero or already present. Invalid keys count as present.
    pub fn is_present(&mut self, key: &ColumnKey) -> bool {
        if self.seen.contains_key(key) {
            return true;
        }
        match self.cache.column_cube(key) {
            Ok(Some(cube)) => self.cube_index.contains_key(&cube),
            Ok(None) | Err(_) => true,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_columns(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[ColumnKey] {
        &self.keys
    }

    pub fn polys(&self) -> &[SparsePoly] {
        &self.polys
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega_tilde(&self) -> &SparsePoly {
        &self.omega_tilde
    }

    /// Ridge added to the Gram diagonal for the current weights (0 if none).
    pub fn ridge(&self) -> f64 {
        self.factor.ridge()
    }

    pub fn max_order(&self) -> usize {
        self.cache.max_order()
    }

    pub fn num_clauses(&self) -> usize {
        self.cache.num_clauses()
    }

    pub fn gram_entry(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.gram[i][j]
        } else {
            self.gram[j][i]
        }
    }

    pub fn gram_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.keys.len();
        (0..k).map(|i| (0..k).map(|j| self.gram_entry(i, j)).collect()).collect()
    }

    /// Text dump of keys and weights, one column per line (1-based clause
    /// indices, `-` for the constant column).
    pub fn dump(&self) -> String {
        let mut out = format!("# columns {} ridge {:e}\n", self.keys.len(), self.ridge());
        for (key, w) in self.keys.iter().zip(&self.weights) {
            let name = if key.order() == 0 {
                "-".to_string()
            } else {
                key.clauses()
                    .iter()
                    .map(|m| (m + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!("{}\t{:.17e}\n", name, w));
        }
        out
    }
}

impl ColumnRegistry for ApproxState {
    fn contains(&mut self, key: &ColumnKey) -> bool {
        self.is_present(key)
    }

    fn num_clauses(&self) -> usize {
        self.cache.num_clauses()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Assignment;

    fn single_clause(k: usize) -> Formula {
        let lits: Vec<i64> = (1..=k as i64).map(|v| if v == 2 { -v } else { v }).collect();
        Formula::from_dimacs_clauses(k, &[&lits]).unwrap()
    }

    #[test]
    fn empty_formula_is_constant_one() {
        let f = Formula::new(3, vec![]).unwrap();
        let st = ApproxState::first_order(&f).unwrap();
        assert_eq!(st.weights(), &[1.0]);
        assert!(st.omega_tilde().approx_eq(&SparsePoly::constant(3, 1.0), 0.0));
    }

    #[test]
    fn single_clause_weights() {
        for k in 1..=4 {
            let st = ApproxState::first_order(&single_clause(k)).unwrap();
            // Oracle: 2x2 system [[1, q], [q, q]] a = [1, 0], q = 2^-k.
            let q = 0.5f64.powi(k as i32);
            let det = q - q * q;
            let want = [q / det, -q / det];
            assert_eq!(st.num_columns(), 2);
            for (got, want) in st.weights().iter().zip(want) {
                assert!((got - want).abs() < 1e-9, "k={} {:?}", k, st.weights());
            }
            assert!((want[0] - 1.0 / (1.0 - q)).abs() < 1e-12);
        }
        let st = ApproxState::first_order(&single_clause(2)).unwrap();
        assert!((st.weights()[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((st.weights()[1] + 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_clauses_share_a_column() {
        let one = Formula::from_dimacs_clauses(3, &[&[1, -2]]).unwrap();
        let two = Formula::from_dimacs_clauses(3, &[&[1, -2], &[-2, 1]]).unwrap();
        let a = ApproxState::first_order(&one).unwrap();
        let b = ApproxState::first_order(&two).unwrap();
        assert_eq!(b.num_columns(), 2);
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn adding_existing_key_is_a_no_op() {
        let f = Formula::from_dimacs_clauses(4, &[&[1, 2], &[-3, 4], &[2, 3]]).unwrap();
        let mut st = ApproxState::first_order(&f).unwrap();
        let before = st.weights().to_vec();
        assert_eq!(st.add_columns(&[ColumnKey::single(1)]).unwrap(), 0);
        assert_eq!(st.weights(), &before[..]);
        assert_eq!(st.num_columns(), 4);
    }

    #[test]
    fn disjoint_pair_gram_diagonal() {
        let f = Formula::from_dimacs_clauses(4, &[&[1, 2], &[-3, 4]]).unwrap();
        let mut st = ApproxState::first_order(&f).unwrap();
        assert_eq!(st.add_columns(&[ColumnKey::pair(0, 1)]).unwrap(), 1);
        assert!((st.gram_entry(3, 3) - 1.0 / 16.0).abs() < 1e-15);
        // Oracle: mean of the 0/1 product over all points.
        let hits = (0..16)
            .map(|x| Assignment::from_index(4, x))
            .filter(|s| !f.clause(0).is_satisfied(s) && !f.clause(1).is_satisfied(s))
            .count();
        assert_eq!(hits, 1);
    }

    #[test]
    fn all_pairs_of_three_clauses() {
        let f = Formula::from_dimacs_clauses(6, &[&[1, 2], &[3, 4], &[5, -6]]).unwrap();
        let mut st = ApproxState::first_order(&f).unwrap();
        let pairs = [ColumnKey::pair(0, 1), ColumnKey::pair(0, 2), ColumnKey::pair(1, 2)];
        assert_eq!(st.add_columns(&pairs).unwrap(), 3);
        assert_eq!(st.num_columns(), 7);
    }

    #[test]
    fn conflicting_pair_is_zero_and_skipped() {
        let f = Formula::from_dimacs_clauses(3, &[&[1, 2], &[-1, 3]]).unwrap();
        let mut st = ApproxState::first_order(&f).unwrap();
        assert!(st.is_present(&ColumnKey::pair(0, 1)));
        assert_eq!(st.add_columns(&[ColumnKey::pair(0, 1)]).unwrap(), 0);
    }

    #[test]
    fn ridge_path_on_forced_duplicate() {
        // Columns 1 and 2 are the same function.
        let q = 0.25;
        let gram = vec![vec![1.0, q, q], vec![q, q, q], vec![q, q, q]];
        let (a, ridge) = solve_weights(&gram).unwrap();
        assert!(ridge > 0.0);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| gram[i][j] * a[j]).sum::<f64>() + ridge * a[i];
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((row - want).abs() < 1e-6);
        }
        let (a, ridge) = solve_weights(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!((a, ridge), (vec![1.0, 0.0], 0.0));
    }

    #[test]
    fn linearly_dependent_columns_take_ridge() {
        // k(x1∨x2) + k(x1∨¬x2) = k(x1).
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[1, -2], &[1]]).unwrap();
        let st = ApproxState::first_order(&f).unwrap();
        assert_eq!(st.num_columns(), 4);
        assert!(st.ridge() > 0.0);
        assert!(st.weights().iter().all(|w| w.is_finite()));
    }

    #[test]
    fn dump_lists_every_column() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        let st = ApproxState::first_order(&f).unwrap();
        let dump = st.dump();
        assert_eq!(dump.lines().count(), 3);
        assert!(dump.lines().nth(2).unwrap().starts_with("1\t"));
    }
}
