//! Clause-complement indicators and their products.
//!
//! `k_m(s) = 2^{-k} Π_{i ∈ C_m} (1 - c_i s_i)` is 1 exactly where clause `m`
//! is violated. Products of indicators are 1 where every clause in the
//! product is violated.

use std::fmt;

use smallvec::SmallVec;

use crate::cnf::{Clause, Formula};
use crate::error::{Error, Result};
use crate::fourier::{SparsePoly, VarSet};

/// Default and maximum product order used by the solver.
pub const DEFAULT_MAX_ORDER: usize = 2;

/// Spectrum of the indicator of `c` being unsatisfied: for every subset `S`
/// of the clause's variables, `2^{-k} Π_{i∈S} (-c_i)`.
pub fn clause_indicator(c: &Clause, num_vars: usize) -> SparsePoly {
    let lits = c.literals();
    let k = lits.len();
    let scale = 0.5f64.powi(k as i32);
    let terms = (0u64..1 << k).map(|mask| {
        let mut set = VarSet::empty();
        let mut coeff = scale;
        for (j, lit) in lits.iter().enumerate() {
            if mask >> j & 1 == 1 {
                set.insert(lit.var);
                coeff *= -(lit.polarity as f64);
            }
        }
        (set, coeff)
    });
    SparsePoly::from_terms(num_vars, terms).expect("clause variables are in range")
}

/// A set of clause indices naming one column of the approximation: the empty
/// key is the all-ones column, `{m}` is `k_m`, `{m, n}` is `k_m ⊙ k_n`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnKey(SmallVec<[usize; 2]>);

impl ColumnKey {
    pub fn constant() -> Self {
        Self::default()
    }

    pub fn single(m: usize) -> Self {
        Self(smallvec::smallvec![m])
    }

    /// Panics if `a == b`.
    pub fn pair(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "indicator products need distinct clauses");
        Self(if a < b {
            smallvec::smallvec![a, b]
        } else {
            smallvec::smallvec![b, a]
        })
    }

    /// Rejects repeated indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut v: SmallVec<[usize; 2]> = indices.iter().copied().collect();
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidColumnKey(format!(
                "repeated clause index in {:?}",
                indices
            )));
        }
        Ok(Self(v))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn clauses(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Debug for ColumnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Support of an indicator product: the points where every clause of the
/// product is violated. Each constrained variable is pinned to the value
/// that falsifies its literal, so the set is a subcube of `{-1,+1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cube {
    /// Bit `i` set when `s_i` is pinned.
    pinned: Box<[u64]>,
    /// Bit `i` set when `s_i` is pinned to `-1`.
    negative: Box<[u64]>,
}

impl Cube {
    /// The whole space (the all-ones column).
    pub fn full(num_vars: usize) -> Self {
        let words = num_vars.div_ceil(64);
        Self {
            pinned: vec![0; words].into(),
            negative: vec![0; words].into(),
        }
    }

    /// Points violating `c`.
    pub fn of_clause(c: &Clause, num_vars: usize) -> Self {
        let mut cube = Self::full(num_vars);
        for lit in c.literals() {
            let (w, b) = (lit.var / 64, 1u64 << (lit.var % 64));
            cube.pinned[w] |= b;
            if lit.polarity > 0 {
                cube.negative[w] |= b;
            }
        }
        cube
    }

    pub fn num_pinned(&self) -> u32 {
        self.pinned.iter().map(|w| w.count_ones()).sum()
    }

    fn conflicts(&self, other: &Cube) -> bool {
        self.pinned
            .iter()
            .zip(other.pinned.iter())
            .zip(self.negative.iter().zip(other.negative.iter()))
            .any(|((pa, pb), (na, nb))| (na ^ nb) & pa & pb != 0)
    }

    /// `None` when the cubes are disjoint.
    pub fn intersect(&self, other: &Cube) -> Option<Cube> {
        if self.conflicts(other) {
            return None;
        }
        let or = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x | y).collect();
        Some(Cube {
            pinned: or(&self.pinned, &other.pinned),
            negative: or(&self.negative, &other.negative),
        })
    }

    /// Normalized inner product of the two 0/1 indicators, i.e. the fraction
    /// of points in both cubes.
    pub fn overlap(&self, other: &Cube) -> f64 {
        if self.conflicts(other) {
            return 0.0;
        }
        let pinned: u32 = self
            .pinned
            .iter()
            .zip(other.pinned.iter())
            .map(|(a, b)| (a | b).count_ones())
            .sum();
        0.5f64.powi(pinned as i32)
    }
}

/// Indicator spectra and cubes of the clauses of one formula.
#[derive(Debug, Clone)]
pub struct IndicatorCache {
    num_vars: usize,
    max_order: usize,
    first: Vec<SparsePoly>,
    cubes: Vec<Cube>,
}

impl IndicatorCache {
    pub fn new(f: &Formula, max_order: usize) -> Self {
        let n = f.num_vars();
        Self {
            num_vars: n,
            max_order,
            first: f.clauses().iter().map(|c| clause_indicator(c, n)).collect(),
            cubes: f.clauses().iter().map(|c| Cube::of_clause(c, n)).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.first.len()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn validate(&self, key: &ColumnKey) -> Result<()> {
        if key.order() > self.max_order {
            return Err(Error::InvalidColumnKey(format!(
                "{:?} exceeds max order {}",
                key, self.max_order
            )));
        }
        if let Some(&m) = key.clauses().iter().find(|&&m| m >= self.first.len()) {
            return Err(Error::InvalidColumnKey(format!(
                "clause {} does not exist ({} clauses)",
                m,
                self.first.len()
            )));
        }
        Ok(())
    }

    /// Polynomial of the column named by `key`.
    pub fn column_poly(&self, key: &ColumnKey) -> Result<SparsePoly> {
        self.validate(key)?;
        Ok(match key.clauses() {
            [] => SparsePoly::constant(self.num_vars, 1.0),
            [m] => self.first[*m].clone(),
            clauses => clauses[1..]
                .iter()
                .fold(self.first[clauses[0]].clone(), |acc, &m| acc.multiply_unchecked(&self.first[m])),
        })
    }

    /// Support of the column named by `key`; `None` if the column is zero.
    pub fn column_cube(&self, key: &ColumnKey) -> Result<Option<Cube>> {
        self.validate(key)?;
        Ok(match key.clauses() {
            [] => Some(Cube::full(self.num_vars)),
            [m] => Some(self.cubes[*m].clone()),
            clauses => clauses[1..]
                .iter()
                .try_fold(self.cubes[clauses[0]].clone(), |acc, &m| acc.intersect(&self.cubes[m])),
        })
    }
}
