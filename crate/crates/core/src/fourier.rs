//! Sparse multilinear polynomials over `{-1,+1}^n`.
//!
//! A [`SparsePoly`] stores the nonzero Fourier coefficients `f̂(S)` of a
//! pseudo-Boolean function, keyed by the variable subset `S`. Inner products
//! and norms use the normalized convention `Σ_S f̂(S) ĝ(S) = 2^{-n} Σ_s f(s) g(s)`.

use std::fmt;
use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::cnf::Assignment;
use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this are dropped.
pub const PRUNE_EPSILON: f64 = 1e-12;

/// A subset of variables, stored as a bitset with trailing zero words
/// trimmed so that equal sets have equal representations.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarSet(SmallVec<[u64; 2]>);

impl VarSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(i: usize) -> Self {
        let mut s = Self::empty();
        s.insert(i);
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut s = Self::empty();
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        let (w, b) = (i / 64, i % 64);
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    pub fn remove(&mut self, i: usize) {
        let (w, b) = (i / 64, i % 64);
        if w < self.0.len() {
            self.0[w] &= !(1 << b);
            self.trim();
        }
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        w < self.0.len() && self.0[w] >> b & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Variable indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn max_index(&self) -> Option<usize> {
        let last = *self.0.last()?;
        Some((self.0.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    /// `S Δ T`; the monomial product `x^S x^T` since `s_i² = 1`.
    pub fn symmetric_difference(&self, other: &VarSet) -> VarSet {
        let (long, short) = if self.0.len() >= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut words = long.0.clone();
        for (w, o) in words.iter_mut().zip(short.0.iter()) {
            *w ^= o;
        }
        let mut out = VarSet(words);
        out.trim();
        out
    }

    /// Product of `s_i` over the set.
    #[inline]
    pub fn character(&self, s: &Assignment) -> f64 {
        let negatives = self.iter().filter(|&i| s.get(i) < 0).count();
        if negatives % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn trim(&mut self) {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Debug)]
pub struct SparsePoly {
    num_vars: usize,
    terms: FxHashMap<VarSet, f64>,
}

impl SparsePoly {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: FxHashMap::default(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        if c.abs() > PRUNE_EPSILON {
            p.terms.insert(VarSet::empty(), c);
        }
        p
    }

    /// Sums the given terms (repeated subsets accumulate) and prunes.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VarSet, f64)>,
    {
        let mut p = Self::zero(num_vars);
        for (set, c) in terms {
            if let Some(max) = set.max_index() {
                if max >= num_vars {
                    return Err(Error::VarOutOfRange {
                        index: max,
                        num_vars,
                    });
                }
            }
            *p.terms.entry(set).or_insert(0.0) += c;
        }
        p.prune();
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Number of stored (nonzero) coefficients.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, set: &VarSet) -> f64 {
        self.terms.get(set).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarSet, f64)> + '_ {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn evaluate(&self, s: &Assignment) -> Result<f64> {
        if s.len() != self.num_vars {
            return Err(Error::AssignmentLength {
                expected: self.num_vars,
                got: s.len(),
            });
        }
        Ok(self.terms.iter().map(|(set, c)| c * set.character(s)).sum())
    }

    /// `self + alpha * q`.
    pub fn add_scaled(&self, q: &SparsePoly, alpha: f64) -> Result<SparsePoly> {
        self.check_same(q)?;
        let mut out = self.clone();
        out.add_scaled_in_place(q, alpha);
        out.prune();
        Ok(out)
    }

    /// Pointwise product, computed as a symmetric-difference convolution of
    /// the spectra.
    pub fn multiply(&self, q: &SparsePoly) -> Result<SparsePoly> {
        self.check_same(q)?;
        Ok(self.multiply_unchecked(q))
    }

    /// Normalized inner product `Σ_S p̂(S) q̂(S)`.
    pub fn inner_product(&self, q: &SparsePoly) -> Result<f64> {
        self.check_same(q)?;
        Ok(self.inner_product_unchecked(q))
    }

    /// Restriction `f(s | s_i = b)`. The result never mentions variable `i`.
    pub fn condition(&self, i: usize, b: i8) -> Result<SparsePoly> {
        self.check_var(i)?;
        if b != 1 && b != -1 {
            return Err(Error::InvalidSpin(b as i64));
        }
        let mut out = self.clone();
        out.condition_in_place(i, b);
        Ok(out)
    }

    /// `f̂({i})`.
    pub fn degree1_coefficient(&self, i: usize) -> Result<f64> {
        self.check_var(i)?;
        Ok(self.coefficient(&VarSet::singleton(i)))
    }

    /// `Σ_S f̂(S)²`, which equals `2^{-n} Σ_s f(s)²`.
    pub fn parseval_sq_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    pub fn scaled(&self, alpha: f64) -> SparsePoly {
        let mut out = SparsePoly {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c * alpha)).collect(),
        };
        out.prune();
        out
    }

    /// Same coefficients up to `tol` on every subset.
    pub fn approx_eq(&self, other: &SparsePoly, tol: f64) -> bool {
        self.num_vars == other.num_vars
            && self
                .terms
                .iter()
                .all(|(s, c)| (c - other.coefficient(s)).abs() <= tol)
            && other
                .terms
                .iter()
                .all(|(s, c)| (c - self.coefficient(s)).abs() <= tol)
    }

    /// One line per term, `coeff  i1 i2 ... 0` with 1-based indices, sorted
    /// by subset size and then lexicographically.
    pub fn to_debug_text(&self) -> String {
        let mut rows: Vec<(Vec<usize>, f64)> = self
            .terms
            .iter()
            .map(|(s, &c)| (s.iter().collect(), c))
            .collect();
        rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        let mut out = String::new();
        for (vars, c) in rows {
            write!(out, "{:.17e} ", c).unwrap();
            for v in vars {
                write!(out, " {}", v + 1).unwrap();
            }
            out.push_str(" 0\n");
        }
        out
    }

    pub(crate) fn multiply_unchecked(&self, q: &SparsePoly) -> SparsePoly {
        let mut terms: FxHashMap<VarSet, f64> = FxHashMap::default();
        terms.reserve(self.terms.len() * q.terms.len());
        for (s, a) in &self.terms {
            for (t, b) in &q.terms {
                *terms.entry(s.symmetric_difference(t)).or_insert(0.0) += a * b;
            }
        }
        let mut out = SparsePoly {
            num_vars: self.num_vars,
            terms,
        };
        out.prune();
        out
    }

    pub(crate) fn inner_product_unchecked(&self, q: &SparsePoly) -> f64 {
        let (small, large) = if self.terms.len() <= q.terms.len() {
            (self, q)
        } else {
            (q, self)
        };
        small
            .terms
            .iter()
            .filter_map(|(s, a)| large.terms.get(s).map(|b| a * b))
            .sum()
    }

    /// Accumulates without pruning; callers prune once at the end.
    pub(crate) fn add_scaled_in_place(&mut self, q: &SparsePoly, alpha: f64) {
        for (s, c) in &q.terms {
            *self.terms.entry(s.clone()).or_insert(0.0) += alpha * c;
        }
    }

    pub(crate) fn condition_in_place(&mut self, i: usize, b: i8) {
        let sign = b as f64;
        let old = std::mem::take(&mut self.terms);
        let mut terms: FxHashMap<VarSet, f64> = FxHashMap::default();
        terms.reserve(old.len());
        for (mut s, c) in old {
            if s.contains(i) {
                s.remove(i);
                *terms.entry(s).or_insert(0.0) += sign * c;
            } else {
                *terms.entry(s).or_insert(0.0) += c;
            }
        }
        self.terms = terms;
        self.prune();
    }

    /// Multiplies every coefficient by `alpha` without pruning.
    pub(crate) fn scale_in_place(&mut self, alpha: f64) {
        for c in self.terms.values_mut() {
            *c *= alpha;
        }
    }

    pub(crate) fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() > PRUNE_EPSILON);
    }

    fn check_same(&self, q: &SparsePoly) -> Result<()> {
        if self.num_vars != q.num_vars {
            return Err(Error::VarCountMismatch {
                left: self.num_vars,
                right: q.num_vars,
            });
        }
        Ok(())
    }

    fn check_var(&self, i: usize) -> Result<()> {
        if i >= self.num_vars {
            return Err(Error::VarOutOfRange {
                index: i,
                num_vars: self.num_vars,
            });
        }
        Ok(())
    }
}
