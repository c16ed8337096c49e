//! Choosing which second-order columns to add after a failed candidate.

use std::collections::BTreeSet;

use rand::Rng;

use crate::cnf::{Assignment, Formula};
use crate::indicator::ColumnKey;

/// Lookup of which columns an approximation already spans.
pub trait ColumnRegistry {
    /// True when `key` would add nothing new: its function is already a
    /// column, or is identically zero.
    fn contains(&mut self, key: &ColumnKey) -> bool;

    fn num_clauses(&self) -> usize;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementPlan {
    pub keys: Vec<ColumnKey>,
    /// Set when the neighbourhood heuristic had nothing new and a random
    /// clause was paired with every other clause instead.
    pub random_clause: Option<usize>,
}

impl RefinementPlan {
    pub fn used_random(&self) -> bool {
        self.random_clause.is_some()
    }
}

/// Violated clauses at `s` together with every clause violated after flipping
/// any single variable of a violated clause.
pub fn clause_neighbors(f: &Formula, s: &Assignment) -> BTreeSet<usize> {
    let violated = f.unsat_clauses(s);
    let mut out: BTreeSet<usize> = violated.iter().copied().collect();
    let mut v = s.clone();
    for &m in &violated {
        for var in f.clause(m).vars() {
            v.flip(var);
            out.extend(f.unsat_clauses(&v));
            v.flip(var);
        }
    }
    out
}

/// All not-yet-present pairs among the neighbourhood of `s`.
pub fn heuristic_keys<C: ColumnRegistry + ?Sized>(
    f: &Formula,
    s: &Assignment,
    registry: &mut C,
) -> Vec<ColumnKey> {
    let u: Vec<usize> = clause_neighbors(f, s).into_iter().collect();
    let mut keys = Vec::new();
    for (a, &i) in u.iter().enumerate() {
        for &j in &u[a + 1..] {
            let key = ColumnKey::pair(i, j);
            if !registry.contains(&key) {
                keys.push(key);
            }
        }
    }
    keys
}

fn new_pairs_with<C: ColumnRegistry + ?Sized>(p: usize, registry: &mut C) -> Vec<ColumnKey> {
    (0..registry.num_clauses())
        .filter(|&j| j != p)
        .map(|j| ColumnKey::pair(p, j))
        .filter(|key| !registry.contains(key))
        .collect()
}

/// Pairs one uniformly drawn clause with every clause it is not yet paired
/// with. Clauses with nothing new are redrawn up to `M` times; after that a
/// scan from a random offset finds one if any exists. `None` means every
/// pair is present.
pub fn random_keys<C, R>(registry: &mut C, rng: &mut R) -> Option<(usize, Vec<ColumnKey>)>
where
    C: ColumnRegistry + ?Sized,
    R: Rng + ?Sized,
{
    let m = registry.num_clauses();
    if m < 2 {
        return None;
    }
    for _ in 0..m {
        let p = rng.gen_range(0..m);
        let keys = new_pairs_with(p, registry);
        if !keys.is_empty() {
            return Some((p, keys));
        }
    }
    let offset = rng.gen_range(0..m);
    (0..m).map(|t| (offset + t) % m).find_map(|p| {
        let keys = new_pairs_with(p, registry);
        (!keys.is_empty()).then_some((p, keys))
    })
}

/// Neighbourhood pairs if any are new, otherwise (when allowed) the random
/// fallback. `None` signals that no further second-order column can be
/// added under the current policy.
pub fn plan_refinement<C, R>(
    f: &Formula,
    s: &Assignment,
    registry: &mut C,
    rng: &mut R,
    allow_random: bool,
) -> Option<RefinementPlan>
where
    C: ColumnRegistry + ?Sized,
    R: Rng + ?Sized,
{
    let keys = heuristic_keys(f, s, registry);
    if !keys.is_empty() {
        return Some(RefinementPlan {
            keys,
            random_clause: None,
        });
    }
    if !allow_random {
        return None;
    }
    random_keys(registry, rng).map(|(p, keys)| RefinementPlan {
        keys,
        random_clause: Some(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    /// Registry backed by a plain key set.
    struct KeySet {
        m: usize,
        present: HashSet<ColumnKey>,
    }

    impl ColumnRegistry for KeySet {
        fn contains(&mut self, key: &ColumnKey) -> bool {
            self.present.contains(key)
        }
        fn num_clauses(&self) -> usize {
            self.m
        }
    }

    fn a(bits: &[i8]) -> Assignment {
        Assignment::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn neighbors_of_satisfying_point_are_empty() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[-1]]).unwrap();
        assert!(clause_neighbors(&f, &a(&[-1, 1])).is_empty());
    }

    #[test]
    fn neighbors_hand_traces() {
        let f = Formula::from_dimacs_clauses(1, &[&[1]]).unwrap();
        assert_eq!(clause_neighbors(&f, &a(&[-1])).into_iter().collect::<Vec<_>>(), vec![0]);
        let g = Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        assert_eq!(clause_neighbors(&g, &a(&[-1])).into_iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn neighbors_ignore_clause_order() {
        let clauses: [&[i64]; 5] = [&[1, 2], &[-1, 3], &[-2, -3], &[2, 4], &[-4, 1]];
        let f = Formula::from_dimacs_clauses(4, &clauses).unwrap();
        let perm = [3usize, 0, 4, 2, 1];
        let permuted: Vec<&[i64]> = perm.iter().map(|&i| clauses[i]).collect();
        let g = Formula::from_dimacs_clauses(4, &permuted).unwrap();
        for x in 0..16 {
            let s = Assignment::from_index(4, x);
            let mapped: BTreeSet<usize> = clause_neighbors(&g, &s).into_iter().map(|i| perm[i]).collect();
            assert_eq!(mapped, clause_neighbors(&f, &s));
        }
    }

    #[test]
    fn heuristic_plan_counts_pairs() {
        // All three clauses violated at the all-false point.
        let f = Formula::from_dimacs_clauses(3, &[&[1], &[2], &[3]]).unwrap();
        let mut reg = KeySet {
            m: 3,
            present: HashSet::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = plan_refinement(&f, &a(&[-1, -1, -1]), &mut reg, &mut rng, true).unwrap();
        assert_eq!(plan.keys.len(), 3);
        assert!(!plan.used_random());
        assert!(plan.keys.iter().all(|k| k.order() == 2));
    }

    #[test]
    fn random_plan_when_neighbourhood_exhausted() {
        let f = Formula::from_dimacs_clauses(4, &[&[1], &[2], &[3], &[4]]).unwrap();
        let s = a(&[-1, -1, 1, 1]);
        let mut present: HashSet<ColumnKey> = [ColumnKey::pair(0, 1)].into_iter().collect();
        present.insert(ColumnKey::pair(0, 2));
        let mut reg = KeySet { m: 4, present };
        // Find a seed whose first draw is clause 2.
        let seed = (0..1000u64)
            .find(|&seed| ChaCha8Rng::seed_from_u64(seed).gen_range(0..4usize) == 2)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = plan_refinement(&f, &s, &mut reg, &mut rng, true).unwrap();
        assert_eq!(plan.random_clause, Some(2));
        assert_eq!(plan.keys, vec![ColumnKey::pair(1, 2), ColumnKey::pair(2, 3)]);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        assert!(plan_refinement(&f, &s, &mut reg, &mut rng, false).is_none());
    }

    #[test]
    fn single_clause_is_saturated() {
        let f = Formula::from_dimacs_clauses(1, &[&[1]]).unwrap();
        let mut reg = KeySet {
            m: 1,
            present: HashSet::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(plan_refinement(&f, &a(&[-1]), &mut reg, &mut rng, true).is_none());
    }

    #[test]
    fn fully_paired_is_saturated() {
        let f = Formula::from_dimacs_clauses(3, &[&[1], &[2], &[3]]).unwrap();
        let present = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| ColumnKey::pair(i, j)).collect();
        let mut reg = KeySet { m: 3, present };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(plan_refinement(&f, &a(&[-1, -1, -1]), &mut reg, &mut rng, true).is_none());
    }

    #[test]
    fn scan_fallback_finds_the_last_open_clause() {
        // Only pairs with clause 4 remain open among 6 clauses.
        let mut present = HashSet::new();
        for i in 0..6 {
            for j in i + 1..6 {
                if i != 4 && j != 4 {
                    present.insert(ColumnKey::pair(i, j));
                }
            }
        }
        present.insert(ColumnKey::pair(0, 4));
        let mut reg = KeySet { m: 6, present };
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (p, keys) = random_keys(&mut reg, &mut rng).unwrap();
            assert!(!keys.is_empty());
            assert!(keys.iter().all(|k| k.clauses().contains(&p)));
        }
    }
}
