//! Simulated annealing on the number of violated clauses.

use std::time::Instant;

use rand::Rng;

use crate::cnf::{Assignment, Formula};
use crate::error::{Error, Result};

/// Linear temperature schedule, restarted `repeats` times from the same point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub t_max: f64,
    pub t_min: f64,
    pub steps: usize,
    pub repeats: usize,
}

impl AnnealSchedule {
    pub fn new(t_max: f64, t_min: f64, steps: usize, repeats: usize) -> Result<Self> {
        let sched = Self {
            t_max,
            t_min,
            steps,
            repeats,
        };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max >= self.t_min && self.t_max.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "need t_max >= t_min > 0, got t_max={} t_min={}",
                self.t_max, self.t_min
            )));
        }
        if self.steps == 0 || self.repeats == 0 {
            return Err(Error::InvalidSchedule("steps and repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature at step `t` of a repeat.
    pub fn temperature(&self, t: usize) -> f64 {
        if self.steps <= 1 {
            return self.t_max;
        }
        self.t_max + (self.t_min - self.t_max) * t as f64 / (self.steps - 1) as f64
    }
}

/// Step-count anchors `(variables, steps)`.
const STEP_ANCHORS: [(f64, f64); 4] = [(20.0, 1000.0), (50.0, 2000.0), (75.0, 4000.0), (100.0, 6000.0)];
const MIN_STEPS: usize = 500;

/// `t_max = 0.1 n`, `t_min = 5e-5 / n`, two repeats, and a step count
/// interpolated linearly through the anchors (extrapolated past either end).
pub fn default_schedule(n: usize) -> AnnealSchedule {
    let n = n.max(1);
    let x = n as f64;
    let seg = STEP_ANCHORS
        .windows(2)
        .position(|w| x <= w[1].0)
        .unwrap_or(STEP_ANCHORS.len() - 2);
    let (x0, y0) = STEP_ANCHORS[seg];
    let (x1, y1) = STEP_ANCHORS[seg + 1];
    let steps = (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).round();
    AnnealSchedule {
        t_max: 0.1 * x,
        t_min: 5e-5 / x,
        steps: (steps.max(0.0) as usize).max(MIN_STEPS),
        repeats: 2,
    }
}

/// Annealer bound to one formula; keeps occurrence lists across runs.
#[derive(Debug, Clone)]
pub struct LocalSearch<'a> {
    formula: &'a Formula,
    /// `(clause, polarity)` for every occurrence of each variable.
    occurrences: Vec<Vec<(usize, i8)>>,
}

impl<'a> LocalSearch<'a> {
    pub fn new(formula: &'a Formula) -> Self {
        let mut occurrences = vec![Vec::new(); formula.num_vars()];
        for (m, c) in formula.clauses().iter().enumerate() {
            for l in c.literals() {
                occurrences[l.var].push((m, l.polarity));
            }
        }
        Self {
            formula,
            occurrences,
        }
    }

    /// Runs every repeat from `start` and returns the lowest-cost point seen
    /// (earliest on ties). The deadline is checked before each repeat.
    pub fn run<R: Rng + ?Sized>(
        &self,
        start: &Assignment,
        sched: &AnnealSchedule,
        rng: &mut R,
        deadline: Option<Instant>,
    ) -> Assignment {
        let n = self.formula.num_vars();
        let start_true = self.true_counts(start);
        let start_cost = start_true.iter().filter(|&&c| c == 0).count();
        let mut best = start.clone();
        let mut best_cost = start_cost;
        if best_cost == 0 || n == 0 {
            return best;
        }

        for _ in 0..sched.repeats {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break;
            }
            let mut s = start.clone();
            let mut true_count = start_true.clone();
            let mut cost = start_cost;
            for t in 0..sched.steps {
                let v = rng.gen_range(0..n);
                let delta = self.flip_delta(&s, &true_count, v);
                let accept = delta <= 0 || {
                    let temp = sched.temperature(t);
                    rng.gen::<f64>() < (-(delta as f64) / temp).exp()
                };
                if !accept {
                    continue;
                }
                self.apply_flip(&mut s, &mut true_count, v);
                cost = (cost as i64 + delta) as usize;
                if cost < best_cost {
                    best_cost = cost;
                    best = s.clone();
                    if cost == 0 {
                        return best;
                    }
                }
            }
        }
        best
    }

    fn true_counts(&self, s: &Assignment) -> Vec<u32> {
        self.formula
            .clauses()
            .iter()
            .map(|c| c.literals().iter().filter(|l| l.is_true(s)).count() as u32)
            .collect()
    }

    fn flip_delta(&self, s: &Assignment, true_count: &[u32], v: usize) -> i64 {
        let current = s.get(v);
        self.occurrences[v]
            .iter()
            .map(|&(m, pol)| match (pol == current, true_count[m]) {
                (true, 1) => 1,
                (false, 0) => -1,
                _ => 0,
            })
            .sum()
    }

    fn apply_flip(&self, s: &mut Assignment, true_count: &mut [u32], v: usize) {
        let current = s.get(v);
        for &(m, pol) in &self.occurrences[v] {
            if pol == current {
                true_count[m] -= 1;
            } else {
                true_count[m] += 1;
            }
        }
        s.flip(v);
    }
}

pub fn local_search<R: Rng + ?Sized>(
    f: &Formula,
    start: &Assignment,
    sched: &AnnealSchedule,
    rng: &mut R,
) -> Assignment {
    LocalSearch::new(f).run(start, sched, rng, None)
}
