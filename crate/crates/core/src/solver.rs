//! The approximate / decimate / anneal / refine loop, and a plain annealing
//! baseline with random restarts.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::anneal::{default_schedule, AnnealSchedule, LocalSearch};
use crate::approx::ApproxState;
use crate::bias::{measure_bias_with, BiasKind, Selection};
use crate::cnf::{Assignment, Formula};
use crate::error::Result;
use crate::indicator::DEFAULT_MAX_ORDER;
use crate::refine::plan_refinement;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub bias_kind: BiasKind,
    pub timeout: Duration,
    pub seed: u64,
    pub schedule: AnnealSchedule,
    /// 1 disables refinement entirely; 2 allows pairwise products.
    pub max_order: usize,
    pub enable_random_refinement: bool,
    /// Stop after this many rounds even if time remains.
    pub round_limit: Option<usize>,
    /// Break decimation ties at random (seeded) instead of by lowest index.
    pub random_tie_break: bool,
    pub selection: Selection,
}

impl SolverConfig {
    pub fn for_formula(f: &Formula) -> Self {
        Self {
            bias_kind: BiasKind::Bias1,
            timeout: Duration::from_secs(60),
            seed: 0,
            schedule: default_schedule(f.num_vars()),
            max_order: DEFAULT_MAX_ORDER,
            enable_random_refinement: true,
            round_limit: None,
            random_tie_break: false,
            selection: Selection::Magnitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    /// Timed out, hit the round limit, or the weight solve failed. The
    /// formula may still be satisfiable.
    Unknown,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Sat => "SAT",
            SolveStatus::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub rounds: usize,
    pub columns_final: usize,
    pub random_refinements: usize,
    /// Decimation output of every round.
    pub candidate_history: Vec<Assignment>,
    /// Hamming distance between consecutive candidates.
    pub hamming_gaps: Vec<usize>,
    /// Columns after each round, for checking monotone growth.
    pub columns_per_round: Vec<usize>,
    /// Set once no further column could be added.
    pub saturated: bool,
    pub ridge: f64,
    pub diagnostic: Option<String>,
    pub wall_time: Duration,
}

impl SolverStats {
    fn new() -> Self {
        Self {
            status: SolveStatus::Unknown,
            assignment: None,
            rounds: 0,
            columns_final: 0,
            random_refinements: 0,
            candidate_history: Vec::new(),
            hamming_gaps: Vec::new(),
            columns_per_round: Vec::new(),
            saturated: false,
            ridge: 0.0,
            diagnostic: None,
            wall_time: Duration::ZERO,
        }
    }

    pub fn mean_hamming_gap(&self) -> Option<f64> {
        if self.hamming_gaps.is_empty() {
            return None;
        }
        Some(self.hamming_gaps.iter().sum::<usize>() as f64 / self.hamming_gaps.len() as f64)
    }

    /// Everything except wall time, for determinism checks.
    pub fn same_run(&self, other: &SolverStats) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }

    fn push_candidate(&mut self, s: Assignment, columns: usize) {
        if let Some(prev) = self.candidate_history.last() {
            self.hamming_gaps.push(prev.hamming(&s));
        }
        self.candidate_history.push(s);
        self.columns_per_round.push(columns);
        self.rounds += 1;
        self.columns_final = columns;
    }
}

pub fn verify(f: &Formula, s: &Assignment) -> Result<bool> {
    f.check_assignment(s)?;
    Ok(f.count_unsat(s) == 0)
}

/// Runs the refinement loop until a satisfying point is found, the timeout
/// passes, or the round limit is reached.
pub fn solve(f: &Formula, cfg: &SolverConfig) -> SolverStats {
    solve_with_state(f, cfg).0
}

/// Like [`solve`], also returning the final approximation (absent only if
/// the first-order build failed).
pub fn solve_with_state(f: &Formula, cfg: &SolverConfig) -> (SolverStats, Option<ApproxState>) {
    let started = Instant::now();
    let deadline = started + cfg.timeout;
    let mut stats = SolverStats::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let search = LocalSearch::new(f);

    let mut state = match ApproxState::first_order_with(f, cfg.max_order) {
        Ok(s) => s,
        Err(e) => {
            stats.diagnostic = Some(e.to_string());
            stats.wall_time = started.elapsed();
            return (stats, None);
        }
    };
    state.set_deadline(Some(deadline));
    let mut saturated = cfg.max_order < 2;

    let mut candidate = decimate(&state, cfg, saturated, &mut rng);
    stats.push_candidate(candidate.clone(), state.num_columns());

    loop {
        let polished = search.run(&candidate, &cfg.schedule, &mut rng, Some(deadline));
        if f.count_unsat(&polished) == 0 {
            stats.status = SolveStatus::Sat;
            stats.assignment = Some(polished);
            break;
        }
        if Instant::now() >= deadline || cfg.round_limit.is_some_and(|r| stats.rounds >= r) {
            break;
        }

        if !saturated {
            match plan_refinement(f, &candidate, &mut state, &mut rng, cfg.enable_random_refinement) {
                Some(plan) => {
                    if plan.used_random() {
                        stats.random_refinements += 1;
                    }
                    if let Err(e) = state.add_columns(&plan.keys) {
                        stats.diagnostic = Some(e.to_string());
                        break;
                    }
                }
                None => saturated = true,
            }
        }
        candidate = decimate(&state, cfg, saturated, &mut rng);
        stats.push_candidate(candidate.clone(), state.num_columns());
    }

    stats.saturated = saturated;
    stats.ridge = state.ridge();
    stats.wall_time = started.elapsed();
    if let Some(s) = &stats.assignment {
        assert!(f.count_unsat(s) == 0, "reported assignment does not satisfy the formula");
    }
    (stats, Some(state))
}

fn decimate(state: &ApproxState, cfg: &SolverConfig, saturated: bool, rng: &mut ChaCha8Rng) -> Assignment {
    let omega = state.omega_tilde();
    if saturated || cfg.random_tie_break {
        measure_bias_with(omega, cfg.bias_kind, cfg.selection, Some(rng))
    } else {
        measure_bias_with::<ChaCha8Rng>(omega, cfg.bias_kind, cfg.selection, None)
    }
}

/// Plain annealing from fresh uniform starts until a solution, the timeout,
/// or the round limit (one round per start).
pub fn solve_sa(f: &Formula, cfg: &SolverConfig) -> SolverStats {
    let started = Instant::now();
    let deadline = started + cfg.timeout;
    let mut stats = SolverStats::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let search = LocalSearch::new(f);
    loop {
        let start = Assignment::random(f.num_vars(), &mut rng);
        stats.rounds += 1;
        let end = search.run(&start, &cfg.schedule, &mut rng, Some(deadline));
        if f.count_unsat(&end) == 0 {
            stats.status = SolveStatus::Sat;
            stats.assignment = Some(end);
            break;
        }
        if Instant::now() >= deadline || cfg.round_limit.is_some_and(|r| stats.rounds >= r) {
            break;
        }
    }
    stats.wall_time = started.elapsed();
    stats
}
