//! Incomplete SAT solving through least-squares approximations of the
//! solution indicator in the Boolean Fourier domain.
//!
//! A CNF formula is mapped to sparse multilinear polynomials (one
//! clause-complement indicator per clause, plus pairwise products). The
//! solver projects the 0/1 solution indicator onto the span of those
//! polynomials, reads a candidate assignment off the projection by
//! bias-driven decimation, polishes it with simulated annealing, and refines
//! the column set around whatever clauses are still violated.
//!
//! Module map:
//!
//! * [`cnf`]: formulas, assignments, DIMACS I/O.
//! * [`fourier`]: sparse polynomial algebra over `{-1,+1}^n`.
//! * [`indicator`]: clause indicators and indicator products.
//! * [`approx`]: Gram matrix, weight solve and the assembled approximation.
//! * [`bias`]: bias measures and decimation.
//! * [`refine`]: neighbourhood and random column refinement.
//! * [`anneal`]: simulated-annealing local search.
//! * [`solver`]: the refinement loop and the plain annealing baseline.
//! * [`oracle`]: brute-force reference implementations.
//! * [`cli`]: command-line entry points and the benchmark harness.

pub mod anneal;
pub mod approx;
pub mod bias;
pub mod cli;
pub mod cnf;
pub mod error;
pub mod fourier;
pub mod indicator;
mod linalg;
pub mod oracle;
pub mod refine;
pub mod solver;

pub use crate::anneal::{default_schedule, local_search, AnnealSchedule};
pub use crate::approx::ApproxState;
pub use crate::bias::{measure_bias, BiasKind};
pub use crate::cnf::{parse_dimacs, Assignment, Clause, Formula, Literal};
pub use crate::error::{Error, ParseError};
pub use crate::fourier::{SparsePoly, VarSet};
pub use crate::indicator::ColumnKey;
pub use crate::solver::{solve, verify, SolveStatus, SolverConfig, SolverStats};
