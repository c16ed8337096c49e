//! Command-line front end: `solve`, `bench`, `verify` and `oracle`.
//!
//! Exit codes: `solve` returns 10 on SAT and 0 on UNKNOWN; `verify` returns 0
//! when the assignment satisfies the formula and 2 when it does not; every
//! usage, I/O or parse error returns 1.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anneal::{default_schedule, AnnealSchedule};
use crate::bias::BiasKind;
use crate::cnf::{parse_dimacs, Assignment, Formula};
use crate::error::{Error, Result};
use crate::oracle::{count_solutions, dense_omega, exact_bias, MAX_TABLE_VARS};
use crate::solver::{solve, solve_sa, solve_with_state, SolveStatus, SolverConfig, SolverStats};

pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNKNOWN: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ampsat", version, about = "Fourier least-squares SAT solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one DIMACS CNF file.
    Solve(SolveArgs),
    /// Run solvers over every `.cnf` file in a directory and write CSV.
    Bench(BenchArgs),
    /// Check an assignment (`v` lines or bare literals) against a formula.
    Verify { cnf: PathBuf, assignment: PathBuf },
    /// Brute-force solution count and exact biases (small instances only).
    Oracle { cnf: PathBuf },
}

#[derive(Debug, Args, Clone)]
struct ScheduleArgs {
    /// Annealing steps per repeat (default depends on the variable count).
    #[arg(long)]
    steps: Option<usize>,
    /// Annealing repeats per round.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    tmin: Option<f64>,
    /// Disable the random-clause refinement fallback.
    #[arg(long)]
    no_random_refine: bool,
    /// Stop after this many rounds.
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Highest indicator-product order (1 or 2).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    max_order: u8,
}

#[derive(Debug, Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, default_value = "bias1")]
    bias: BiasKind,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Append a CSV record of this run.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the final column keys and weights to this file.
    #[arg(long)]
    dump_state: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    dir: PathBuf,
    /// Comma-separated list of amp-bias1, amp-bias2, sa.
    #[arg(long, default_value = "amp-bias1", value_delimiter = ',')]
    solvers: Vec<SolverId>,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    csv: PathBuf,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverId {
    #[serde(rename = "amp-bias1")]
    AmpBias1,
    #[serde(rename = "amp-bias2")]
    AmpBias2,
    #[serde(rename = "sa")]
    Sa,
}

impl SolverId {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverId::AmpBias1 => "amp-bias1",
            SolverId::AmpBias2 => "amp-bias2",
            SolverId::Sa => "sa",
        }
    }
}

impl FromStr for SolverId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "amp-bias1" => Ok(SolverId::AmpBias1),
            "amp-bias2" => Ok(SolverId::AmpBias2),
            "sa" => Ok(SolverId::Sa),
            other => Err(format!("unknown solver `{}` (expected amp-bias1, amp-bias2 or sa)", other)),
        }
    }
}

/// One CSV row. Column order is part of the output format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub solver: SolverId,
    pub seed: u64,
    pub status: String,
    pub wall_time_s: f64,
    pub rounds: usize,
    pub columns_final: usize,
    pub random_refinements: usize,
    pub mean_hamming_gap: Option<f64>,
}

impl BenchRecord {
    pub fn from_stats(instance: &str, solver: SolverId, seed: u64, stats: &SolverStats) -> Self {
        Self {
            instance: instance.to_string(),
            solver,
            seed,
            status: stats.status.to_string(),
            wall_time_s: stats.wall_time.as_secs_f64(),
            rounds: stats.rounds,
            columns_final: stats.columns_final,
            random_refinements: stats.random_refinements,
            mean_hamming_gap: stats.mean_hamming_gap(),
        }
    }

    pub fn solved(&self) -> bool {
        self.status == "SAT"
    }
}

/// Per-instance seed: the first eight bytes of SHA-256 over the master seed
/// and the instance name.
pub fn instance_seed(master: u64, instance: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(instance.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Settings shared by every run of a benchmark.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub timeout: Duration,
    pub steps: Option<usize>,
    pub repeats: Option<usize>,
    pub t_max: Option<f64>,
    pub t_min: Option<f64>,
    pub enable_random_refinement: bool,
    pub round_limit: Option<usize>,
    pub max_order: usize,
}

impl RunOptions {
    pub fn with_timeout(timeout: Duration) -> Self {
        Self {
            timeout,
            steps: None,
            repeats: None,
            t_max: None,
            t_min: None,
            enable_random_refinement: true,
            round_limit: None,
            max_order: 2,
        }
    }

    fn from_args(timeout: f64, a: &ScheduleArgs) -> Result<Self> {
        if !(timeout > 0.0 && timeout.is_finite()) {
            return Err(Error::InvalidSchedule(format!("timeout must be positive, got {}", timeout)));
        }
        Ok(Self {
            timeout: Duration::from_secs_f64(timeout),
            steps: a.steps,
            repeats: a.repeats,
            t_max: a.tmax,
            t_min: a.tmin,
            enable_random_refinement: !a.no_random_refine,
            round_limit: a.max_rounds,
            max_order: a.max_order as usize,
        })
    }

    pub fn schedule(&self, n: usize) -> Result<AnnealSchedule> {
        let d = default_schedule(n);
        AnnealSchedule::new(
            self.t_max.unwrap_or(d.t_max),
            self.t_min.unwrap_or(d.t_min),
            self.steps.unwrap_or(d.steps),
            self.repeats.unwrap_or(d.repeats),
        )
    }

    pub fn config(&self, f: &Formula, bias: BiasKind, seed: u64) -> Result<SolverConfig> {
        Ok(SolverConfig {
            bias_kind: bias,
            timeout: self.timeout,
            seed,
            schedule: self.schedule(f.num_vars())?,
            max_order: self.max_order,
            enable_random_refinement: self.enable_random_refinement,
            round_limit: self.round_limit,
            ..SolverConfig::for_formula(f)
        })
    }
}

pub fn run_solver(f: &Formula, solver: SolverId, cfg: &SolverConfig) -> SolverStats {
    match solver {
        SolverId::AmpBias1 => solve(f, &SolverConfig { bias_kind: BiasKind::Bias1, ..cfg.clone() }),
        SolverId::AmpBias2 => solve(f, &SolverConfig { bias_kind: BiasKind::Bias2, ..cfg.clone() }),
        SolverId::Sa => solve_sa(f, cfg),
    }
}

pub fn read_formula(path: &Path) -> Result<Formula> {
    let text = fs::read_to_string(path)?;
    Ok(parse_dimacs(&text)?)
}

/// `.cnf` files directly inside `dir`, sorted by name.
pub fn list_instances(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "cnf"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every `(instance, solver)` pair on `jobs` worker threads. Records come
/// back in instance-major, solver-minor order regardless of `jobs`.
pub fn run_bench(
    files: &[PathBuf],
    solvers: &[SolverId],
    master_seed: u64,
    opts: &RunOptions,
    jobs: usize,
) -> Result<Vec<BenchRecord>> {
    let formulas: Vec<(String, Formula)> = files
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            read_formula(p).map(|f| (name, f))
        })
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, SolverId)> = (0..formulas.len())
        .flat_map(|i| solvers.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, solver)| {
                let (name, f) = &formulas[i];
                let seed = instance_seed(master_seed, name);
                let cfg = opts.config(f, BiasKind::Bias1, seed)?;
                let stats = run_solver(f, solver, &cfg);
                Ok(BenchRecord::from_stats(name, solver, seed, &stats))
            })
            .collect()
    })
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable success summary per solver.
pub fn summarize(records: &[BenchRecord], solvers: &[SolverId]) -> String {
    let mut out = String::new();
    for &solver in solvers {
        let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.solver == solver).collect();
        let solved: Vec<&&BenchRecord> = rs.iter().filter(|r| r.solved()).collect();
        let rate = if rs.is_empty() { 0.0 } else { 100.0 * solved.len() as f64 / rs.len() as f64 };
        out.push_str(&format!(
            "{}: {}/{} solved ({:.1}%)\n",
            solver.as_str(),
            solved.len(),
            rs.len(),
            rate
        ));
        if solved.is_empty() || solver == SolverId::Sa {
            continue;
        }
        let mut hist = std::collections::BTreeMap::new();
        for r in &solved {
            *hist.entry(r.rounds).or_insert(0usize) += 1;
        }
        let hist: Vec<String> = hist.iter().map(|(k, v)| format!("{}:{}", k, v)).collect();
        out.push_str(&format!("  rounds to solve  {}\n", hist.join(" ")));
        let gaps: Vec<f64> = solved.iter().filter_map(|r| r.mean_hamming_gap).collect();
        if !gaps.is_empty() {
            out.push_str(&format!(
                "  mean hamming gap {:.2} over {} multi-round instances\n",
                gaps.iter().sum::<f64>() / gaps.len() as f64,
                gaps.len()
            ));
        }
        let rescued = solved.iter().filter(|r| r.random_refinements > 0).count();
        out.push_str(&format!("  solved after random refinement {}\n", rescued));
    }
    out
}

/// Reads literals from `v` lines, or from every non-comment line when there
/// are none. Each variable of the formula must be given exactly once.
pub fn parse_assignment(text: &str, num_vars: usize) -> Result<Assignment> {
    let has_v = text.lines().any(|l| l.trim_start().starts_with('v'));
    let mut bits: Vec<Option<i8>> = vec![None; num_vars];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        let body = if has_v {
            match line.strip_prefix('v') {
                Some(rest) => rest,
                None => continue,
            }
        } else if line.starts_with('c') || line.starts_with('s') {
            continue;
        } else {
            line
        };
        for tok in body.split_whitespace() {
            let lit: i64 = tok.parse().map_err(|_| {
                crate::error::ParseError::new(idx + 1, format!("bad literal `{}`", tok))
            })?;
            if lit == 0 {
                continue;
            }
            let var = lit.unsigned_abs() as usize;
            if var > num_vars {
                return Err(crate::error::ParseError::new(idx + 1, format!("literal {} out of range", lit)).into());
            }
            if bits[var - 1].replace(if lit > 0 { 1 } else { -1 }).is_some() {
                return Err(crate::error::ParseError::new(idx + 1, format!("variable {} assigned twice", var)).into());
            }
        }
    }
    let bits = bits
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| crate::error::ParseError::new(0, format!("variable {} not assigned", i + 1))))
        .collect::<std::result::Result<Vec<i8>, _>>()?;
    Assignment::new(bits)
}

fn format_v_line(s: &Assignment) -> String {
    let mut line = String::from("v");
    for lit in s.to_dimacs_literals() {
        line.push(' ');
        line.push_str(&lit.to_string());
    }
    line.push_str(" 0");
    line
}

fn append_stats(path: &Path, record: &BenchRecord) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_csv(file, std::slice::from_ref(record), fresh)
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let f = read_formula(&a.file)?;
    let opts = RunOptions::from_args(a.timeout, &a.schedule)?;
    let cfg = opts.config(&f, a.bias, a.seed)?;
    let (stats, state) = solve_with_state(&f, &cfg);
    writeln!(
        out,
        "c rounds {} columns {} random_refinements {} time {:.3}s",
        stats.rounds,
        stats.columns_final,
        stats.random_refinements,
        stats.wall_time.as_secs_f64()
    )?;
    if let Some(d) = &stats.diagnostic {
        writeln!(out, "c aborted: {}", d)?;
    }
    let code = match (&stats.status, &stats.assignment) {
        (SolveStatus::Sat, Some(s)) => {
            writeln!(out, "s SATISFIABLE")?;
            writeln!(out, "{}", format_v_line(s))?;
            EXIT_SAT
        }
        _ => {
            writeln!(out, "s UNKNOWN")?;
            EXIT_UNKNOWN
        }
    };
    if let Some(path) = &a.stats {
        let id = match a.bias {
            BiasKind::Bias1 => SolverId::AmpBias1,
            BiasKind::Bias2 => SolverId::AmpBias2,
        };
        let name = a.file.display().to_string();
        append_stats(path, &BenchRecord::from_stats(&name, id, a.seed, &stats))?;
    }
    if let (Some(path), Some(state)) = (&a.dump_state, &state) {
        fs::write(path, state.dump())?;
    }
    Ok(code)
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let files = list_instances(&a.dir)?;
    if files.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no .cnf files in {}", a.dir.display()),
        )));
    }
    let csv_file = fs::File::create(&a.csv)?;
    let opts = RunOptions::from_args(a.timeout, &a.schedule)?;
    let records = run_bench(&files, &a.solvers, a.seed, &opts, a.jobs)?;
    write_csv(csv_file, &records, true)?;
    write!(out, "{}", summarize(&records, &a.solvers))?;
    Ok(0)
}

fn cmd_verify(cnf: &Path, assignment: &Path, out: &mut dyn Write) -> Result<i32> {
    let f = read_formula(cnf)?;
    let s = parse_assignment(&fs::read_to_string(assignment)?, f.num_vars())?;
    let unsat = f.count_unsat(&s);
    if unsat == 0 {
        writeln!(out, "SAT: assignment satisfies all {} clauses", f.num_clauses())?;
        Ok(EXIT_VERIFY_OK)
    } else {
        writeln!(out, "UNSAT: assignment violates {} of {} clauses", unsat, f.num_clauses())?;
        Ok(EXIT_VERIFY_FAIL)
    }
}

fn cmd_oracle(cnf: &Path, out: &mut dyn Write) -> Result<i32> {
    let f = read_formula(cnf)?;
    if f.num_vars() > MAX_TABLE_VARS {
        return Err(Error::TooLarge {
            what: "oracle",
            max: MAX_TABLE_VARS,
            got: f.num_vars(),
        });
    }
    let count = count_solutions(&f)?;
    writeln!(out, "{} solutions", count)?;
    let omega = dense_omega(&f)?;
    writeln!(out, "var\tbias1_raw\tbias1_norm\tbias2_raw\tbias2_norm")?;
    for i in 0..f.num_vars() {
        let b1 = exact_bias(&omega, i, BiasKind::Bias1)?;
        let b2 = exact_bias(&omega, i, BiasKind::Bias2)?;
        writeln!(
            out,
            "{}\t{}\t{:.6e}\t{}\t{:.6e}",
            i + 1,
            b1.raw,
            b1.normalized,
            b2.raw,
            b2.normalized
        )?;
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Verify { cnf, assignment } => cmd_verify(&cnf, &assignment, out),
        Command::Oracle { cnf } => cmd_oracle(&cnf, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_name_and_master() {
        assert_eq!(instance_seed(1, "a.cnf"), instance_seed(1, "a.cnf"));
        assert_ne!(instance_seed(1, "a.cnf"), instance_seed(2, "a.cnf"));
        assert_ne!(instance_seed(1, "a.cnf"), instance_seed(1, "b.cnf"));
    }

    #[test]
    fn assignment_parsing() {
        let s = parse_assignment("s SATISFIABLE\nv 1 -2\nv 3 0\n", 3).unwrap();
        assert_eq!(s.bits(), &[1, -1, 1]);
        let s = parse_assignment("-1 2 0\n", 2).unwrap();
        assert_eq!(s.bits(), &[-1, 1]);
        assert!(parse_assignment("v 1 0\n", 2).is_err());
        assert!(parse_assignment("v 1 -1 0\n", 1).is_err());
        assert!(parse_assignment("v 3 0\n", 2).is_err());
    }

    #[test]
    fn solver_ids_round_trip() {
        for id in [SolverId::AmpBias1, SolverId::AmpBias2, SolverId::Sa] {
            assert_eq!(id.as_str().parse::<SolverId>().unwrap(), id);
        }
        assert!("walksat".parse::<SolverId>().is_err());
    }

    #[test]
    fn csv_header_is_stable() {
        let rec = BenchRecord {
            instance: "x.cnf".into(),
            solver: SolverId::Sa,
            seed: 7,
            status: "SAT".into(),
            wall_time_s: 0.5,
            rounds: 2,
            columns_final: 0,
            random_refinements: 0,
            mean_hamming_gap: None,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec], true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "instance,solver,seed,status,wall_time_s,rounds,columns_final,random_refinements,mean_hamming_gap"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "x.cnf,sa,7,SAT,0.5,2,0,0,");
    }
}
