//! CNF formulas in `±1` semantics and DIMACS I/O.
//!
//! Variables are 0-based internally and 1-based in DIMACS text. An assignment
//! value of `+1` means the variable is true.

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    /// `+1` for `x_var`, `-1` for its negation.
    pub polarity: i8,
}

impl Literal {
    pub fn new(var: usize, polarity: i8) -> Self {
        debug_assert!(polarity == 1 || polarity == -1);
        Self { var, polarity }
    }

    /// Converts a signed 1-based DIMACS literal.
    pub fn from_dimacs(lit: i64) -> Self {
        debug_assert!(lit != 0);
        Self::new(lit.unsigned_abs() as usize - 1, if lit > 0 { 1 } else { -1 })
    }

    pub fn to_dimacs(self) -> i64 {
        (self.var as i64 + 1) * self.polarity as i64
    }

    #[inline]
    pub fn is_true(self, s: &Assignment) -> bool {
        s.0[self.var] == self.polarity
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals over distinct variables, sorted by variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Canonicalizes a literal list. Repeated literals are merged; returns
    /// `None` for a tautology (`x ∨ ¬x`). Panics on an empty list.
    pub fn new(mut literals: Vec<Literal>) -> Option<Self> {
        assert!(!literals.is_empty(), "clause must have at least one literal");
        literals.sort();
        literals.dedup();
        if literals.windows(2).any(|w| w[0].var == w[1].var) {
            return None;
        }
        Some(Self { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals.iter().map(|l| l.var)
    }

    pub fn is_satisfied(&self, s: &Assignment) -> bool {
        self.literals.iter().any(|l| l.is_true(s))
    }
}

pub fn clause_satisfied(c: &Clause, s: &Assignment) -> bool {
    c.is_satisfied(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    /// Builds a formula, checking that every literal is in range.
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        for c in &clauses {
            for l in c.literals() {
                if l.var >= num_vars {
                    return Err(Error::VarOutOfRange {
                        index: l.var,
                        num_vars,
                    });
                }
            }
        }
        Ok(Self { num_vars, clauses })
    }

    /// Convenience constructor from signed 1-based literals. Tautologies are
    /// dropped as in parsing.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[&[i64]]) -> Result<Self> {
        let clauses = clauses
            .iter()
            .filter_map(|c| Clause::new(c.iter().map(|&l| Literal::from_dimacs(l)).collect()))
            .collect();
        Self::new(num_vars, clauses)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, m: usize) -> &Clause {
        &self.clauses[m]
    }

    pub fn count_unsat(&self, s: &Assignment) -> usize {
        self.clauses.iter().filter(|c| !c.is_satisfied(s)).count()
    }

    /// Indices of clauses violated by `s`, in clause order.
    pub fn unsat_clauses(&self, s: &Assignment) -> Vec<usize> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_satisfied(s))
            .map(|(m, _)| m)
            .collect()
    }

    pub fn check_assignment(&self, s: &Assignment) -> Result<()> {
        if s.len() != self.num_vars {
            return Err(Error::AssignmentLength {
                expected: self.num_vars,
                got: s.len(),
            });
        }
        Ok(())
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c.literals() {
                write!(out, "{} ", l).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

pub fn count_unsat(f: &Formula, s: &Assignment) -> usize {
    f.count_unsat(s)
}

/// A point of `{-1,+1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<i8>);

impl Assignment {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::InvalidSpin(b as i64));
        }
        Ok(Self(bits))
    }

    pub fn all_ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| if b { 1 } else { -1 }).collect())
    }

    /// Point with `s_i = -1` exactly where bit `i` of `index` is set.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| if index >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: i8) {
        debug_assert!(value == 1 || value == -1);
        self.0[i] = value;
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Signed 1-based literals, one per variable.
    pub fn to_dimacs_literals(&self) -> Vec<i64> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &b)| (i as i64 + 1) * b as i64)
            .collect()
    }
}

/// Side information collected while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub declared_clauses: usize,
    pub dropped_tautologies: usize,
}

pub fn parse_dimacs(text: &str) -> Result<Formula, ParseError> {
    parse_dimacs_with_report(text).map(|(f, _)| f)
}

/// Parses DIMACS CNF. Clauses may span lines. A line starting with `%` ends
/// the input (SATLIB files trail a `%` and a lone `0`).
pub fn parse_dimacs_with_report(text: &str) -> Result<(Formula, ParseReport), ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut report = ParseReport::default();
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_start = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::new(line_no, "duplicate header"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(ParseError::new(line_no, "malformed header, expected `p cnf <vars> <clauses>`"));
            }
            let n = fields[2]
                .parse()
                .map_err(|_| ParseError::new(line_no, format!("bad variable count `{}`", fields[2])))?;
            let m = fields[3]
                .parse()
                .map_err(|_| ParseError::new(line_no, format!("bad clause count `{}`", fields[3])))?;
            header = Some((n, m));
            report.declared_clauses = m;
            continue;
        }
        let Some((n, _)) = header else {
            return Err(ParseError::new(line_no, "clause data before `p cnf` header"));
        };
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| ParseError::new(line_no, format!("bad literal `{}`", tok)))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(ParseError::new(line_no, "empty clause"));
                }
                match Clause::new(std::mem::take(&mut current)) {
                    Some(c) => clauses.push(c),
                    None => report.dropped_tautologies += 1,
                }
                continue;
            }
            if lit.unsigned_abs() as usize > n {
                return Err(ParseError::new(
                    line_no,
                    format!("literal {} out of range for {} variables", lit, n),
                ));
            }
            if current.is_empty() {
                current_start = line_no;
            }
            current.push(Literal::from_dimacs(lit));
        }
    }

    let Some((n, _)) = header else {
        return Err(ParseError::new(last_line.max(1), "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(ParseError::new(current_start, "unterminated clause"));
    }
    Ok((Formula { num_vars: n, clauses }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(bits: &[i8]) -> Assignment {
        Assignment::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn parses_single_clause() {
        let f = parse_dimacs("p cnf 2 1\n1 2 0").unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(
            f.clause(0).literals(),
            &[Literal::new(0, 1), Literal::new(1, 1)]
        );
    }

    #[test]
    fn drops_tautology() {
        let (f, report) = parse_dimacs_with_report("p cnf 2 1\n1 -1 0").unwrap();
        assert_eq!(f.num_clauses(), 0);
        assert_eq!(report.dropped_tautologies, 1);
    }

    #[test]
    fn skips_comments() {
        let f = parse_dimacs("p cnf 3 2\nc comment\n1 -2 3 0\n-1 2 0").unwrap();
        assert_eq!((f.num_vars(), f.num_clauses()), (3, 2));
    }

    #[test]
    fn merges_repeated_literals() {
        let f = parse_dimacs("p cnf 2 1\n2 1 2 0\n").unwrap();
        assert_eq!(f.clause(0).width(), 2);
        assert_eq!(f.clause(0).literals()[0].var, 0);
    }

    #[test]
    fn clause_spanning_lines_and_satlib_trailer() {
        let text = "c x\np cnf 3 2\n 1 -3\n 2 0\n-2 3 0\n%\n0\n\n";
        let f = parse_dimacs(text).unwrap();
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.clause(0).width(), 3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("c only comments\n", 1),
            ("p cnf x 1\n1 0", 1),
            ("p dnf 2 1\n1 0", 1),
            ("p cnf 2 1\n1 3 0", 2),
            ("p cnf 2 1\n0", 2),
            ("p cnf 2 1\n1 2", 2),
            ("p cnf 2 1\nc\n1 two 0", 3),
            ("1 2 0\np cnf 2 1", 1),
        ];
        for (text, line) in cases {
            let err = parse_dimacs(text).unwrap_err();
            assert_eq!(err.line, line, "{:?}: {}", text, err);
        }
    }

    #[test]
    fn clause_satisfaction() {
        let c = Clause::new(vec![Literal::new(0, 1), Literal::new(1, 1)]).unwrap();
        assert!(clause_satisfied(&c, &a(&[1, -1])));
        assert!(!clause_satisfied(&c, &a(&[-1, -1])));
        let neg = Clause::new(vec![Literal::new(0, -1)]).unwrap();
        assert!(clause_satisfied(&neg, &a(&[-1])));
    }

    #[test]
    fn unsat_counts() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        assert_eq!(count_unsat(&f, &a(&[-1, -1])), 1);
        let empty = Formula::new(3, vec![]).unwrap();
        assert_eq!(count_unsat(&empty, &a(&[1, -1, 1])), 0);
        let contra = Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        assert_eq!(count_unsat(&contra, &a(&[1])), 1);
    }

    #[test]
    fn dimacs_round_trip() {
        let f = parse_dimacs("p cnf 4 3\n1 -2 3 0\n-4 0\n2 4 -1 0\n").unwrap();
        assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn rejects_bad_spins() {
        assert!(Assignment::new(vec![1, 0]).is_err());
        assert_eq!(Assignment::from_index(3, 0b101).bits(), &[-1, 1, -1]);
    }
}
