#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ampsat::bias::{bias1, bias2, bias2_all};
use ampsat::indicator::clause_indicator;
use ampsat::oracle::{count_solutions, dense_column, dense_omega, dense_transform, exact_bias, DenseTable};
use ampsat::{ApproxState, Assignment, BiasKind, Clause, ColumnKey, Formula, Literal, SparsePoly};
use rand::seq::index::sample;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// Uniform random formula: `m` clauses, each of a width drawn from `widths`
/// over distinct variables with random signs. Tautologies cannot occur.
pub fn random_formula<R: Rng>(n: usize, m: usize, widths: &[usize], rng: &mut R) -> Formula {
    let clauses = (0..m)
        .map(|_| {
            let k = widths[rng.gen_range(0..widths.len())].min(n);
            let lits = sample(rng, n, k)
                .iter()
                .map(|v| Literal::new(v, if rng.gen() { 1 } else { -1 }))
                .collect();
            Clause::new(lits).expect("distinct variables")
        })
        .collect();
    Formula::new(n, clauses).expect("valid formula")
}

/// Redraws until `accept` holds for the solution count.
pub fn random_formula_where<R: Rng>(
    n_range: (usize, usize),
    m_range: (usize, usize),
    widths: &[usize],
    rng: &mut R,
    accept: impl Fn(u64) -> bool,
) -> Formula {
    loop {
        let n = rng.gen_range(n_range.0..=n_range.1);
        let m = rng.gen_range(m_range.0..=m_range.1);
        let f = random_formula(n, m, widths, rng);
        if accept(count_solutions(&f).unwrap()) {
            return f;
        }
    }
}

pub const TOL: f64 = 1e-9;

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

pub fn tables_close(a: &DenseTable, b: &DenseTable) -> bool {
    tables_close_scaled(a, b, 1.0)
}

/// `close` with the tolerance multiplied by `scale`.
pub fn close_scaled(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= scale * TOL * (1.0 + a.abs().max(b.abs()))
}

pub fn tables_close_scaled(a: &DenseTable, b: &DenseTable, scale: f64) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| close_scaled(*x, *y, scale))
}

/// Every sparse operation the solver relies on, checked against dense
/// tables. Returns the number of checks and a description of each mismatch.
pub fn algebra_check<R: Rng>(f: &Formula, rng: &mut R) -> (usize, Vec<String>) {
    let n = f.num_vars();
    let mut checks = 0;
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            failures.push(what);
        }
    };
    let polys: Vec<SparsePoly> = f.clauses().iter().map(|c| clause_indicator(c, n)).collect();

    for (m, p) in polys.iter().enumerate() {
        let dense = dense_column(f, &ColumnKey::single(m)).unwrap();
        check(tables_close(&DenseTable::from_poly(p), &dense), format!("evaluate clause {}", m));
        check(dense_transform(&dense).unwrap().approx_eq(p, TOL), format!("transform clause {}", m));
    }

    for _ in 0..4.min(polys.len()) {
        let a = rng.gen_range(0..polys.len());
        let b = rng.gen_range(0..polys.len());
        let (pa, pb) = (&polys[a], &polys[b]);
        let (ta, tb) = (DenseTable::from_poly(pa), DenseTable::from_poly(pb));
        let prod = pa.multiply(pb).unwrap();
        let pointwise = ta.pointwise(&tb, |x, y| x * y);
        check(tables_close(&DenseTable::from_poly(&prod), &pointwise), format!("multiply {} {}", a, b));
        check(
            close(pa.inner_product(pb).unwrap(), ta.inner_product(&tb)),
            format!("inner product {} {}", a, b),
        );
        if a != b {
            let col = dense_column(f, &ColumnKey::pair(a, b)).unwrap();
            check(tables_close(&DenseTable::from_poly(&prod), &col), format!("pair column {} {}", a, b));
        }
    }

    // Reference table for the fit built from dense columns and the weights.
    // Ridged fits carry huge cancelling weights, so there the tolerance grows
    // with their total magnitude.
    let state = ApproxState::first_order(f).unwrap();
    let approx = state.omega_tilde();
    let scale = if state.ridge() > 0.0 {
        1.0 + state.weights().iter().map(|w| w.abs()).sum::<f64>()
    } else {
        1.0
    };
    let mut values = vec![0.0; 1 << n];
    for (key, w) in state.keys().iter().zip(state.weights()) {
        for (x, v) in dense_column(f, key).unwrap().values().iter().enumerate() {
            values[x] += w * v;
        }
    }
    let t = DenseTable::from_values(n, values).unwrap();
    check(tables_close_scaled(&DenseTable::from_poly(approx), &t, scale), "evaluate fit".to_string());
    for _ in 0..3 {
        let s = Assignment::random(n, rng);
        let x = (0..n).filter(|&i| s.get(i) == -1).map(|i| 1u64 << i).sum::<u64>();
        check(close_scaled(approx.evaluate(&s).unwrap(), t.get(x as usize), scale), format!("evaluate at {}", x));
    }
    let omega = dense_omega(f).unwrap();
    check(
        close_scaled(approx.inner_product(&dense_transform(&omega).unwrap()).unwrap(), t.inner_product(&omega), scale),
        "inner product with omega".to_string(),
    );

    let fast = bias2_all(approx);
    for i in 0..n {
        for b in [1i8, -1] {
            let c = approx.condition(i, b).unwrap();
            check(tables_close_scaled(&DenseTable::from_poly(&c), &t.condition(i, b), scale), format!("condition {} {}", i, b));
        }
        let e1 = exact_bias(&t, i, BiasKind::Bias1).unwrap();
        let e2 = exact_bias(&t, i, BiasKind::Bias2).unwrap();
        check(close_scaled(bias1(approx, i), e1.normalized, scale), format!("bias1 var {}", i));
        check(close_scaled(bias2(approx, i), e2.normalized, scale), format!("bias2 var {}", i));
        check(close_scaled(fast[i], e2.normalized, scale), format!("fast bias2 var {}", i));
    }
    (checks, failures)
}

