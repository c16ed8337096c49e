//! Writes satisfiable uniform random 3-SAT instances in DIMACS format.
//!
//! ```text
//! cargo run --example gen_uniform -- <n> <m> <count> <seed> <out_dir> [prefix]
//! ```
//!
//! Each clause draws three distinct variables and independent signs.
//! Unsatisfiable draws are discarded by a small DPLL check.

use std::fs;
use std::path::PathBuf;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_formula(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<[i64; 3]> {
    (0..m)
        .map(|_| {
            let vars = sample(rng, n, 3);
            let mut c = [0i64; 3];
            for (slot, v) in c.iter_mut().zip(vars.iter()) {
                let lit = v as i64 + 1;
                *slot = if rng.gen::<bool>() { lit } else { -lit };
            }
            c
        })
        .collect()
}

/// `assign[v]` is 0 (free), 1 or -1.
fn dpll(clauses: &[[i64; 3]], assign: &mut Vec<i8>) -> bool {
    loop {
        let mut unit = None;
        for c in clauses {
            let mut free = None;
            let mut n_free = 0;
            let mut sat = false;
            for &l in c {
                let v = l.unsigned_abs() as usize - 1;
                let want = if l > 0 { 1 } else { -1 };
                match assign[v] {
                    0 => {
                        n_free += 1;
                        free = Some((v, want));
                    }
                    a if a == want => sat = true,
                    _ => {}
                }
            }
            if sat {
                continue;
            }
            match n_free {
                0 => return false,
                1 => {
                    unit = free;
                    break;
                }
                _ => {}
            }
        }
        match unit {
            Some((v, val)) => assign[v] = val,
            None => break,
        }
    }
    let Some(v) = assign.iter().position(|&a| a == 0) else {
        return true;
    };
    for val in [1, -1] {
        let mut next = assign.clone();
        next[v] = val;
        if dpll(clauses, &mut next) {
            *assign = next;
            return true;
        }
    }
    false
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 5 {
        eprintln!("usage: gen_uniform <n> <m> <count> <seed> <out_dir> [prefix]");
        std::process::exit(1);
    }
    let n: usize = args[0].parse().expect("n");
    let m: usize = args[1].parse().expect("m");
    let count: usize = args[2].parse().expect("count");
    let seed: u64 = args[3].parse().expect("seed");
    let dir = PathBuf::from(&args[4]);
    let prefix = args.get(5).cloned().unwrap_or_else(|| format!("rnd3-{}-{}", n, m));
    fs::create_dir_all(&dir).expect("create output dir");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = 0;
    let mut rejected = 0;
    while written < count {
        let clauses = random_formula(n, m, &mut rng);
        if !dpll(&clauses, &mut vec![0; n]) {
            rejected += 1;
            continue;
        }
        written += 1;
        let mut text = format!(
            "c uniform random 3-SAT, n={} m={}, generator seed {} index {}\np cnf {} {}\n",
            n, m, seed, written, n, m
        );
        for c in &clauses {
            text.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        fs::write(dir.join(format!("{}-{:03}.cnf", prefix, written)), text).expect("write instance");
    }
    eprintln!("wrote {} satisfiable instances, discarded {} unsatisfiable draws", written, rejected);
}
