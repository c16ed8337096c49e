//! Per-variable bias measures and decimation.

use rand::Rng;

use crate::cnf::Assignment;
use crate::fourier::{SparsePoly, VarSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BiasKind {
    /// Degree-1 Fourier coefficient, i.e. the normalized partition-sum
    /// difference.
    #[default]
    Bias1,
    /// Difference of squared ℓ2 norms of the two restrictions.
    Bias2,
}

impl BiasKind {
    pub fn name(self) -> &'static str {
        match self {
            BiasKind::Bias1 => "bias1",
            BiasKind::Bias2 => "bias2",
        }
    }
}

impl std::str::FromStr for BiasKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bias1" => Ok(BiasKind::Bias1),
            "bias2" => Ok(BiasKind::Bias2),
            other => Err(format!("unknown bias `{}` (expected bias1 or bias2)", other)),
        }
    }
}

/// How the next variable to fix is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Largest `|B_i|`, value `sign(B_i)`.
    #[default]
    Magnitude,
    /// Largest signed `B_i`. Experimental: reproduces the literal
    /// pseudocode listing, which never prefers a strongly negative bias.
    SignedMax,
}

/// Relative tolerance under which two bias magnitudes count as tied.
pub const TIE_RTOL: f64 = 1e-12;

pub fn bias1(p: &SparsePoly, i: usize) -> f64 {
    p.coefficient(&VarSet::singleton(i))
}

/// `‖p|_{s_i=+1}‖² − ‖p|_{s_i=−1}‖²`, computed literally from the two
/// restrictions.
pub fn bias2(p: &SparsePoly, i: usize) -> f64 {
    let up = p.condition(i, 1).expect("variable in range");
    let down = p.condition(i, -1).expect("variable in range");
    up.parseval_sq_norm() - down.parseval_sq_norm()
}

/// `bias2` for every variable in one pass. Writing `p = g + s_i h` with `g`,
/// `h` free of `s_i`, the norm difference is `4⟨g, h⟩`, a sum of
/// `p̂(T) p̂(T \ {i})` over subsets `T` containing `i`.
pub fn bias2_all(p: &SparsePoly) -> Vec<f64> {
    let mut out = vec![0.0; p.num_vars()];
    for (t, c) in p.iter() {
        for i in t.iter() {
            let mut rest = t.clone();
            rest.remove(i);
            let partner = p.coefficient(&rest);
            if partner != 0.0 {
                out[i] += 4.0 * c * partner;
            }
        }
    }
    out
}

pub fn bias1_all(p: &SparsePoly) -> Vec<f64> {
    (0..p.num_vars()).map(|i| bias1(p, i)).collect()
}

pub fn bias_all(p: &SparsePoly, kind: BiasKind) -> Vec<f64> {
    match kind {
        BiasKind::Bias1 => bias1_all(p),
        BiasKind::Bias2 => bias2_all(p),
    }
}

/// Decimation with the default rules: fix the variable of largest `|B_i|`
/// (lowest index on ties) to `sign(B_i)` (`+1` on zero), condition, repeat.
pub fn measure_bias(p: &SparsePoly, kind: BiasKind) -> Assignment {
    measure_bias_with::<rand::rngs::ThreadRng>(p, kind, Selection::Magnitude, None)
}

/// Decimation with a choice of selection rule. When `tie_rng` is given, ties
/// are broken uniformly at random instead of by lowest index.
pub fn measure_bias_with<R: Rng>(
    p: &SparsePoly,
    kind: BiasKind,
    selection: Selection,
    mut tie_rng: Option<&mut R>,
) -> Assignment {
    let n = p.num_vars();
    // Rescale by a power of two (exact) so the largest coefficient is in
    // [1, 2) and the pruning threshold applied while conditioning is relative.
    let mut work = p.clone();
    let top = p.max_abs_coefficient();
    if top > 0.0 && top.is_finite() {
        work.scale_in_place(2f64.powi((-top.log2().floor()).clamp(-1000.0, 1000.0) as i32));
    }
    let scale = work.max_abs_coefficient();
    let zero_tol = match kind {
        BiasKind::Bias1 => TIE_RTOL * scale,
        BiasKind::Bias2 => TIE_RTOL * scale * scale,
    };
    let mut fixed = vec![false; n];
    let mut s = Assignment::all_ones(n);
    let mut candidates = Vec::with_capacity(n);

    for _ in 0..n {
        let biases = bias_all(&work, kind);
        let key = |b: f64| match selection {
            Selection::Magnitude => b.abs(),
            Selection::SignedMax => b,
        };
        let best = (0..n)
            .filter(|&i| !fixed[i])
            .map(|i| key(biases[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = TIE_RTOL * best.abs() + zero_tol;
        candidates.clear();
        candidates.extend((0..n).filter(|&i| !fixed[i] && key(biases[i]) >= best - tol));
        let chosen = match tie_rng.as_deref_mut() {
            Some(rng) if candidates.len() > 1 => candidates[rng.gen_range(0..candidates.len())],
            _ => candidates[0],
        };
        let value = if biases[chosen] < -zero_tol { -1 } else { 1 };
        s.set(chosen, value);
        fixed[chosen] = true;
        work.condition_in_place(chosen, value);
    }
    s
}
