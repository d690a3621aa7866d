//! The union lower bound `μ(⋃A_i) ≥ α²n²/(16L)` and the maximal-operator
//! floor implied by a measured volume ratio.

use kakeya_core::Scalar;

use crate::error::{HarnessError, Result};

/// `α² n² / (16 L)` for sets of common measure `α` with
/// `Σ_{i,j} μ(A_i ∩ A_j) ≤ L`. Floating measures are compared with relative
/// tolerance `1e-9`, exact ones exactly.
pub fn measure_union_bound<S: Scalar>(measures: &[S], l: &S) -> Result<S> {
    let alpha = measures.first().ok_or_else(|| HarnessError::Config("no sets".into()))?;
    for m in measures {
        let equal = if S::is_exact() {
            m == alpha
        } else {
            (m.clone() - alpha.clone()).abs().as_f64() <= 1e-9 * alpha.abs().as_f64()
        };
        if !equal {
            return Err(HarnessError::Config(format!("measures differ: {alpha:?} and {m:?}")));
        }
    }
    if *l <= S::zero() {
        return Err(HarnessError::Config("L must be positive".into()));
    }
    let n = S::from_int(measures.len() as i64);
    Ok(alpha.clone() * alpha.clone() * n.clone() * n / (S::from_int(16) * l.clone()))
}

/// Measure of a union of intervals `[a, b]`.
pub fn interval_union<S: Scalar>(intervals: &[(S, S)]) -> S {
    let mut v: Vec<(S, S)> = intervals.to_vec();
    v.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("comparable endpoints"));
    let mut total = S::zero();
    let mut cur: Option<(S, S)> = None;
    for (a, b) in v {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, S::max_of(cb, b))),
            Some((ca, cb)) => {
                total = total + (cb - ca);
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((a, b)) = cur {
        total = total + (b - a);
    }
    total
}

/// `Σ_{i,j} |I_i ∩ I_j|` over all ordered pairs, diagonal included.
pub fn interval_pair_sum<S: Scalar>(intervals: &[(S, S)]) -> S {
    let mut total = S::zero();
    for (a1, b1) in intervals {
        for (a2, b2) in intervals {
            let lo = S::max_of(a1.clone(), a2.clone());
            let hi = S::min_of(b1.clone(), b2.clone());
            if hi > lo {
                total = total + (hi - lo);
            }
        }
    }
    total
}

/// `c₀ · ratio^{1/p}`.
pub fn maximal_norm_floor(ratio: f64, p: f64, c0: f64) -> Result<f64> {
    if !(ratio >= 1.0) {
        return Err(HarnessError::Config(format!("ratio {ratio} below 1")));
    }
    if !(p >= 1.0) {
        return Err(HarnessError::Config(format!("exponent p = {p} below 1")));
    }
    Ok(c0 * ratio.powf(1.0 / p))
}
