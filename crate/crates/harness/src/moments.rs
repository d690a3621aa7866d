//! First and second moments of the slab intersection sum
//! `S_R(σ) = Σ_{t₁≠t₂} |P*_{t₁} ∩ P*_{t₂}|` over `[M^{R-N}, M^{R+1-N}] × R^d`.

use kakeya_core::scalar::{inv_pow, rational_string};
use kakeya_core::sticky::TableField;
use kakeya_core::tube::{intersection_necessary, pair_measure, Tube};
use kakeya_core::{BigRational, Scalar};
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::model::{field_seed, Realization};
use crate::record::RunResult;
use crate::stats::{spread, summarize};

/// Exhaustive enumeration is used when the field has at most this many bits.
pub const EXHAUSTIVE_EDGES: usize = 16;

/// First-axis bounds of the slab for `R = N - gap`.
pub fn slab_bounds<S: Scalar>(m: u32, gap: u32) -> (S, S) {
    let a = inv_pow(m as u64, gap);
    let b = a.clone() * BigRational::from_integer(m.into());
    (S::from_rational(&a), S::from_rational(&b))
}

/// `Σ_{t₁≠t₂} |P_{t₁} ∩ P_{t₂} ∩ [a,b]×R^d|`. Pairs are pruned by their
/// swept extent in the first lateral coordinate, then by the intersection
/// criterion, before the exact pair measure is taken.
pub fn slab_pair_sum(tubes: &[Tube<f64>], a: f64, b: f64, threshold: f64) -> f64 {
    let half = tubes.first().map_or(0.0, |t| t.side * 0.5);
    let mut spans: Vec<(f64, f64, usize)> = tubes
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (p, q) = (t.center[0] + a * t.slope[0], t.center[0] + b * t.slope[0]);
            (p.min(q) - half, p.max(q) + half, i)
        })
        .collect();
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    for (k, &(_, hi, i)) in spans.iter().enumerate() {
        for &(lo2, _, j) in &spans[k + 1..] {
            if lo2 > hi {
                break;
            }
            if intersection_necessary(&tubes[i], &tubes[j], &a, &b, &threshold) {
                total += 2.0 * pair_measure(&tubes[i], &tubes[j], &a, &b);
            }
        }
    }
    total
}

/// The same sum over all ordered pairs in exact arithmetic.
pub fn slab_pair_sum_exact(tubes: &[Tube<BigRational>], a: &BigRational, b: &BigRational) -> BigRational {
    let mut total = BigRational::zero();
    for i in 0..tubes.len() {
        for j in i + 1..tubes.len() {
            total += pair_measure(&tubes[i], &tubes[j], a, b);
        }
    }
    total * BigRational::from_integer(2.into())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SlabSample {
    pub n: u32,
    pub r: u32,
    pub sample: usize,
    pub sum: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SlabRow {
    pub n: u32,
    pub r: u32,
    pub gap: u32,
    pub samples: usize,
    pub mean: f64,
    pub mean_half_width: f64,
    pub mean_sq: f64,
    pub mean_sq_half_width: f64,
    /// `N · M^{2R-2N}`.
    pub scale: f64,
    pub first_ratio: f64,
    pub second_ratio: f64,
    /// Fraction of samples with `S_R ≤ 2 (E S_R²)^{1/2}`; Chebyshev gives ≥ ¾.
    pub chebyshev_frequency: f64,
    pub exact_mean: Option<String>,
    pub exact_mean_sq: Option<String>,
    pub exact_within_ci: Option<bool>,
}

/// Exact first and second moments of `S_R` over every field of depth `n`.
pub fn exhaustive_moments(cfg: &ExperimentConfig, n: u32, gap: u32) -> Result<(BigRational, BigRational)> {
    let (dirs, params) = cfg.model(n)?;
    let edges = TableField::edge_count(params.base(), n);
    assert!(edges <= EXHAUSTIVE_EDGES, "exhaustive enumeration over {edges} bits");
    let (a, b) = slab_bounds::<BigRational>(cfg.m, gap);
    let fields = 1u64 << edges;
    let (s1, s2) = (0..fields)
        .into_par_iter()
        .map(|mask| {
            let real = Realization::from_field(&dirs, &params, &TableField::from_mask(params.base(), n, mask));
            let tubes: Vec<Tube<BigRational>> = real
                .addresses
                .iter()
                .enumerate()
                .map(|(i, &addr)| {
                    let root = kakeya_core::Vertex::from_index(params.base(), n, i as u64);
                    Tube::new(&params, root, &dirs.points[addr as usize])
                })
                .collect();
            let s = slab_pair_sum_exact(&tubes, &a, &b);
            (s.clone(), s.clone() * s)
        })
        .reduce(|| (BigRational::zero(), BigRational::zero()), |x, y| (x.0 + y.0, x.1 + y.1));
    let count = BigRational::from_integer((fields as i64).into());
    Ok((s1 / count.clone(), s2 / count))
}

pub fn slab_moments(cfg: &ExperimentConfig) -> Result<RunResult<SlabSample, SlabRow>> {
    cfg.validate()?;
    let mut out = RunResult::new("slab-moments", cfg);
    for n in cfg.n_values() {
        let (dirs, params) = cfg.model(n)?;
        let gaps = cfg.gaps(n);
        let thr = params.necessary_threshold().as_f64();
        let sums: Vec<(u64, Vec<f64>)> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| {
                let seed = field_seed(cfg, n, i);
                let tubes = Realization::keyed(&dirs, &params, seed).tubes();
                let per_gap = gaps
                    .iter()
                    .map(|&g| {
                        let (a, b) = slab_bounds::<f64>(cfg.m, g);
                        slab_pair_sum(&tubes, a, b, thr)
                    })
                    .collect();
                (seed, per_gap)
            })
            .collect();
        let exhaustive = TableField::edge_count(params.base(), n) <= EXHAUSTIVE_EDGES;
        let mut ratios = (Vec::new(), Vec::new());
        for (gi, &gap) in gaps.iter().enumerate() {
            let r = n - gap;
            let xs: Vec<f64> = sums.iter().map(|s| s.1[gi]).collect();
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            for (i, (seed, _)) in sums.iter().enumerate() {
                out.push(*seed, SlabSample { n, r, sample: i, sum: xs[i] });
            }
            let (s1, s2) = (summarize(&xs), summarize(&sq));
            let scale = n as f64 * (cfg.m as f64).powi(2 * r as i32 - 2 * n as i32);
            let cheb = 2.0 * s2.mean.sqrt();
            let mut row = SlabRow {
                n,
                r,
                gap,
                samples: xs.len(),
                mean: s1.mean,
                mean_half_width: s1.half_width,
                mean_sq: s2.mean,
                mean_sq_half_width: s2.half_width,
                scale,
                first_ratio: s1.mean / scale,
                second_ratio: s2.mean / (scale * scale),
                chebyshev_frequency: xs.iter().filter(|&&x| x <= cheb).count() as f64 / xs.len() as f64,
                exact_mean: None,
                exact_mean_sq: None,
                exact_within_ci: None,
            };
            if exhaustive {
                let (e1, e2) = exhaustive_moments(cfg, n, gap)?;
                let ok1 = (e1.as_f64() - s1.mean).abs() <= s1.half_width + 1e-15;
                let ok2 = (e2.as_f64() - s2.mean).abs() <= s2.half_width + 1e-15;
                row.exact_mean = Some(rational_string(&e1));
                row.exact_mean_sq = Some(rational_string(&e2));
                row.exact_within_ci = Some(ok1 && ok2);
                out.check(
                    &format!("exhaustive moments N={n} R={r}"),
                    ok1 && ok2,
                    format!("exact {:.6e} / {:.6e}, sampled {:.6e} ± {:.1e} / {:.6e} ± {:.1e}", e1.as_f64(), e2.as_f64(), s1.mean, s1.half_width, s2.mean, s2.half_width),
                );
            }
            ratios.0.push(row.first_ratio);
            ratios.1.push(row.second_ratio);
            out.summary.push(row);
        }
        let (f, s) = (spread(&ratios.0), spread(&ratios.1));
        out.check(
            &format!("fitted constants finite and positive N={n}"),
            f.is_finite() && s.is_finite(),
            format!("first-moment spread {f:.3}, second-moment spread {s:.3}"),
        );
    }
    Ok(out)
}
