//! Lower and upper volume bounds, resistance growth of `Poss` trees and the
//! far-slab uniqueness audit.

use kakeya_core::percolation::PercTree;
use kakeya_core::poss::{beta_map, PossContext};
use kakeya_core::tree::is_sticky_on_leaves;
use kakeya_core::union::union_volume_exact_1d;
use kakeya_core::sticky::TableField;
use kakeya_core::{BigRational, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{sample_seed, tags, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::model::{field_seed, volumes, Realization};
use crate::points::{far_point, far_point_in_tube, far_region_volume};
use crate::record::RunResult;
use crate::stats::{lower_quartile, regression_slope, spread, summarize};

/// Fields with at most this many bits are enumerated rather than sampled.
pub const EXHAUSTIVE_EDGES: usize = 16;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VolumeSample {
    pub n: u32,
    pub sample: usize,
    pub near: f64,
    pub far: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LowerRow {
    pub n: u32,
    pub samples: usize,
    pub exhaustive: bool,
    pub mean_near: f64,
    /// Largest `q` with `Pr(near ≥ q) ≥ ¾` empirically.
    pub quartile: f64,
    /// `q · N`.
    pub c: f64,
    /// `q · N / √(ln N)`; absent at `N = 1`.
    pub c_log: Option<f64>,
    pub max_near: f64,
}

/// Near and far volumes for every sample (or every field) at depth `n`.
fn near_far(cfg: &ExperimentConfig, n: u32, need_far: bool) -> Result<(bool, Vec<(u64, f64, f64)>)> {
    let (dirs, params) = cfg.model(n)?;
    let edges = TableField::edge_count(params.base(), n);
    if edges <= EXHAUSTIVE_EDGES {
        let rows = (0..1u64 << edges)
            .into_par_iter()
            .map(|mask| {
                let real = Realization::from_field(&dirs, &params, &TableField::from_mask(params.base(), n, mask));
                let fam = real.family();
                let c0 = params.c0 as f64;
                if cfg.d == 1 {
                    let far = if need_far { union_volume_exact_1d(&fam, c0, c0 + 1.0) } else { f64::NAN };
                    (mask, union_volume_exact_1d(&fam, 0.0, 1.0), far)
                } else {
                    let v = volumes(&real, cfg, sample_seed(cfg.seed, tags::VOLUME_MC, n, mask));
                    (mask, v.near, v.far)
                }
            })
            .collect();
        return Ok((true, rows));
    }
    let rows = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let seed = field_seed(cfg, n, i);
            let real = Realization::keyed(&dirs, &params, seed);
            let v = volumes(&real, cfg, sample_seed(cfg.seed, tags::VOLUME_MC, n, i as u64));
            (seed, v.near, v.far)
        })
        .collect();
    Ok((false, rows))
}

pub fn lower_bound_experiment(cfg: &ExperimentConfig) -> Result<RunResult<VolumeSample, LowerRow>> {
    cfg.validate()?;
    if cfg.samples < 100 {
        return Err(HarnessError::Config(format!("{} samples; the quartile needs at least 100", cfg.samples)));
    }
    let mut out = RunResult::new("lower-bound", cfg);
    let mut cs = Vec::new();
    for n in cfg.n_values() {
        let (exhaustive, rows) = near_far(cfg, n, false)?;
        let near: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for (i, r) in rows.iter().enumerate() {
            out.push(r.0, VolumeSample { n, sample: i, near: r.1, far: r.2 });
        }
        let q = lower_quartile(&near);
        let kappa = kakeya_core::tube::kappa(cfg.d).as_f64().powi(cfg.d as i32);
        let max_near = near.iter().copied().fold(0.0, f64::max);
        out.check(&format!("near volume below κ^d at N={n}"), max_near <= kappa * (1.0 + 1e-9), format!("max {max_near:.6} vs {kappa:.6}"));
        let row = LowerRow {
            n,
            samples: near.len(),
            exhaustive,
            mean_near: summarize(&near).mean,
            quartile: q,
            c: q * n as f64,
            c_log: (n > 1).then(|| q * n as f64 / (n as f64).ln().sqrt()),
            max_near,
        };
        cs.push(row.c);
        out.summary.push(row);
    }
    let s = spread(&cs);
    let fitted = cs.iter().copied().fold(f64::INFINITY, f64::min);
    out.check("fitted c finite and positive", fitted.is_finite() && fitted > 0.0, format!("c = {fitted:.4}, spread across N {s:.3}"));
    Ok(out)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct UpperRow {
    pub n: u32,
    pub samples: usize,
    pub mean_far: f64,
    pub far_half_width: f64,
    pub n_times_mean: f64,
    /// `∫ min(1, 2/(1+R(Poss(x)))) dx` over the far region.
    pub bound_integral: f64,
    pub bound_half_width: f64,
    /// `∫ Pr(x ∈ K) dx` from exact survival on each `Poss` tree.
    pub survival_integral: f64,
    pub survival_half_width: f64,
    pub points: usize,
    pub nonempty_fraction: f64,
}

/// Per-point quantities on the `Poss` tree of `x`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct PointStats {
    pub poss_size: usize,
    /// `None` when `Poss(x)` is empty (infinite resistance).
    pub resistance: Option<f64>,
    pub survival: f64,
    pub bound: f64,
}

pub fn point_stats<S: Scalar>(ctx: &PossContext<S>, p: &[S]) -> Result<PointStats> {
    let poss = ctx.poss_definitional(p)?;
    if poss.is_empty() {
        return Ok(PointStats { poss_size: 0, resistance: None, survival: 0.0, bound: 0.0 });
    }
    let tree = PercTree::from_leaves(ctx.params.base(), &poss.leaves())?;
    let r: f64 = tree.resistance()?.expect("every edge of a Poss tree has p = 1/2");
    Ok(PointStats { poss_size: poss.len(), resistance: Some(r), survival: tree.survival_exact(), bound: (2.0 / (1.0 + r)).min(1.0) })
}

pub fn upper_bound_experiment(cfg: &ExperimentConfig) -> Result<RunResult<VolumeSample, UpperRow>> {
    cfg.validate()?;
    let mut out = RunResult::new("upper-bound", cfg);
    let mut scaled = Vec::new();
    for n in cfg.n_values() {
        let (_, rows) = near_far(cfg, n, true)?;
        let far: Vec<f64> = rows.iter().map(|r| r.2).collect();
        for (i, r) in rows.iter().enumerate() {
            out.push(r.0, VolumeSample { n, sample: i, near: r.1, far: r.2 });
        }
        let (dirs, params) = cfg.model(n)?;
        let ctx = PossContext::<f64>::new(&params, &dirs);
        let stats: Vec<PointStats> = (0..cfg.points)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, tags::POINTS, n, i as u64));
                point_stats(&ctx, &far_point::<f64, _>(&mut rng, &params))
            })
            .collect::<Result<_>>()?;
        let vol = far_region_volume(&params);
        let b = summarize(&stats.iter().map(|s| s.bound * vol).collect::<Vec<_>>());
        let s = summarize(&stats.iter().map(|s| s.survival * vol).collect::<Vec<_>>());
        let f = summarize(&far);
        let row = UpperRow {
            n,
            samples: far.len(),
            mean_far: f.mean,
            far_half_width: f.half_width,
            n_times_mean: n as f64 * f.mean,
            bound_integral: b.mean,
            bound_half_width: b.half_width,
            survival_integral: s.mean,
            survival_half_width: s.half_width,
            points: stats.len(),
            nonempty_fraction: stats.iter().filter(|s| s.poss_size > 0).count() as f64 / stats.len().max(1) as f64,
        };
        out.check(
            &format!("direct far volume within the pointwise bound at N={n}"),
            row.mean_far <= row.bound_integral + row.bound_half_width + row.far_half_width,
            format!("{:.5} ± {:.1e} vs {:.5} ± {:.1e}", row.mean_far, row.far_half_width, row.bound_integral, row.bound_half_width),
        );
        out.check(
            &format!("survival integral matches far volume at N={n}"),
            (row.mean_far - row.survival_integral).abs() <= row.far_half_width + row.survival_half_width,
            format!("{:.5} vs {:.5} ± {:.1e}", row.mean_far, row.survival_integral, row.survival_half_width),
        );
        scaled.push(row.n_times_mean);
        out.summary.push(row);
    }
    out.check("N·E|far| spread across N", spread(&scaled).is_finite(), format!("spread {:.3}", spread(&scaled)));
    Ok(out)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResistanceSample {
    pub n: u32,
    pub point: usize,
    pub poss_size: usize,
    pub resistance: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResistanceRow {
    pub n: u32,
    pub points: usize,
    pub draws: usize,
    /// `min_x R(Poss(x)) / N`.
    pub beta: f64,
    pub median_ratio: f64,
    pub mean_poss_size: f64,
}

/// `R(Poss(x))` for uniform far-slab points conditioned on `Poss(x) ≠ ∅`.
pub fn resistance_growth(cfg: &ExperimentConfig) -> Result<RunResult<ResistanceSample, ResistanceRow>> {
    cfg.validate()?;
    let mut out = RunResult::new("resistance-growth", cfg);
    let (mut ns, mut betas) = (Vec::new(), Vec::new());
    for n in cfg.n_values() {
        let (dirs, params) = cfg.model(n)?;
        let ctx = PossContext::<f64>::new(&params, &dirs);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, tags::POINTS, n, u64::MAX));
        let (mut kept, mut draws) = (Vec::new(), 0usize);
        while kept.len() < cfg.points {
            draws += 1;
            if draws > 10_000 * cfg.points.max(1) {
                return Err(HarnessError::Resource(format!("could not find {} nonempty Poss sets at N={n}", cfg.points)));
            }
            let st = point_stats(&ctx, &far_point::<f64, _>(&mut rng, &params))?;
            if let Some(r) = st.resistance {
                out.push(draws as u64, ResistanceSample { n, point: kept.len(), poss_size: st.poss_size, resistance: r });
                kept.push((r, st.poss_size));
            }
        }
        let mut ratios: Vec<f64> = kept.iter().map(|k| k.0 / n as f64).collect();
        ratios.sort_by(f64::total_cmp);
        let row = ResistanceRow {
            n,
            points: kept.len(),
            draws,
            beta: ratios[0],
            median_ratio: ratios[ratios.len() / 2],
            mean_poss_size: kept.iter().map(|k| k.1 as f64).sum::<f64>() / kept.len() as f64,
        };
        ns.push(n as f64);
        betas.push(row.beta);
        out.summary.push(row);
    }
    let positive = betas.iter().all(|&b| b > 0.0 && b.is_finite());
    out.check("fitted β positive", positive, format!("β = {betas:?}"));
    if ns.len() >= 3 {
        let (slope, se) = regression_slope(&ns, &betas);
        out.check("β non-decreasing within noise", slope >= -2.0 * se, format!("slope {slope:.4} ± {se:.4}"));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PossAuditSample {
    pub n: u32,
    pub point: usize,
    pub targeted: bool,
    pub poss_size: usize,
    pub multiple_witnesses: usize,
    pub sticky: bool,
    pub dual_agree: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PossAuditRow {
    pub n: u32,
    pub points: usize,
    pub nonempty: usize,
    pub witness_violations: usize,
    pub sticky_violations: usize,
    pub dual_disagreements: usize,
}

/// In exact arithmetic: every root of `Poss(x)` has one witness slope, `β`
/// is sticky, and the two `Poss` computations agree. Half of the points are
/// uniform in the far region, half are drawn inside a random tube.
pub fn poss_audit(cfg: &ExperimentConfig) -> Result<RunResult<PossAuditSample, PossAuditRow>> {
    cfg.validate()?;
    let mut out = RunResult::new("poss-audit", cfg);
    for n in cfg.n_values() {
        let (dirs, params) = cfg.model(n)?;
        let ctx = PossContext::<BigRational>::new(&params, &dirs);
        let samples: Vec<(u64, PossAuditSample)> = (0..cfg.points)
            .into_par_iter()
            .map(|i| {
                let seed = sample_seed(cfg.seed, tags::POINTS, n, i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let targeted = i % 2 == 1;
                let p = if targeted { far_point_in_tube(&mut rng, &params, &dirs) } else { far_point(&mut rng, &params) };
                let a = ctx.poss_definitional(&p)?;
                let b = ctx.poss_affine(&p)?;
                let multiple = a.entries.iter().filter(|e| e.witnesses.len() != 1).count();
                let sticky = multiple == 0 && is_sticky_on_leaves(&beta_map(&a)?);
                Ok((seed, PossAuditSample { n, point: i, targeted, poss_size: a.len(), multiple_witnesses: multiple, sticky, dual_agree: a == b }))
            })
            .collect::<Result<_>>()?;
        let row = PossAuditRow {
            n,
            points: samples.len(),
            nonempty: samples.iter().filter(|s| s.1.poss_size > 0).count(),
            witness_violations: samples.iter().map(|s| s.1.multiple_witnesses).sum(),
            sticky_violations: samples.iter().filter(|s| !s.1.sticky).count(),
            dual_disagreements: samples.iter().filter(|s| !s.1.dual_agree).count(),
        };
        out.check(
            &format!("far-slab uniqueness and stickiness at N={n}"),
            row.witness_violations == 0 && row.sticky_violations == 0,
            format!("{} witness, {} stickiness violations over {} points ({} nonempty)", row.witness_violations, row.sticky_violations, row.points, row.nonempty),
        );
        out.check(&format!("Poss dual agreement at N={n}"), row.dual_disagreements == 0, format!("{} disagreements", row.dual_disagreements));
        for (seed, s) in samples {
            out.push(seed, s);
        }
        out.summary.push(row);
    }
    Ok(out)
}
