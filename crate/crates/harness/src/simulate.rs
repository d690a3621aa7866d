//! Near and far volumes of sampled families and their ratio.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{sample_seed, tags, ExperimentConfig};
use crate::error::Result;
use crate::measure::maximal_norm_floor;
use crate::model::{field_seed, volumes, Realization};
use crate::record::RunResult;
use crate::stats::summarize;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KakeyaSample {
    pub n: u32,
    pub sample: usize,
    pub near: f64,
    pub far: f64,
    pub ratio: f64,
    pub near_half_width: f64,
    pub far_half_width: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KakeyaRow {
    pub n: u32,
    pub samples: usize,
    pub mean_near: f64,
    pub mean_far: f64,
    pub mean_ratio: f64,
    pub ratio_half_width: f64,
    pub min_ratio: f64,
    /// `(E ratio)^{1/2}` in units of `c₀`, when the ratio is at least 1.
    pub norm_floor_p2: Option<f64>,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<RunResult<KakeyaSample, KakeyaRow>> {
    cfg.validate()?;
    let mut out = RunResult::new("simulate", cfg);
    for n in cfg.n_values() {
        let (dirs, params) = cfg.model(n)?;
        let rows: Vec<(u64, KakeyaSample)> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| {
                let seed = field_seed(cfg, n, i);
                let v = volumes(&Realization::keyed(&dirs, &params, seed), cfg, sample_seed(cfg.seed, tags::VOLUME_MC, n, i as u64));
                let s = KakeyaSample {
                    n,
                    sample: i,
                    near: v.near,
                    far: v.far,
                    ratio: v.near / v.far,
                    near_half_width: v.near_half_width,
                    far_half_width: v.far_half_width,
                };
                (seed, s)
            })
            .collect();
        let ratios: Vec<f64> = rows.iter().map(|r| r.1.ratio).collect();
        let r = summarize(&ratios);
        out.summary.push(KakeyaRow {
            n,
            samples: rows.len(),
            mean_near: summarize(&rows.iter().map(|r| r.1.near).collect::<Vec<_>>()).mean,
            mean_far: summarize(&rows.iter().map(|r| r.1.far).collect::<Vec<_>>()).mean,
            mean_ratio: r.mean,
            ratio_half_width: r.half_width,
            min_ratio: r.min,
            norm_floor_p2: maximal_norm_floor(r.mean, 2.0, 1.0).ok(),
        });
        out.check(&format!("volumes finite at N={n}"), ratios.iter().all(|x| x.is_finite() && *x > 0.0), "near and far volumes positive");
        for (seed, s) in rows {
            out.push(seed, s);
        }
    }
    Ok(out)
}
