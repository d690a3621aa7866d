//! Consistency and uniformity of the percolation variables `Y_e` on the
//! `Poss` tree of a far-slab point.

use std::collections::BTreeMap;

use kakeya_core::poss::{beta_map, PossContext};
use kakeya_core::sticky::{EdgeField, KeyedField};
use kakeya_core::{BigRational, Vertex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{sample_seed, tags, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::points::far_point_in_tube;
use crate::record::RunResult;
use crate::stats::{chi_square_p, chi_square_uniform};

/// Significance level of every test in the audit.
pub const ALPHA: f64 = 0.01;

/// `Y_e = 1` iff the field bit at `e` agrees with the digit of `β(t)` at the
/// same height, for each edge on the ray of `t`, keyed by `(height, index)`.
pub fn ray_bits<F: EdgeField>(field: &F, t: &Vertex, beta: &Vertex) -> Vec<((u32, u64), u8)> {
    (1..=t.height)
        .map(|h| {
            let v = t.prefix(h);
            ((h, v.index), (field.vertex_bit(&v) as u64 == beta.prefix(h).index & 1) as u8)
        })
        .collect()
}

/// `Y_e` for every edge of the `Poss` tree, or the number of edges whose
/// value depends on the leaf used to reach it.
pub fn edge_values<F: EdgeField>(field: &F, beta: &[(Vertex, Vertex)]) -> (BTreeMap<(u32, u64), u8>, usize) {
    let mut seen = BTreeMap::new();
    let mut violations = 0;
    for (t, b) in beta {
        for (e, y) in ray_bits(field, t, b) {
            match seen.get(&e) {
                Some(&prev) if prev != y => violations += 1,
                Some(_) => {}
                None => {
                    seen.insert(e, y);
                }
            }
        }
    }
    (seen, violations)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AuditRow {
    pub n: u32,
    pub point: usize,
    pub poss_size: usize,
    pub edges: usize,
    pub fields: usize,
    pub consistency_violations: usize,
    /// Σ over edges of `(count - F/2)² / (F/4)`, χ² with one degree per edge.
    pub frequency_stat: f64,
    pub frequency_p: f64,
    /// Four-cell test on the joint law of two distinct edges.
    pub joint_stat: f64,
    pub joint_p: f64,
    /// Frequency of `Y_e = 1` on an edge below which a single leaf remains.
    pub ray_frequency: f64,
    pub ray_within_3_sigma: bool,
}

/// One audited point per `N`, drawn inside a random tube and retried until
/// `Poss(x)` has at least two roots. `cfg.samples` fields per point.
pub fn percolation_iid_audit(cfg: &ExperimentConfig) -> Result<RunResult<AuditRow, AuditRow>> {
    cfg.validate()?;
    let mut out = RunResult::new("iid-audit", cfg);
    for n in cfg.n_values() {
        let (dirs, params) = cfg.model(n)?;
        let ctx = PossContext::<BigRational>::new(&params, &dirs);
        let point_seed = sample_seed(cfg.seed, tags::AUDIT, n, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
        let mut beta = Vec::new();
        for _ in 0..10_000 {
            let p = far_point_in_tube::<BigRational, _>(&mut rng, &params, &dirs);
            let poss = ctx.poss_definitional(&p)?;
            if poss.len() >= 2 {
                beta = beta_map(&poss)?;
                break;
            }
        }
        if beta.is_empty() {
            return Err(HarnessError::Resource(format!("no point with two Poss roots at N={n}")));
        }
        let per_field: Vec<(BTreeMap<(u32, u64), u8>, usize)> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| edge_values(&KeyedField::new(sample_seed(cfg.seed, tags::AUDIT, n, i as u64 + 1), params.base()), &beta))
            .collect();
        let edges: Vec<(u32, u64)> = per_field[0].0.keys().copied().collect();
        let fields = per_field.len();
        let violations: usize = per_field.iter().map(|f| f.1).sum();

        let ones: Vec<u64> = edges.iter().map(|e| per_field.iter().map(|f| f.0[e] as u64).sum()).collect();
        let half = fields as f64 / 2.0;
        let frequency_stat: f64 = ones.iter().map(|&c| (c as f64 - half).powi(2) / (half / 2.0)).sum();
        let frequency_p = chi_square_p(frequency_stat, edges.len() as f64);

        // the two deepest edges on different rays
        let (e1, e2) = (edges[edges.len() - 1], edges[edges.len() - 2]);
        let mut cells = [0u64; 4];
        for f in &per_field {
            cells[(2 * f.0[&e1] + f.0[&e2]) as usize] += 1;
        }
        let (joint_stat, joint_p) = chi_square_uniform(&cells);

        // an edge whose subtree holds a single leaf: the last edge of any ray
        let ray = (n, beta[0].0.index);
        let ray_ones = per_field.iter().filter(|f| f.0[&ray] == 1).count() as f64;
        let ray_frequency = ray_ones / fields as f64;
        let sigma = (0.25 / fields as f64).sqrt();

        let row = AuditRow {
            n,
            point: 0,
            poss_size: beta.len(),
            edges: edges.len(),
            fields,
            consistency_violations: violations,
            frequency_stat,
            frequency_p,
            joint_stat,
            joint_p,
            ray_frequency,
            ray_within_3_sigma: (ray_frequency - 0.5).abs() <= 3.0 * sigma,
        };
        out.check(&format!("Y_e consistency at N={n}"), violations == 0, format!("{violations} violations over {fields} fields"));
        out.check(
            &format!("Y_e uniformity at N={n}"),
            frequency_p >= ALPHA && joint_p >= ALPHA && row.ray_within_3_sigma,
            format!("frequency p = {frequency_p:.3}, joint p = {joint_p:.3}, ray frequency {ray_frequency:.4}"),
        );
        out.push(point_seed, row.clone());
        out.summary.push(row);
    }
    Ok(out)
}
