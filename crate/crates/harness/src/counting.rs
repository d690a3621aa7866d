//! Cardinalities of the deterministic index sets that organize the slab
//! estimates, with the constants implicit in their bounds made explicit.
//!
//! Distances are measured in units of the root cube side `M^{-N}`. Two roots
//! `t₁, t₂` with `D(t₁, t₂) = u` can only carry meeting tubes in `Z_k` if
//! their centers are within `δ_u(k) = (k+1) C M^{-h(u)} + 2κ√d`, where `C`
//! is the upper Lipschitz constant of the direction curve. This defines
//! `B_{t₁}(k)`, and `A_u(k)` is the set of `t₁` for which it is nonempty.

use kakeya_core::cantor::DirectionSet;
use kakeya_core::sticky::sticky_admissible;
use kakeya_core::tree::{pow_u64, vertex_to_lattice, yca, yca_height};
use kakeya_core::tube::{intersection_necessary, Tube, TubeParams};
use kakeya_core::{Scalar, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{sample_seed, tags, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::record::RunResult;
use crate::stats::spread;

/// Largest `N` accepted by the diagnostics.
pub const MAX_DEPTH: u32 = 6;

pub struct CountingContext<'a> {
    pub params: &'a TubeParams,
    pub dirs: &'a DirectionSet,
    /// `Z_k = [k M^{-N}, (k+1) M^{-N}]`.
    pub k: u64,
}

impl<'a> CountingContext<'a> {
    fn cell(&self) -> f64 {
        self.params.cell().as_f64()
    }

    /// `δ_u(k)` in units of `M^{-N}`.
    pub fn delta(&self, u: &Vertex) -> f64 {
        let m = self.params.m as f64;
        (self.k + 1) as f64 * self.dirs.c_upper * m.powi(-(u.height as i32))
            + 2.0 * self.params.kappa_f64 * (self.params.d as f64).sqrt()
    }

    fn leaf(&self, i: u64) -> Vertex {
        Vertex::from_index(self.params.base(), self.params.n, i)
    }

    /// Leaves below `u`.
    pub fn leaves_below(&self, u: &Vertex) -> Vec<Vertex> {
        let span = pow_u64(self.params.base() as u64, self.params.n - u.height);
        (u.index * span..(u.index + 1) * span).map(|i| self.leaf(i)).collect()
    }

    fn dist(&self, a: &Vertex, b: &Vertex) -> f64 {
        let (p, q) = (vertex_to_lattice(a, self.params.m, self.params.d), vertex_to_lattice(b, self.params.m, self.params.d));
        p.iter().zip(&q).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>().sqrt()
    }

    /// `B_{t₁}(k)` relative to `u = D(t₁, ·)`.
    pub fn b_set(&self, u: &Vertex, t1: &Vertex) -> Vec<Vertex> {
        let delta = self.delta(u);
        self.leaves_below(u)
            .into_iter()
            .filter(|t2| yca(t1, t2) == *u && self.dist(t1, t2) <= delta + 1e-9)
            .collect()
    }

    /// `A_u(k)`.
    pub fn a_set(&self, u: &Vertex) -> Vec<Vertex> {
        let leaves = self.leaves_below(u);
        let delta = self.delta(u);
        leaves
            .iter()
            .filter(|t1| leaves.iter().any(|t2| yca(t1, t2) == *u && self.dist(t1, t2) <= delta + 1e-9))
            .copied()
            .collect()
    }

    fn slab(&self) -> (f64, f64) {
        let c = self.cell();
        (self.k as f64 * c, (self.k + 1) as f64 * c)
    }

    fn tube(&self, t: &Vertex, addr: u64) -> Tube<f64> {
        Tube::new(self.params, *t, &self.dirs.points[addr as usize])
    }

    /// Whether the closed tubes `P_{t₁,v₁}` and `P_{t₂,v₂}` meet in `Z_k`.
    pub fn meet(&self, t1: &Vertex, a1: u64, t2: &Vertex, a2: u64) -> bool {
        let (a, b) = self.slab();
        let (p, q) = (self.tube(t1, a1), self.tube(t2, a2));
        let side = p.side;
        intersection_necessary(&p, &q, &a, &b, &side)
    }

    fn binary(&self, a: u64) -> Vertex {
        Vertex::from_index(2, self.params.n, a)
    }

    /// `E_u(t₁, v₁; k)` for the slope with binary address `a1`.
    pub fn e_set(&self, u: &Vertex, t1: &Vertex, a1: u64) -> Vec<(Vertex, u64)> {
        let mut out = Vec::new();
        for t2 in self.b_set(u, t1) {
            for a2 in 0..self.dirs.len() as u64 {
                if yca_height(&self.binary(a1), &self.binary(a2)) >= u.height && self.meet(t1, a1, &t2, a2) {
                    out.push((t2, a2));
                }
            }
        }
        out
    }

    /// `#E*` for fixed `t₂, t₂'` (with `u₂ = D(t₂, t₂') ⊊ u`), slopes `α₂, α₂'`
    /// and an intermediate vertex `u₁`.
    pub fn e_star_count(&self, u: &Vertex, u1: &Vertex, t2: (&Vertex, u64), t2p: (&Vertex, u64)) -> usize {
        let side = |t: &Vertex, a: u64| -> Vec<(Vertex, u64)> {
            self.leaves_below(u1)
                .into_iter()
                .filter(|t1| yca(t1, t) == *u)
                .flat_map(|t1| (0..self.dirs.len() as u64).map(move |a1| (t1, a1)))
                .filter(|(t1, a1)| {
                    yca_height(&self.binary(*a1), &self.binary(a)) >= u.height && self.meet(t1, *a1, t, a)
                })
                .collect()
        };
        let (l1, l2) = (side(t2.0, t2.1), side(t2p.0, t2p.1));
        let mut count = 0;
        for (t1, a1) in &l1 {
            for (t1p, a1p) in &l2 {
                if yca(t1, t1p) != *u1 {
                    continue;
                }
                let pairs = [
                    (*t1, self.binary(*a1)),
                    (*t2.0, self.binary(t2.1)),
                    (*t1p, self.binary(*a1p)),
                    (*t2p.0, self.binary(t2p.1)),
                ];
                if sticky_admissible(&pairs) {
                    count += 1;
                }
            }
        }
        count
    }
}

/// `#A_u` for `d = 1` from the position of each root inside its child:
/// the nearest root of another child is across the nearer inner face.
pub fn a_count_1d(m: u32, n: u32, h: u32, delta: f64) -> usize {
    let per_child = pow_u64(m as u64, n - h - 1);
    let mut count = 0;
    for c in 0..m as u64 {
        for j in 0..per_child {
            let left = if c > 0 { Some((j + 1) as f64) } else { None };
            let right = if c + 1 < m as u64 { Some((per_child - j) as f64) } else { None };
            let nearest = left.into_iter().chain(right).fold(f64::INFINITY, f64::min);
            if nearest <= delta + 1e-9 {
                count += 1;
            }
        }
    }
    count
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CountingRow {
    pub n: u32,
    pub r: u32,
    pub k: u64,
    pub h_u: u32,
    pub vertices: usize,
    pub max_a: usize,
    /// `(k / M^N) M^{d(N - h(u))}`.
    pub a_bound: f64,
    pub a_constant: f64,
    pub max_e: usize,
    /// `2^{N - h(u)}`.
    pub e_bound: f64,
    pub e_constant: f64,
    pub max_e_star: usize,
    pub e_star_constant: f64,
}

/// Vertices sampled per height for the `E` and `E*` counts.
const PER_HEIGHT: usize = 3;

pub fn counting_diagnostics(cfg: &ExperimentConfig) -> Result<RunResult<CountingRow, CountingRow>> {
    cfg.validate()?;
    if cfg.n_max > MAX_DEPTH {
        return Err(HarnessError::Resource(format!("counting diagnostics need N ≤ {MAX_DEPTH}")));
    }
    let mut out = RunResult::new("counting", cfg);
    for n in cfg.n_values() {
        let (dirs, params) = cfg.model(n)?;
        let base = params.base();
        for gap in cfg.gaps(n) {
            let r = n - gap;
            let k = pow_u64(cfg.m as u64, r);
            let ctx = CountingContext { params: &params, dirs: &dirs, k };
            let mut consts = Vec::new();
            for h in 0..n {
                let seed = sample_seed(cfg.seed, tags::COUNTING, n, ((gap as u64) << 32) | h as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let count = pow_u64(base as u64, h);
                let us: Vec<Vertex> = (0..count).map(|i| Vertex::from_index(base, h, i)).collect();
                let max_a = us.iter().map(|u| ctx.a_set(u).len()).max().unwrap_or(0);
                let a_bound = k as f64 / (cfg.m as f64).powi(n as i32) * (cfg.m as f64).powi((cfg.d as u32 * (n - h)) as i32);
                let (mut max_e, mut max_star, mut star_const) = (0usize, 0usize, 0f64);
                for _ in 0..PER_HEIGHT {
                    let u = us[rng.gen_range(0..us.len())];
                    let a = ctx.a_set(&u);
                    if let Some(t1) = a.first() {
                        for a1 in 0..dirs.len() as u64 {
                            max_e = max_e.max(ctx.e_set(&u, t1, a1).len());
                        }
                    }
                    // E*: t₂, t₂' in one child of u, u₁ between u and u₂
                    if h + 1 < n {
                        let leaves = ctx.leaves_below(&u);
                        let t2 = leaves[rng.gen_range(0..leaves.len())];
                        let child = t2.prefix(h + 1);
                        let siblings = ctx.leaves_below(&child);
                        let t2p = siblings[rng.gen_range(0..siblings.len())];
                        if t2p == t2 {
                            continue;
                        }
                        let u2 = yca(&t2, &t2p);
                        let h1 = rng.gen_range(h..=u2.height);
                        let u1 = leaves[rng.gen_range(0..leaves.len())].prefix(h1);
                        let a2 = rng.gen_range(0..dirs.len() as u64);
                        let keep = n - u2.height;
                        let a2p = (a2 >> keep << keep) | rng.gen_range(0..1u64 << keep);
                        let c = ctx.e_star_count(&u, &u1, (&t2, a2), (&t2p, a2p));
                        max_star = max_star.max(c);
                        star_const = star_const.max(c as f64 / 2f64.powi(2 * n as i32 - h as i32 - h1 as i32));
                    }
                }
                let e_bound = 2f64.powi((n - h) as i32);
                let row = CountingRow {
                    n,
                    r,
                    k,
                    h_u: h,
                    vertices: us.len(),
                    max_a,
                    a_bound,
                    a_constant: max_a as f64 / a_bound,
                    max_e,
                    e_bound,
                    e_constant: max_e as f64 / e_bound,
                    max_e_star: max_star,
                    e_star_constant: star_const,
                };
                if row.a_constant > 0.0 {
                    consts.push(row.a_constant);
                }
                out.push(seed, row.clone());
                out.summary.push(row);
            }
            out.check(
                &format!("A_u constants finite at N={n} R={r}"),
                consts.iter().all(|c| c.is_finite()),
                format!("spread across heights {:.3}", spread(&consts)),
            );
        }
    }
    Ok(out)
}
