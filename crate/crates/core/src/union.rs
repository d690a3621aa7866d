//! Volumes of unions of tubes, integrated slab by slab from exact (d ≤ 2)
//! or Monte Carlo (d ≥ 3) cross-section areas.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::DirectionSet;
use crate::scalar::Scalar;
use crate::tree::{vertex_to_lattice, Vertex};
use crate::tube::TubeParams;

/// A tube family in flat `f64` form: one center and one slope per tube.
#[derive(Clone, Debug)]
pub struct TubeFamily {
    pub d: usize,
    pub side: f64,
    pub centers: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl TubeFamily {
    /// One tube per leaf of the position tree; `addresses[i]` is the binary
    /// slope address of leaf `i`.
    pub fn from_addresses(params: &TubeParams, dirs: &DirectionSet, addresses: &[u64]) -> Self {
        let d = params.d;
        let cell = Scalar::as_f64(&params.cell());
        let mut centers = Vec::with_capacity(addresses.len() * d);
        let mut slopes = Vec::with_capacity(addresses.len() * d);
        for (i, &a) in addresses.iter().enumerate() {
            let v = Vertex::from_index(params.base(), params.n, i as u64);
            for j in vertex_to_lattice(&v, params.m, d) {
                centers.push((j as f64 + 0.5) * cell);
            }
            slopes.extend_from_slice(&dirs.points[a as usize].slope_f64);
        }
        TubeFamily { d, side: Scalar::as_f64(&params.side()), centers, slopes }
    }

    pub fn len(&self) -> usize {
        self.centers.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Cross-section centers at first coordinate `x`.
    pub fn positions(&self, x: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.centers.iter().zip(&self.slopes).map(|(c, v)| c + x * v));
    }
}

/// Length of a union of intervals `[c - w/2, c + w/2]` given sorted centers.
pub fn union_length_sorted(sorted: impl Iterator<Item = f64>, w: f64) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for c in sorted {
        total += match prev {
            None => w,
            Some(p) => (c - p).min(w),
        };
        prev = Some(c);
    }
    total
}

/// Keeps the tube order from the previous cross-section; consecutive
/// cross-sections are nearly sorted, so insertion sort is close to linear.
struct Sweep1 {
    order: Vec<u32>,
    keys: Vec<f64>,
}

impl Sweep1 {
    fn new(n: usize) -> Self {
        Sweep1 { order: (0..n as u32).collect(), keys: Vec::with_capacity(n) }
    }

    fn length(&mut self, fam: &TubeFamily, x: f64) -> f64 {
        fam.positions(x, &mut self.keys);
        let keys = &self.keys;
        let ord = &mut self.order;
        for i in 1..ord.len() {
            let cur = ord[i];
            let kc = keys[cur as usize];
            let mut j = i;
            while j > 0 && keys[ord[j - 1] as usize] > kc {
                ord[j] = ord[j - 1];
                j -= 1;
            }
            ord[j] = cur;
        }
        union_length_sorted(ord.iter().map(|&i| keys[i as usize]), fam.side)
    }
}

/// Area of a union of axis-parallel squares of side `w` centered at the
/// given points (sweep line with a segment tree over compressed `y`).
pub fn union_area_squares(centers: &[(f64, f64)], w: f64) -> f64 {
    if centers.is_empty() {
        return 0.0;
    }
    let h = w / 2.0;
    let mut ys: Vec<f64> = centers.iter().flat_map(|&(_, y)| [y - h, y + h]).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let mut events: Vec<(f64, i32, f64, f64)> = Vec::with_capacity(2 * centers.len());
    for &(x, y) in centers {
        events.push((x - h, 1, y - h, y + h));
        events.push((x + h, -1, y - h, y + h));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
    let mut tree = SegTree::new(&ys);
    let mut area = 0.0;
    let mut last_x = events[0].0;
    for (x, kind, y0, y1) in events {
        area += tree.covered() * (x - last_x);
        last_x = x;
        let l = ys.partition_point(|&v| v < y0);
        let r = ys.partition_point(|&v| v < y1);
        tree.update(1, 0, ys.len() - 1, l, r, kind);
    }
    area
}

struct SegTree<'a> {
    ys: &'a [f64],
    count: Vec<i32>,
    len: Vec<f64>,
}

impl<'a> SegTree<'a> {
    fn new(ys: &'a [f64]) -> Self {
        let n = ys.len().max(2);
        SegTree { ys, count: vec![0; 4 * n], len: vec![0.0; 4 * n] }
    }

    fn covered(&self) -> f64 {
        self.len[1]
    }

    // node covers elementary intervals [lo, hi) of ys
    fn update(&mut self, node: usize, lo: usize, hi: usize, l: usize, r: usize, delta: i32) {
        if r <= lo || hi <= l || lo >= hi {
            return;
        }
        if l <= lo && hi <= r {
            self.count[node] += delta;
        } else {
            let mid = (lo + hi) / 2;
            self.update(2 * node, lo, mid, l, r, delta);
            self.update(2 * node + 1, mid, hi, l, r, delta);
        }
        self.len[node] = if self.count[node] > 0 {
            self.ys[hi] - self.ys[lo]
        } else if hi - lo == 1 {
            0.0
        } else {
            self.len[2 * node] + self.len[2 * node + 1]
        };
    }
}

/// Monte Carlo volume of a union of `d`-cubes of side `w`; returns the
/// estimate and a 99% Hoeffding half width.
pub fn union_volume_cubes_mc(centers: &[f64], d: usize, w: f64, samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = centers.len() / d;
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for t in 0..n {
        for i in 0..d {
            lo[i] = lo[i].min(centers[t * d + i] - w / 2.0);
            hi[i] = hi[i].max(centers[t * d + i] + w / 2.0);
        }
    }
    let cell = |p: &[f64]| -> Vec<i64> { p.iter().zip(&lo).map(|(x, l)| ((x - l) / w).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for t in 0..n {
        let corner: Vec<f64> = (0..d).map(|i| centers[t * d + i] - w / 2.0).collect();
        grid.entry(cell(&corner)).or_default().push(t);
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let mut hits = 0usize;
    let mut p = vec![0.0; d];
    for _ in 0..samples {
        for i in 0..d {
            p[i] = rng.gen_range(lo[i]..hi[i]);
        }
        let base = cell(&p);
        // a cube containing p has its corner cell within one step below p's cell
        let mut found = false;
        'nb: for off in 0..(1usize << d) {
            let key: Vec<i64> = base.iter().enumerate().map(|(i, c)| c - ((off >> i) & 1) as i64).collect();
            if let Some(list) = grid.get(&key) {
                for &t in list {
                    if (0..d).all(|i| (p[i] - centers[t * d + i]).abs() <= w / 2.0) {
                        found = true;
                        break 'nb;
                    }
                }
            }
        }
        hits += found as usize;
    }
    let est = box_vol * hits as f64 / samples as f64;
    let hw = box_vol * ((2.0f64 / 0.01).ln() / (2.0 * samples as f64)).sqrt();
    (est, hw)
}

/// Options for [`union_volume`].
#[derive(Clone, Copy, Debug)]
pub struct VolumeOptions {
    /// Midpoint samples per slab.
    pub samples_per_slab: usize,
    /// Monte Carlo points per cross-section when `d ≥ 3`.
    pub mc_points: usize,
    pub seed: u64,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions { samples_per_slab: 4, mc_points: 4096, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    /// Zero when cross-sections are exact (d ≤ 2).
    pub half_width: f64,
    pub per_slab: Vec<f64>,
}

/// `∫_a^b area(⋃ cross-sections(x)) dx` with `samples_per_slab` midpoints in
/// each slab of width `slab`.
pub fn union_volume(fam: &TubeFamily, a: f64, b: f64, slab: f64, opts: VolumeOptions) -> VolumeEstimate {
    assert!(opts.samples_per_slab >= 1, "need at least one sample per slab");
    let slabs = ((b - a) / slab).round().max(1.0) as usize;
    let s = opts.samples_per_slab;
    let dx = slab / s as f64;
    let mut per_slab = Vec::with_capacity(slabs);
    let mut half_width = 0.0;
    let mut sweep = Sweep1::new(fam.len());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pos = Vec::new();
    for k in 0..slabs {
        let mut acc = 0.0;
        for j in 0..s {
            let x = a + k as f64 * slab + (j as f64 + 0.5) * dx;
            let area = match fam.d {
                1 => sweep.length(fam, x),
                2 => {
                    fam.positions(x, &mut pos);
                    let pts: Vec<(f64, f64)> = pos.chunks(2).map(|c| (c[0], c[1])).collect();
                    union_area_squares(&pts, fam.side)
                }
                d => {
                    fam.positions(x, &mut pos);
                    let (est, hw) = union_volume_cubes_mc(&pos, d, fam.side, opts.mc_points, &mut rng);
                    half_width += hw * dx;
                    est
                }
            };
            acc += area * dx;
        }
        per_slab.push(acc);
    }
    VolumeEstimate { volume: per_slab.iter().sum(), half_width, per_slab }
}

/// Exact union volume for `d = 1` by locating every crossing of interval
/// endpoints; the union length is linear between consecutive crossings.
/// Quadratic in the family size; meant as a small-case oracle.
pub fn union_volume_exact_1d(fam: &TubeFamily, a: f64, b: f64) -> f64 {
    assert_eq!(fam.d, 1);
    let n = fam.len();
    let w = fam.side;
    let mut xs = vec![a, b];
    for i in 0..n {
        for j in i + 1..n {
            let dv = fam.slopes[i] - fam.slopes[j];
            if dv == 0.0 {
                continue;
            }
            for off in [-w, 0.0, w] {
                let x = (fam.centers[j] - fam.centers[i] + off) / dv;
                if x > a && x < b {
                    xs.push(x);
                }
            }
        }
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut total = 0.0;
    let mut pos = Vec::new();
    for seg in xs.windows(2) {
        let mid = 0.5 * (seg[0] + seg[1]);
        fam.positions(mid, &mut pos);
        pos.sort_by(|p, q| p.partial_cmp(q).unwrap());
        total += union_length_sorted(pos.iter().copied(), w) * (seg[1] - seg[0]);
    }
    total
}

/// Near and far volumes of the union of a tube family and their ratio.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KakeyaMeasures {
    pub near: f64,
    pub far: f64,
    pub ratio: f64,
    pub near_half_width: f64,
    pub far_half_width: f64,
}

pub fn kakeya_measures(fam: &TubeFamily, params: &TubeParams, opts: VolumeOptions) -> KakeyaMeasures {
    let slab = Scalar::as_f64(&params.cell());
    let c0 = params.c0 as f64;
    let near = union_volume(fam, 0.0, 1.0, slab, opts);
    let far = union_volume(fam, c0, c0 + 1.0, slab, opts);
    KakeyaMeasures {
        near: near.volume,
        far: far.volume,
        ratio: near.volume / far.volume,
        near_half_width: near.half_width,
        far_half_width: far.half_width,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_union_simple_cases() {
        assert!((union_area_squares(&[(0.0, 0.0)], 1.0) - 1.0).abs() < 1e-12);
        assert!((union_area_squares(&[(0.0, 0.0), (0.5, 0.0)], 1.0) - 1.5).abs() < 1e-12);
        assert!((union_area_squares(&[(0.0, 0.0), (0.5, 0.5)], 1.0) - 1.75).abs() < 1e-12);
        assert!((union_area_squares(&[(0.0, 0.0), (3.0, 3.0)], 1.0) - 2.0).abs() < 1e-12);
        assert!((union_area_squares(&[(0.0, 0.0), (0.0, 0.0)], 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_union() {
        assert!((union_length_sorted([0.0, 0.5, 3.0].into_iter(), 1.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn mc_cube_union_brackets_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let centers = [0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 5.0, 5.0, 5.0];
        let (est, hw) = union_volume_cubes_mc(&centers, 3, 1.0, 20_000, &mut rng);
        assert!((est - 2.5).abs() <= hw, "{est} ± {hw}");
    }
}
