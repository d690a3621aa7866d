//! `Poss(p)`: the root cubes from which some admissible tube reaches a point.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::cantor::DirectionSet;
use crate::error::{KakeyaError, Result};
use crate::scalar::Scalar;
use crate::tree::{count_level_vertices, lattice_to_vertex, pow_u64, Vertex};
use crate::tube::TubeParams;

/// Everything needed to evaluate `Poss` in a given scalar type.
pub struct PossContext<S: Scalar> {
    pub params: TubeParams,
    slopes: Vec<Vec<S>>,
    half_side: S,
    scale: S,
    cell: S,
    length: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PossEntry {
    pub leaf: Vertex,
    /// Binary addresses of the slopes `v` with `p ∈ P_{leaf,v}`.
    pub witnesses: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PossSet<S: Scalar> {
    pub point: Vec<S>,
    pub entries: Vec<PossEntry>,
}

impl<S: Scalar> PossSet<S> {
    pub fn leaves(&self) -> Vec<Vertex> {
        self.entries.iter().map(|e| e.leaf).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<S: Scalar> PossContext<S> {
    pub fn new(params: &TubeParams, dirs: &DirectionSet) -> Self {
        let cell: BigRational = params.cell();
        PossContext {
            params: params.clone(),
            slopes: dirs.points.iter().map(|p| p.slope.iter().map(S::from_rational).collect()).collect(),
            half_side: S::from_rational(&params.side()) * S::half(),
            scale: S::from_rational(&(BigRational::from_integer(1.into()) / cell.clone())),
            cell: S::from_rational(&cell),
            length: S::from_int(params.length() as i64),
        }
    }

    fn check_point(&self, p: &[S]) -> Result<()> {
        if p.len() != self.params.d + 1 {
            return Err(KakeyaError::Domain(format!("point has {} coordinates, need {}", p.len(), self.params.d + 1)));
        }
        if p[0] < S::zero() || p[0] > self.length {
            return Err(KakeyaError::Domain(format!("p1 = {:?} outside [0, {}]", p[0], self.params.length())));
        }
        Ok(())
    }

    /// `p̄ - p₁ v̄` for the slope with binary address `b`.
    pub fn base_point(&self, p: &[S], b: usize) -> Vec<S> {
        p[1..].iter().zip(&self.slopes[b]).map(|(y, v)| y.clone() - p[0].clone() * v.clone()).collect()
    }

    fn in_shrunk(&self, y: &[S], j: &[i64]) -> bool {
        y.iter().zip(j).all(|(yi, &ji)| {
            let c = (S::from_int(ji) + S::half()) * self.cell.clone();
            (yi.clone() - c).abs() <= self.half_side
        })
    }

    /// Scan every slope, locate the root cube under `p - p₁v` and test
    /// membership in its shrunk copy.
    pub fn poss_definitional(&self, p: &[S]) -> Result<PossSet<S>> {
        self.check_point(p)?;
        let m = self.params.m;
        let top = pow_u64(m as u64, self.params.n) as i64;
        let mut found: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for b in 0..self.slopes.len() {
            let y = self.base_point(p, b);
            let j: Vec<i64> = y.iter().map(|yi| (yi.clone() * self.scale.clone()).floor_i64()).collect();
            if j.iter().any(|&ji| ji < 0 || ji >= top) {
                continue;
            }
            if self.in_shrunk(&y, &j) {
                let ju: Vec<u64> = j.iter().map(|&x| x as u64).collect();
                found.entry(lattice_to_vertex(&ju, self.params.n, m).index).or_default().push(b as u64);
            }
        }
        Ok(self.collect(p, found))
    }

    /// Descend the M-adic cube tree carrying the points of the affine copy
    /// `p̄ - p₁Ω̄_N` that lie in each closed cube; at the leaves keep the
    /// shrunk-cube hits.
    pub fn poss_affine(&self, p: &[S]) -> Result<PossSet<S>> {
        self.check_point(p)?;
        let d = self.params.d;
        let pts: Vec<Vec<S>> = (0..self.slopes.len()).map(|b| self.base_point(p, b)).collect();
        let inside: Vec<usize> = (0..pts.len())
            .filter(|&b| pts[b].iter().all(|y| *y >= S::zero() && *y <= S::one()))
            .collect();
        let mut found: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        self.descend(&pts, inside, vec![0; d], 0, &mut found);
        for w in found.values_mut() {
            w.sort_unstable();
            w.dedup();
        }
        Ok(self.collect(p, found))
    }

    fn descend(&self, pts: &[Vec<S>], cand: Vec<usize>, corner: Vec<i64>, level: u32, out: &mut BTreeMap<u64, Vec<u64>>) {
        if cand.is_empty() {
            return;
        }
        let m = self.params.m as i64;
        if level == self.params.n {
            for b in cand {
                if self.in_shrunk(&pts[b], &corner) {
                    let ju: Vec<u64> = corner.iter().map(|&x| x as u64).collect();
                    out.entry(lattice_to_vertex(&ju, self.params.n, self.params.m).index).or_default().push(b as u64);
                }
            }
            return;
        }
        let d = corner.len();
        let scale = S::powi(&S::from_int(m), level as i32 + 1);
        // child cubes meeting each point (two per axis when on a shared face)
        let mut buckets: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for b in cand {
            let mut options: Vec<Vec<i64>> = vec![Vec::with_capacity(d)];
            for i in 0..d {
                let t = pts[b][i].clone() * scale.clone();
                let f = t.floor_i64();
                let lo = corner[i] * m;
                let mut axis = Vec::with_capacity(2);
                for c in [f - 1, f] {
                    let on_face = c == f - 1 && S::from_int(f) == t;
                    if (c == f || on_face) && c >= lo && c < lo + m {
                        axis.push(c);
                    }
                }
                options = options
                    .into_iter()
                    .flat_map(|o| {
                        axis.iter().map(move |&c| {
                            let mut o2 = o.clone();
                            o2.push(c);
                            o2
                        })
                    })
                    .collect();
            }
            for o in options {
                buckets.entry(o).or_default().push(b);
            }
        }
        for (child, c) in buckets {
            self.descend(pts, c, child, level + 1, out);
        }
    }

    fn collect(&self, p: &[S], found: BTreeMap<u64, Vec<u64>>) -> PossSet<S> {
        let base = self.params.base();
        let n = self.params.n;
        PossSet {
            point: p.to_vec(),
            entries: found
                .into_iter()
                .map(|(idx, witnesses)| PossEntry { leaf: Vertex::from_index(base, n, idx), witnesses })
                .collect(),
        }
    }

    /// Level-`k` cubes meeting `E(x) = (p̄ - p₁Ω̄_N) ∩ [0,1)^d`.
    pub fn affine_copy_level_count(&self, p: &[S], k: u32) -> usize {
        let mut leaves = Vec::new();
        for b in 0..self.slopes.len() {
            let y = self.base_point(p, b);
            if y.iter().all(|v| *v >= S::zero() && *v < S::one()) {
                let s = S::powi(&S::from_int(self.params.m as i64), k as i32);
                let j: Vec<u64> = y.iter().map(|v| (v.clone() * s.clone()).floor_i64() as u64).collect();
                leaves.push(lattice_to_vertex(&j, k, self.params.m));
            }
        }
        count_level_vertices(&leaves, k)
    }
}

/// The unique slope witnessing `t ∈ Poss(p)`, as a binary vertex `β(t)`.
pub fn unique_far_slope<S: Scalar>(poss: &PossSet<S>, t: &Vertex) -> Result<Vertex> {
    let e = poss
        .entries
        .iter()
        .find(|e| e.leaf == *t)
        .ok_or_else(|| KakeyaError::Domain(format!("{:?} is not in Poss(p)", t.digits())))?;
    match e.witnesses.as_slice() {
        [b] => Ok(Vertex::from_index(2, t.height, *b)),
        ws => Err(KakeyaError::Invariant(format!(
            "root {:?} has {} witness slopes at p1 = {:?}; the far offset is too small",
            t.digits(),
            ws.len(),
            poss.point[0]
        ))),
    }
}

/// `(t, β(t))` for every `t ∈ Poss(p)`.
pub fn beta_map<S: Scalar>(poss: &PossSet<S>) -> Result<Vec<(Vertex, Vertex)>> {
    poss.entries.iter().map(|e| Ok((e.leaf, unique_far_slope(poss, &e.leaf)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{CantorSpec, DirectionCurve};
    use crate::scalar::ratio;
    use crate::tube::Tube;

    type Q = BigRational;

    #[test]
    fn center_at_zero_height() {
        let dirs = DirectionSet::new(&CantorSpec::middle_thirds(3), &DirectionCurve::affine(1)).unwrap();
        let params = TubeParams::for_directions(&dirs);
        let ctx = PossContext::<Q>::new(&params, &dirs);
        let p = vec![ratio(0, 1), ratio(11, 54)];
        let set = ctx.poss_definitional(&p).unwrap();
        assert_eq!(set.leaves(), vec![Vertex::from_index(3, 3, 5)]);
        assert_eq!(set.entries[0].witnesses.len(), 8);
        assert_eq!(ctx.poss_affine(&p).unwrap(), set);
        assert!(unique_far_slope(&set, &Vertex::from_index(3, 3, 5)).is_err());
    }

    #[test]
    fn unreachable_point_is_empty() {
        let dirs = DirectionSet::new(&CantorSpec::middle_thirds(3), &DirectionCurve::affine(1)).unwrap();
        let params = TubeParams::for_directions(&dirs);
        let ctx = PossContext::<Q>::new(&params, &dirs);
        let p = vec![ratio(2, 1), ratio(-7, 1)];
        assert!(ctx.poss_definitional(&p).unwrap().is_empty());
        assert!(ctx.poss_affine(&p).unwrap().is_empty());
        assert!(ctx.poss_definitional(&[ratio(-1, 1), ratio(0, 1)]).is_err());
    }

    #[test]
    fn agrees_with_tube_membership() {
        let dirs = DirectionSet::new(&CantorSpec::middle_thirds(2), &DirectionCurve::affine(1)).unwrap();
        let params = TubeParams::for_directions(&dirs);
        let ctx = PossContext::<Q>::new(&params, &dirs);
        for (x, y) in [(ratio(5, 2), ratio(7, 5)), (ratio(2, 1), ratio(1, 1)), (ratio(1, 3), ratio(1, 2))] {
            let p = vec![x, y];
            let set = ctx.poss_definitional(&p).unwrap();
            for t in 0..9u64 {
                let leaf = Vertex::from_index(3, 2, t);
                let ws: Vec<u64> = (0..4u64)
                    .filter(|&b| Tube::<Q>::new(&params, leaf, &dirs.points[b as usize]).contains(&p))
                    .collect();
                let got = set.entries.iter().find(|e| e.leaf == leaf).map(|e| e.witnesses.clone()).unwrap_or_default();
                assert_eq!(got, ws);
            }
        }
    }
}
