//! M-adic trees: packed vertices, youngest common ancestors, cube encodings
//! and the stickiness checker.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cantor::CantorSpec;
use crate::error::{KakeyaError, Result};
use crate::scalar::Scalar;

/// A vertex of a rooted `base`-ary tree, stored as its digit sequence packed
/// into a single integer (most significant digit = first step from the root).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub base: u32,
    pub height: u32,
    pub index: u64,
}

/// Largest height for which `base^height` fits in the packed index.
pub fn max_height(base: u32) -> u32 {
    let mut h = 0;
    let mut acc: u64 = 1;
    while let Some(next) = acc.checked_mul(base as u64) {
        acc = next;
        h += 1;
    }
    h
}

pub fn pow_u64(base: u64, exp: u32) -> u64 {
    base.checked_pow(exp).expect("packed vertex index overflow")
}

impl Vertex {
    pub fn root(base: u32) -> Self {
        Vertex { base, height: 0, index: 0 }
    }

    pub fn new(base: u32, digits: &[u32]) -> Self {
        assert!(base >= 2, "base must be at least 2");
        assert!(digits.len() as u32 <= max_height(base), "vertex too deep for packing");
        let mut index = 0u64;
        for &dg in digits {
            assert!(dg < base, "digit {dg} out of range for base {base}");
            index = index * base as u64 + dg as u64;
        }
        Vertex { base, height: digits.len() as u32, index }
    }

    pub fn from_index(base: u32, height: u32, index: u64) -> Self {
        debug_assert!(index < pow_u64(base as u64, height));
        Vertex { base, height, index }
    }

    pub fn digits(&self) -> Vec<u32> {
        let mut out = vec![0; self.height as usize];
        let mut x = self.index;
        for slot in out.iter_mut().rev() {
            *slot = (x % self.base as u64) as u32;
            x /= self.base as u64;
        }
        out
    }

    /// Digit at position `j` (0 = first step from the root).
    pub fn digit(&self, j: u32) -> u32 {
        assert!(j < self.height);
        let shift = pow_u64(self.base as u64, self.height - 1 - j);
        ((self.index / shift) % self.base as u64) as u32
    }

    pub fn prefix(&self, k: u32) -> Vertex {
        assert!(k <= self.height);
        let shift = pow_u64(self.base as u64, self.height - k);
        Vertex { base: self.base, height: k, index: self.index / shift }
    }

    pub fn parent(&self) -> Option<Vertex> {
        (self.height > 0).then(|| self.prefix(self.height - 1))
    }

    pub fn child(&self, digit: u32) -> Vertex {
        assert!(digit < self.base);
        Vertex {
            base: self.base,
            height: self.height + 1,
            index: self.index * self.base as u64 + digit as u64,
        }
    }

    pub fn is_root(&self) -> bool {
        self.height == 0
    }

    /// True when `self` is a (not necessarily proper) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        self.base == other.base && self.height <= other.height && other.prefix(self.height) == *self
    }
}

/// Height of the youngest common ancestor; cheaper than building it.
pub fn yca_height(u: &Vertex, v: &Vertex) -> u32 {
    assert_eq!(u.base, v.base, "vertices from different trees");
    let h = u.height.min(v.height);
    let (mut a, mut b) = (u.prefix(h).index, v.prefix(h).index);
    let mut k = h;
    while a != b {
        a /= u.base as u64;
        b /= u.base as u64;
        k -= 1;
    }
    k
}

/// Youngest common ancestor (longest common prefix). For an ancestor and its
/// descendant this returns the ancestor.
pub fn yca(u: &Vertex, v: &Vertex) -> Vertex {
    let k = yca_height(u, v);
    u.prefix(k)
}

/// Youngest common ancestor of a non-empty set of vertices.
pub fn yca_all(vs: &[Vertex]) -> Vertex {
    let mut acc = vs[0];
    for v in &vs[1..] {
        acc = yca(&acc, v);
    }
    acc
}

/// Lexicographic packing of a `d`-tuple of base-`m` digits into one base-`m^d` digit.
pub fn lex_pack(digits: &[u32], m: u32) -> u32 {
    digits.iter().fold(0, |acc, &a| acc * m + a)
}

pub fn lex_unpack(digit: u32, m: u32, d: usize) -> Vec<u32> {
    let mut out = vec![0; d];
    let mut x = digit;
    for slot in out.iter_mut().rev() {
        *slot = x % m;
        x /= m;
    }
    out
}

/// Leaf of `T([0,1)^d; M)` at height `k` for the lattice cube `j / M^k`.
pub fn lattice_to_vertex(j: &[u64], k: u32, m: u32) -> Vertex {
    let d = j.len() as u32;
    let b = m.pow(d);
    let mut index = 0u64;
    for level in 0..k {
        let shift = pow_u64(m as u64, k - 1 - level);
        let mut dig = 0u64;
        for &ji in j {
            dig = dig * m as u64 + (ji / shift) % m as u64;
        }
        index = index * b as u64 + dig;
    }
    Vertex { base: b, height: k, index }
}

/// Inverse of [`lattice_to_vertex`].
pub fn vertex_to_lattice(v: &Vertex, m: u32, d: usize) -> Vec<u64> {
    let mut j = vec![0u64; d];
    for level in 0..v.height {
        let parts = lex_unpack(v.digit(level), m, d);
        for (ji, p) in j.iter_mut().zip(parts) {
            *ji = *ji * m as u64 + p as u64;
        }
    }
    j
}

/// Vertex of the level-`k` M-adic cube containing `point ∈ [0,1)^d`.
pub fn encode_cube<S: Scalar>(point: &[S], k: u32, m: u32) -> Result<Vertex> {
    let scale = S::powi(&S::from_int(m as i64), k as i32);
    let mut j = Vec::with_capacity(point.len());
    for x in point {
        if *x < S::zero() || *x >= S::one() {
            return Err(KakeyaError::Domain(format!("point coordinate {x:?} outside [0,1)")));
        }
        j.push((x.clone() * scale.clone()).floor_i64() as u64);
    }
    Ok(lattice_to_vertex(&j, k, m))
}

/// Lower corner and side of the cube represented by `v` (exact).
pub fn decode_cube(v: &Vertex, m: u32, d: usize) -> (Vec<BigRational>, BigRational) {
    let side = crate::scalar::inv_pow(m as u64, v.height);
    let corner = vertex_to_lattice(v, m, d)
        .into_iter()
        .map(|j| side.clone() * BigRational::from_integer(j.into()))
        .collect();
    (corner, side)
}

/// Number of distinct level-`k` prefixes among `leaves`.
pub fn count_level_vertices(leaves: &[Vertex], k: u32) -> usize {
    let mut pref: Vec<u64> = leaves.iter().map(|v| v.prefix(k).index).collect();
    pref.sort_unstable();
    pref.dedup();
    pref.len()
}

/// Number of level-`k` M-adic cubes of `[0,1)^d` meeting a finite point set.
/// Points outside `[0,1)^d` are ignored.
pub fn count_level_cubes(points: &[Vec<BigRational>], k: u32, m: u32) -> usize {
    let leaves: Vec<Vertex> = points.iter().filter_map(|p| encode_cube(p, k, m).ok()).collect();
    count_level_vertices(&leaves, k)
}

/// Checks that a vertex map preserves heights and lineages on the given
/// vertices: `f(prefix_k(u)) == prefix_k(f(u))` for every `k ≤ h(u)`.
pub fn is_sticky<F>(f: F, vertices: &[Vertex]) -> bool
where
    F: Fn(&Vertex) -> Option<Vertex>,
{
    for u in vertices {
        let Some(fu) = f(u) else { return false };
        if fu.height != u.height {
            return false;
        }
        for k in 0..u.height {
            match f(&u.prefix(k)) {
                Some(fp) if fp == fu.prefix(k) => {}
                _ => return false,
            }
        }
    }
    true
}

/// A map defined on leaves extends to a sticky map on their prefix closure
/// iff `h(D(f t, f t')) ≥ h(D(t, t'))` for every pair.
pub fn is_sticky_on_leaves(pairs: &[(Vertex, Vertex)]) -> bool {
    for (i, (t, ft)) in pairs.iter().enumerate() {
        if ft.height != t.height {
            return false;
        }
        for (s, fs) in &pairs[i + 1..] {
            if yca_height(ft, fs) < yca_height(t, s) {
                return false;
            }
        }
    }
    true
}

/// Membership predicate of a prefix-closed tree.
pub trait Tree {
    fn base(&self) -> u32;
    fn contains(&self, v: &Vertex) -> bool;
}

/// Every vertex of height at most `height`.
#[derive(Clone, Debug)]
pub struct FullTree {
    pub base: u32,
    pub height: u32,
}

impl Tree for FullTree {
    fn base(&self) -> u32 {
        self.base
    }
    fn contains(&self, v: &Vertex) -> bool {
        v.base == self.base && v.height <= self.height
    }
}

/// Prefix closure of an explicit leaf list.
#[derive(Clone, Debug)]
pub struct LeafTree {
    pub base: u32,
    leaves: Vec<Vertex>,
}

impl LeafTree {
    pub fn new(base: u32, mut leaves: Vec<Vertex>) -> Self {
        leaves.sort_by_key(|v| (v.height, v.index));
        leaves.dedup();
        LeafTree { base, leaves }
    }

    pub fn leaves(&self) -> &[Vertex] {
        &self.leaves
    }
}

impl Tree for LeafTree {
    fn base(&self) -> u32 {
        self.base
    }
    fn contains(&self, v: &Vertex) -> bool {
        self.leaves.iter().any(|l| v.is_prefix_of(l))
    }
}

/// Full scan of all vertices up to `height`: every member's parent is a member.
pub fn check_prefix_closed<T: Tree>(tree: &T, height: u32) -> bool {
    let b = tree.base() as u64;
    for h in 1..=height {
        for idx in 0..pow_u64(b, h) {
            let v = Vertex::from_index(tree.base(), h, idx);
            if tree.contains(&v) && !tree.contains(&v.parent().unwrap()) {
                return false;
            }
        }
    }
    true
}

/// The isomorphism `ψ` between `T_N(C_M; M)` and the full binary tree of height N.
#[derive(Clone, Copy, Debug)]
pub struct Isomorphism<'a> {
    spec: &'a CantorSpec,
}

pub fn build_psi(spec: &CantorSpec) -> Isomorphism<'_> {
    Isomorphism { spec }
}

impl Isomorphism<'_> {
    /// Forward map: selected digit `N₁ ↦ 0`, `N₂ ↦ 1`.
    pub fn psi(&self, v: &Vertex) -> Result<Vertex> {
        if v.base != self.spec.m || v.height > self.spec.n {
            return Err(KakeyaError::Domain(format!("{v:?} is not a vertex of the Cantor tree")));
        }
        let mut b = 0u64;
        for k in 0..v.height {
            let pair = self.spec.pair(k, b);
            let dg = v.digit(k);
            let bit = pair
                .iter()
                .position(|&p| p == dg)
                .ok_or_else(|| KakeyaError::Domain(format!("{:?} is not selected at level {}", v.digits(), k + 1)))?;
            b = 2 * b + bit as u64;
        }
        Ok(Vertex::from_index(2, v.height, b))
    }

    pub fn psi_inv(&self, b: &Vertex) -> Result<Vertex> {
        if b.base != 2 || b.height > self.spec.n {
            return Err(KakeyaError::Domain(format!("{b:?} is not a binary vertex of height <= N")));
        }
        Ok(self.spec.cantor_vertex(b.height, b.index))
    }
}

/// `Φ(w)`: descend from `w` through first selected children down to level N
/// and return that interval's left endpoint.
pub fn phi_map(spec: &CantorSpec, w: &Vertex) -> Result<BigRational> {
    let b = build_psi(spec).psi(w)?;
    let leaf = b.index << (spec.n - b.height);
    Ok(spec.cantor_vertex(spec.n, leaf).left_endpoint(spec.m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn yca_examples() {
        let u = Vertex::new(3, &[0, 1]);
        let v = Vertex::new(3, &[0, 2]);
        assert_eq!(yca(&u, &v), Vertex::new(3, &[0]));
        let a = Vertex::new(3, &[1, 0]);
        let b = Vertex::new(3, &[2, 0]);
        assert_eq!(yca(&a, &b), Vertex::root(3));
        let anc = Vertex::new(3, &[2]);
        assert_eq!(yca(&anc, &b), anc);
        assert_eq!(yca(&b, &anc), anc);
    }

    #[test]
    fn encode_examples() {
        let v = encode_cube(&[ratio(2, 9)], 2, 3).unwrap();
        assert_eq!(v.digits(), vec![0, 2]);
        let w = encode_cube(&[ratio(1, 3), ratio(0, 1)], 1, 3).unwrap();
        assert_eq!(w.digits(), vec![lex_pack(&[1, 0], 3)]);
        assert_eq!(w.digits(), vec![3]);
        assert!(encode_cube(&[ratio(1, 1)], 1, 3).is_err());
        assert!(encode_cube(&[-0.1f64], 1, 3).is_err());
    }

    #[test]
    fn decode_gives_containing_cube() {
        let v = encode_cube(&[ratio(5, 7), ratio(1, 10)], 3, 3).unwrap();
        let (corner, side) = decode_cube(&v, 3, 2);
        assert_eq!(side, ratio(1, 27));
        assert!(corner[0] <= ratio(5, 7) && ratio(5, 7) < corner[0].clone() + side.clone());
        assert!(corner[1] <= ratio(1, 10) && ratio(1, 10) < corner[1].clone() + side);
    }

    #[test]
    fn full_tree_level_counts() {
        let leaves: Vec<Vertex> = (0..27).map(|i| Vertex::from_index(3, 3, i)).collect();
        assert_eq!(count_level_vertices(&leaves, 0), 1);
        assert_eq!(count_level_vertices(&leaves, 2), 9);
        assert!(check_prefix_closed(&LeafTree::new(3, leaves[3..7].to_vec()), 3));
        assert!(check_prefix_closed(&FullTree { base: 4, height: 3 }, 3));
    }

    #[test]
    fn sticky_checker_rejects_broken_lineage() {
        let verts: Vec<Vertex> = (0..8).map(|i| Vertex::from_index(2, 3, i)).collect();
        let id = |v: &Vertex| Some(*v);
        assert!(is_sticky(id, &verts));
        // flipping the last digit of one leaf only keeps heights but breaks nothing;
        // flipping the first digit of one leaf but not of its prefix breaks lineage.
        let bad = |v: &Vertex| {
            if v.height == 3 && v.index == 5 {
                Some(Vertex::from_index(2, 3, 1))
            } else {
                Some(*v)
            }
        };
        assert!(!is_sticky(bad, &verts));
        let shrink = |v: &Vertex| Some(v.prefix(v.height.saturating_sub(1)));
        assert!(!is_sticky(shrink, &verts));
    }

    #[test]
    fn psi_examples() {
        let spec = CantorSpec::middle_thirds(3);
        let iso = build_psi(&spec);
        assert_eq!(iso.psi(&Vertex::new(3, &[0, 2])).unwrap(), Vertex::new(2, &[0, 1]));
        assert_eq!(iso.psi(&Vertex::root(3)).unwrap(), Vertex::root(2));
        assert!(iso.psi(&Vertex::new(3, &[1])).is_err());
    }

    #[test]
    fn phi_examples() {
        let spec = CantorSpec::middle_thirds(3);
        assert_eq!(phi_map(&spec, &Vertex::new(3, &[2])).unwrap(), ratio(2, 3));
        let reps = spec.representatives();
        for b in 0..8u64 {
            let w = spec.cantor_vertex(3, b);
            assert_eq!(phi_map(&spec, &w).unwrap(), reps[b as usize]);
        }
        assert!(phi_map(&spec, &Vertex::new(3, &[1, 0])).is_err());
    }
}
