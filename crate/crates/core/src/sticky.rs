//! The Bernoulli(½) edge field, the sticky maps it induces and the
//! brute-force realization oracle.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::cantor::{Direction, DirectionSet};
use crate::error::{KakeyaError, Result};
use crate::tree::{pow_u64, yca_height, yca_all, Vertex};

/// A {0,1} label on every non-root vertex of a `base`-ary tree, evaluated
/// incrementally along a root path.
pub trait EdgeField: Sync {
    type State: Copy;
    fn base(&self) -> u32;
    fn root(&self) -> Self::State;
    fn child(&self, s: Self::State, digit: u32) -> Self::State;
    /// Label of the vertex whose path state is `s` (meaningless at the root).
    fn bit(&self, s: Self::State) -> u8;

    fn vertex_bit(&self, v: &Vertex) -> u8 {
        assert!(v.height > 0, "the root carries no edge");
        self.bit(self.state_of(v))
    }

    fn state_of(&self, v: &Vertex) -> Self::State {
        assert_eq!(v.base, self.base(), "vertex base does not match the field");
        (0..v.height).fold(self.root(), |s, j| self.child(s, v.digit(j)))
    }
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless keyed field: the bit of a vertex is a hash of the seed, the
/// base and the digit path.
#[derive(Clone, Copy, Debug)]
pub struct KeyedField {
    pub seed: u64,
    pub base: u32,
}

impl KeyedField {
    pub fn new(seed: u64, base: u32) -> Self {
        KeyedField { seed, base }
    }
}

impl EdgeField for KeyedField {
    type State = u64;
    fn base(&self) -> u32 {
        self.base
    }
    #[inline]
    fn root(&self) -> u64 {
        splitmix64(self.seed ^ splitmix64(self.base as u64))
    }
    #[inline]
    fn child(&self, s: u64, digit: u32) -> u64 {
        splitmix64(s ^ (digit as u64 + 1).wrapping_mul(0xD6E8_FEB8_6659_FD93))
    }
    #[inline]
    fn bit(&self, s: u64) -> u8 {
        (splitmix64(s ^ 0xA076_1D64_78BD_642F) >> 63) as u8
    }
}

/// Explicit bit table over all vertices of height ≤ `height`, heap indexed
/// (root 0, child of `i` by digit `a` is `base·i + a + 1`).
#[derive(Clone, Debug)]
pub struct TableField {
    pub base: u32,
    pub height: u32,
    bits: Vec<u8>,
}

impl TableField {
    /// Number of non-root vertices, i.e. the number of field bits.
    pub fn edge_count(base: u32, height: u32) -> usize {
        (1..=height).map(|h| pow_u64(base as u64, h) as usize).sum()
    }

    /// Bit `i` of `mask` labels heap vertex `i + 1`.
    pub fn from_mask(base: u32, height: u32, mask: u64) -> Self {
        let e = Self::edge_count(base, height);
        assert!(e <= 64, "mask too short for {e} edges");
        let mut bits = vec![0u8; e + 1];
        for (i, b) in bits.iter_mut().skip(1).enumerate() {
            *b = ((mask >> i) & 1) as u8;
        }
        TableField { base, height, bits }
    }

    pub fn from_bits(base: u32, height: u32, edge_bits: &[u8]) -> Self {
        assert_eq!(edge_bits.len(), Self::edge_count(base, height));
        let mut bits = vec![0u8];
        bits.extend_from_slice(edge_bits);
        TableField { base, height, bits }
    }
}

impl EdgeField for TableField {
    type State = usize;
    fn base(&self) -> u32 {
        self.base
    }
    fn root(&self) -> usize {
        0
    }
    #[inline]
    fn child(&self, s: usize, digit: u32) -> usize {
        self.base as usize * s + digit as usize + 1
    }
    #[inline]
    fn bit(&self, s: usize) -> u8 {
        self.bits[s]
    }
}

/// Every vertex carries the same bit.
#[derive(Clone, Copy, Debug)]
pub struct ConstantField {
    pub base: u32,
    pub value: u8,
}

impl EdgeField for ConstantField {
    type State = ();
    fn base(&self) -> u32 {
        self.base
    }
    fn root(&self) {}
    fn child(&self, _: (), _: u32) {}
    fn bit(&self, _: ()) -> u8 {
        self.value
    }
}

/// `τ(t)`: the binary vertex whose `j`-th digit is the bit of the length-`j+1` prefix of `t`.
pub fn tau_of<F: EdgeField>(field: &F, t: &Vertex) -> Vertex {
    let mut s = field.root();
    let mut b = 0u64;
    for j in 0..t.height {
        s = field.child(s, t.digit(j));
        b = 2 * b + field.bit(s) as u64;
    }
    Vertex::from_index(2, t.height, b)
}

/// `τ` on every leaf of the full `base`-ary tree of height `n`, indexed by
/// leaf index; the value is the binary address.
pub fn tau_all<F: EdgeField>(field: &F, n: u32) -> Vec<u64> {
    let b = field.base();
    let mut out = Vec::with_capacity(pow_u64(b as u64, n) as usize);
    fn rec<F: EdgeField>(f: &F, s: F::State, depth: u32, n: u32, addr: u64, out: &mut Vec<u64>) {
        if depth == n {
            out.push(addr);
            return;
        }
        for dg in 0..f.base() {
            let c = f.child(s, dg);
            rec(f, c, depth + 1, n, 2 * addr + f.bit(c) as u64, out);
        }
    }
    rec(field, field.root(), 0, n, 0, &mut out);
    out
}

/// The slope assignment `σ = γ∘Φ∘ψ⁻¹∘τ` for a field over `T([0,1)^d; M)`.
pub struct SlopeAssignment<'a, F: EdgeField> {
    pub field: &'a F,
    pub dirs: &'a DirectionSet,
}

impl<'a, F: EdgeField> SlopeAssignment<'a, F> {
    pub fn new(field: &'a F, dirs: &'a DirectionSet) -> Result<Self> {
        let want = dirs.m().pow(dirs.d() as u32);
        if field.base() != want {
            return Err(KakeyaError::Config(format!(
                "field base {} does not match M^d = {want}",
                field.base()
            )));
        }
        Ok(SlopeAssignment { field, dirs })
    }

    pub fn tau(&self, t: &Vertex) -> Vertex {
        tau_of(self.field, t)
    }

    pub fn sigma(&self, t: &Vertex) -> &'a Direction {
        assert_eq!(t.height, self.dirs.n(), "σ is defined on leaves of height N");
        &self.dirs.points[self.tau(t).index as usize]
    }

    /// Binary slope address of every leaf, indexed by leaf index.
    pub fn addresses(&self) -> Vec<u64> {
        tau_all(self.field, self.dirs.n())
    }
}

pub fn sigma_of<'a, F: EdgeField>(a: &SlopeAssignment<'a, F>, t: &Vertex) -> &'a Direction {
    a.sigma(t)
}

/// Sticky admissibility of a collection of (root leaf, slope leaf) pairs.
/// Since the youngest common ancestor of a set has the least height among
/// its pairs, the pairwise condition already covers every subset; the full
/// tuple is checked as well for clarity.
pub fn sticky_admissible(pairs: &[(Vertex, Vertex)]) -> bool {
    for (i, (t, a)) in pairs.iter().enumerate() {
        for (s, b) in &pairs[i + 1..] {
            if t == s && a != b {
                return false;
            }
            if yca_height(a, b) < yca_height(t, s) {
                return false;
            }
        }
    }
    if pairs.len() > 2 {
        let ts: Vec<Vertex> = pairs.iter().map(|p| p.0).collect();
        let al: Vec<Vertex> = pairs.iter().map(|p| p.1).collect();
        if yca_all(&al).height < yca_all(&ts).height {
            return false;
        }
    }
    true
}

pub const MAX_ENUM_EDGES: usize = 30;

/// The distinct edges on the rays of a set of leaves, and for every leaf the
/// edge ids along its ray.
#[derive(Clone, Debug)]
pub struct RayEnumeration {
    pub edges: Vec<Vertex>,
    pub leaf_edges: Vec<Vec<usize>>,
}

impl RayEnumeration {
    pub fn new(leaves: &[Vertex]) -> Result<Self> {
        let mut ids: HashMap<Vertex, usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut leaf_edges = Vec::with_capacity(leaves.len());
        for t in leaves {
            let mut ray = Vec::with_capacity(t.height as usize);
            for k in 1..=t.height {
                let v = t.prefix(k);
                let id = *ids.entry(v).or_insert_with(|| {
                    edges.push(v);
                    edges.len() - 1
                });
                ray.push(id);
            }
            leaf_edges.push(ray);
        }
        if edges.len() > MAX_ENUM_EDGES {
            return Err(KakeyaError::Resource(format!(
                "{} edges on the union of rays; the enumeration budget is {MAX_ENUM_EDGES}",
                edges.len()
            )));
        }
        Ok(RayEnumeration { edges, leaf_edges })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `τ` of leaf `i` under the edge assignment `mask`.
    #[inline]
    pub fn tau(&self, i: usize, mask: u64) -> u64 {
        self.leaf_edges[i].iter().fold(0, |acc, &e| 2 * acc + ((mask >> e) & 1))
    }

    /// Number of assignments realizing `targets` (binary addresses) on the
    /// leaves listed in `which`.
    pub fn count(&self, which: &[usize], targets: &[u64]) -> u64 {
        (0..1u64 << self.edges.len())
            .filter(|&mask| which.iter().zip(targets).all(|(&i, &a)| self.tau(i, mask) == a))
            .count() as u64
    }

    /// Joint histogram of `(τ(t_1), …, τ(t_L))`; the key concatenates the
    /// addresses with leaf 1 most significant.
    pub fn histogram(&self) -> Result<Vec<u32>> {
        let bits: u32 = self.leaf_edges.iter().map(|r| r.len() as u32).sum();
        if bits > 24 {
            return Err(KakeyaError::Resource(format!("histogram with 2^{bits} cells")));
        }
        let mut h = vec![0u32; 1 << bits];
        for mask in 0..1u64 << self.edges.len() {
            let mut key = 0u64;
            for (i, ray) in self.leaf_edges.iter().enumerate() {
                key = (key << ray.len()) | self.tau(i, mask);
            }
            h[key as usize] += 1;
        }
        Ok(h)
    }
}

/// Exact probability that `τ(leaves[i]) = targets[i]` for every `i`, by
/// enumerating all assignments of the edges on the union of the rays.
pub fn enumerate_realizations(leaves: &[Vertex], targets: &[Vertex]) -> Result<BigRational> {
    if leaves.len() != targets.len() {
        return Err(KakeyaError::Config("leaves and targets differ in length".into()));
    }
    for (t, a) in leaves.iter().zip(targets) {
        if a.base != 2 || a.height != t.height {
            return Err(KakeyaError::Config(format!("target {a:?} is not a binary vertex of height {}", t.height)));
        }
    }
    let en = RayEnumeration::new(leaves)?;
    let which: Vec<usize> = (0..leaves.len()).collect();
    let addr: Vec<u64> = targets.iter().map(|a| a.index).collect();
    let c = en.count(&which, &addr);
    Ok(BigRational::new(BigInt::from(c), BigInt::from(1u64) << en.num_edges()))
}

/// `Pr(targets on B | targets on A)` by enumeration; `None` when the
/// conditioning event is empty.
pub fn enumerate_conditional(
    given: &[(Vertex, Vertex)],
    event: &[(Vertex, Vertex)],
) -> Result<Option<BigRational>> {
    let all: Vec<(Vertex, Vertex)> = given.iter().chain(event).copied().collect();
    let leaves: Vec<Vertex> = all.iter().map(|p| p.0).collect();
    let en = RayEnumeration::new(&leaves)?;
    let addr: Vec<u64> = all.iter().map(|p| p.1.index).collect();
    let idx: Vec<usize> = (0..all.len()).collect();
    let denom = en.count(&idx[..given.len()], &addr[..given.len()]);
    if denom == 0 {
        return Ok(None);
    }
    let num = en.count(&idx, &addr);
    Ok(Some(BigRational::new(BigInt::from(num), BigInt::from(denom))))
}
