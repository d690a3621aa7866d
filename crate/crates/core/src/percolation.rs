//! Bernoulli percolation on finite rooted trees and the associated
//! resistor networks.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::scalar::Scalar;
use crate::tree::{pow_u64, Vertex};

#[derive(Clone, Debug)]
struct Node {
    vertex: Vertex,
    parent: usize,
    children: Vec<usize>,
}

/// A finite tree with a retention probability on each edge. Edges are
/// identified with their lower endpoint; node 0 is the root. Nodes are
/// stored in breadth-first order, so parents precede children.
#[derive(Clone, Debug)]
pub struct PercTree {
    pub base: u32,
    nodes: Vec<Node>,
    p: Vec<BigRational>,
}

/// Monte Carlo estimate with a 99% normal-approximation half width.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: u64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, samples: u64) -> Self {
        let mean = hits as f64 / samples as f64;
        let half_width = 2.576 * (mean * (1.0 - mean) / samples as f64).sqrt();
        McEstimate { mean, half_width, samples }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width + 1e-12
    }
}

impl PercTree {
    /// Prefix closure of `leaves`, every edge retained with probability ½.
    pub fn from_leaves(base: u32, leaves: &[Vertex]) -> Result<Self> {
        if leaves.is_empty() {
            return Err(KakeyaError::Domain("empty tree".into()));
        }
        let mut set: BTreeMap<(u32, u64), ()> = BTreeMap::new();
        for t in leaves {
            if t.base != base {
                return Err(KakeyaError::Domain(format!("{t:?} has base {} not {base}", t.base)));
            }
            for k in 0..=t.height {
                set.insert((k, t.prefix(k).index), ());
            }
        }
        let mut ids: BTreeMap<(u32, u64), usize> = BTreeMap::new();
        let mut nodes: Vec<Node> = Vec::with_capacity(set.len());
        for &(h, idx) in set.keys() {
            let vertex = Vertex::from_index(base, h, idx);
            let parent = if h == 0 { 0 } else { ids[&(h - 1, idx / base as u64)] };
            let id = nodes.len();
            ids.insert((h, idx), id);
            if h > 0 {
                nodes[parent].children.push(id);
            }
            nodes.push(Node { vertex, parent, children: Vec::new() });
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let p = vec![half; nodes.len()];
        Ok(PercTree { base, nodes, p })
    }

    pub fn full(base: u32, height: u32) -> Self {
        let leaves: Vec<Vertex> =
            (0..pow_u64(base as u64, height)).map(|i| Vertex::from_index(base, height, i)).collect();
        Self::from_leaves(base, &leaves).expect("non-empty")
    }

    /// A single ray of the given height.
    pub fn path(height: u32) -> Self {
        Self::from_leaves(2, &[Vertex::from_index(2, height, 0)]).expect("non-empty")
    }

    /// Prefix closure of a random set of vertices of the full `base`-ary
    /// tree with heights in `1..=max_height`.
    pub fn random_subtree<R: Rng>(base: u32, max_height: u32, rng: &mut R) -> Self {
        let h = rng.gen_range(1..=max_height);
        let count = rng.gen_range(1..=24);
        let leaves: Vec<Vertex> = (0..count)
            .map(|_| {
                let k = if rng.gen_bool(0.6) { h } else { rng.gen_range(1..=h) };
                Vertex::from_index(base, k, rng.gen_range(0..pow_u64(base as u64, k)))
            })
            .collect();
        Self::from_leaves(base, &leaves).expect("non-empty")
    }

    pub fn set_uniform_prob(&mut self, p: BigRational) {
        self.p.iter_mut().for_each(|x| *x = p.clone());
    }

    pub fn set_edge_prob(&mut self, node: usize, p: BigRational) {
        assert!(node > 0, "the root has no edge");
        self.p[node] = p;
    }

    pub fn edge_prob(&self, node: usize) -> &BigRational {
        &self.p[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn vertex(&self, node: usize) -> Vertex {
        self.nodes[node].vertex
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.nodes[node].children
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.nodes[node].children.is_empty()
    }

    pub fn height(&self) -> u32 {
        self.nodes.last().map(|n| n.vertex.height).unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<Vertex> {
        (0..self.nodes.len()).filter(|&i| self.is_leaf(i)).map(|i| self.nodes[i].vertex).collect()
    }

    /// Number of vertices at each height `0..=height`.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.height() as usize + 1];
        for n in &self.nodes {
            c[n.vertex.height as usize] += 1;
        }
        c
    }

    fn require_edges(&self) -> Result<()> {
        if self.nodes.len() < 2 {
            return Err(KakeyaError::Domain("tree has no edges".into()));
        }
        Ok(())
    }

    /// Products of retention probabilities from the root down to each node.
    fn path_products<S: Scalar>(&self) -> Vec<S> {
        let mut prod = vec![S::one(); self.nodes.len()];
        for i in 1..self.nodes.len() {
            prod[i] = prod[self.nodes[i].parent].clone() * S::from_rational(&self.p[i]);
        }
        prod
    }

    /// `R_e = (1 - p_e) / ∏_{e' ≤ e} p_{e'}`; `None` when infinite.
    pub fn edge_resistance<S: Scalar>(&self, node: usize) -> Option<S> {
        let mut prod = S::one();
        let mut i = node;
        while i != 0 {
            prod = prod * S::from_rational(&self.p[i]);
            i = self.nodes[i].parent;
        }
        if prod.is_zero() {
            return None;
        }
        Some((S::one() - S::from_rational(&self.p[node])) / prod)
    }

    fn edge_resistances<S: Scalar>(&self) -> Vec<Option<S>> {
        let prod = self.path_products::<S>();
        (0..self.nodes.len())
            .map(|i| {
                if i == 0 || prod[i].is_zero() {
                    None
                } else {
                    Some((S::one() - S::from_rational(&self.p[i])) / prod[i].clone())
                }
            })
            .collect()
    }

    /// Effective resistance between the root and the leaves (all tied
    /// together). `Ok(None)` means no conducting path.
    pub fn resistance<S: Scalar>(&self) -> Result<Option<S>> {
        self.require_edges()?;
        let re = self.edge_resistances::<S>();
        let mut r: Vec<Option<S>> = vec![None; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            if node.children.is_empty() {
                r[i] = Some(S::zero());
                continue;
            }
            let mut g = S::zero();
            for &c in &node.children {
                if let (Some(e), Some(rc)) = (&re[c], &r[c]) {
                    g = g + S::one() / (e.clone() + rc.clone());
                }
            }
            r[i] = if g.is_zero() { None } else { Some(S::one() / g) };
        }
        Ok(r[0].clone())
    }

    /// Resistance after shorting every level together. Summation stops at the
    /// first level that contains a leaf, since that level is tied to the
    /// negative terminal; with all leaves at one height this is
    /// `Σ_k 1 / Σ_{h(e)=k} 1/R_e`.
    pub fn shorted_resistance<S: Scalar>(&self) -> Result<Option<S>> {
        self.require_edges()?;
        let re = self.edge_resistances::<S>();
        let first_leaf = (0..self.nodes.len())
            .filter(|&i| self.is_leaf(i))
            .map(|i| self.nodes[i].vertex.height)
            .min()
            .unwrap();
        let mut g = vec![S::zero(); first_leaf as usize + 1];
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            let h = n.vertex.height;
            if h <= first_leaf {
                if let Some(e) = &re[i] {
                    g[h as usize] = g[h as usize].clone() + S::one() / e.clone();
                }
            }
        }
        let mut total = S::zero();
        for gk in g.into_iter().skip(1) {
            if gk.is_zero() {
                return Ok(None);
            }
            total = total + S::one() / gk;
        }
        Ok(Some(total))
    }

    /// Probability that some root-to-leaf ray is fully retained.
    pub fn survival_exact<S: Scalar>(&self) -> S {
        let mut pr: Vec<S> = vec![S::one(); self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            if node.children.is_empty() {
                continue;
            }
            let mut fail = S::one();
            for &c in &node.children {
                fail = fail * (S::one() - S::from_rational(&self.p[c]) * pr[c].clone());
            }
            pr[i] = S::one() - fail;
        }
        pr[0].clone()
    }

    fn survives(&self, kept: impl Fn(usize) -> bool, reach: &mut [bool]) -> bool {
        reach[0] = true;
        let mut any = false;
        for i in 1..self.nodes.len() {
            reach[i] = reach[self.nodes[i].parent] && kept(i);
            if reach[i] && self.nodes[i].children.is_empty() {
                any = true;
            }
        }
        any
    }

    /// Survival probability by summing over all `2^E` edge outcomes.
    pub fn survival_enumerate(&self) -> Result<BigRational> {
        let e = self.num_edges();
        if e > 20 {
            return Err(KakeyaError::Resource(format!("{e} edges; enumeration limited to 20")));
        }
        let mut reach = vec![false; self.nodes.len()];
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let uniform = self.p.iter().skip(1).all(|x| *x == half);
        let mut count = 0u64;
        let mut total = BigRational::zero();
        for mask in 0..1u64 << e {
            let kept = |i: usize| (mask >> (i - 1)) & 1 == 1;
            if self.survives(kept, &mut reach) {
                if uniform {
                    count += 1;
                } else {
                    let mut w = BigRational::one();
                    for i in 1..self.nodes.len() {
                        w *= if kept(i) { self.p[i].clone() } else { BigRational::one() - &self.p[i] };
                    }
                    total += w;
                }
            }
        }
        if uniform {
            Ok(BigRational::new(BigInt::from(count), BigInt::one() << e))
        } else {
            Ok(total)
        }
    }

    pub fn survival_mc(&self, seed: u64, samples: u64) -> McEstimate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pf: Vec<f64> = self.p.iter().map(Scalar::as_f64).collect();
        let mut kept = vec![false; self.nodes.len()];
        let mut reach = vec![false; self.nodes.len()];
        let mut hits = 0;
        for _ in 0..samples {
            for i in 1..kept.len() {
                kept[i] = rng.gen::<f64>() < pf[i];
            }
            if self.survives(|i| kept[i], &mut reach) {
                hits += 1;
            }
        }
        McEstimate::from_counts(hits, samples)
    }
}

/// `R_e` for `p ≡ ½` at an edge whose lower endpoint has height `h`.
pub fn half_edge_resistance<S: Scalar>(h: u32) -> S {
    S::powi(&S::from_int(2), h as i32 - 1)
}

/// Bounds `(1/(1+R), 2/(1+R))` on the survival probability.
pub fn lyons_bounds<S: Scalar>(r: &S) -> (S, S) {
    let d = S::one() + r.clone();
    (S::one() / d.clone(), S::from_int(2) / d)
}

/// Lyons bounds for a possibly infinite resistance.
pub fn lyons_bounds_opt<S: Scalar>(r: &Option<S>) -> (S, S) {
    match r {
        Some(r) => lyons_bounds(r),
        None => (S::zero(), S::zero()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    type Q = BigRational;

    #[test]
    fn resistance_examples() {
        assert_eq!(PercTree::full(2, 1).resistance::<Q>().unwrap(), Some(ratio(1, 2)));
        assert_eq!(PercTree::full(2, 2).resistance::<Q>().unwrap(), Some(ratio(1, 1)));
        assert_eq!(PercTree::path(3).resistance::<Q>().unwrap(), Some(ratio(7, 1)));
        assert!(PercTree::from_leaves(2, &[Vertex::root(2)]).unwrap().resistance::<Q>().is_err());
    }

    #[test]
    fn shorted_examples() {
        for n in 1..6 {
            let t = PercTree::full(2, n);
            assert_eq!(t.shorted_resistance::<Q>().unwrap(), Some(ratio(n as i64, 2)));
        }
        let t2 = PercTree::full(2, 2);
        assert_eq!(t2.shorted_resistance::<Q>().unwrap(), t2.resistance::<Q>().unwrap());
        assert_eq!(PercTree::path(3).shorted_resistance::<Q>().unwrap(), Some(ratio(7, 1)));
    }

    #[test]
    fn survival_examples() {
        assert_eq!(PercTree::full(2, 1).survival_exact::<Q>(), ratio(3, 4));
        assert_eq!(PercTree::full(2, 2).survival_exact::<Q>(), ratio(39, 64));
        for k in 1..6 {
            assert_eq!(PercTree::path(k).survival_exact::<Q>(), ratio(1, 1 << k));
        }
    }

    #[test]
    fn survival_mc_examples() {
        let t = PercTree::full(2, 2);
        let est = t.survival_mc(11, 200_000);
        assert!(est.contains(39.0 / 64.0), "{est:?}");
        let mut dead = PercTree::full(2, 2);
        for &c in PercTree::full(2, 2).children(0) {
            dead.set_edge_prob(c, Q::zero());
        }
        assert_eq!(dead.survival_mc(3, 1000).mean, 0.0);
        assert_eq!(dead.resistance::<Q>().unwrap(), None);
        assert_eq!(lyons_bounds_opt(&dead.resistance::<Q>().unwrap()), (Q::zero(), Q::zero()));
    }

    #[test]
    fn lyons_examples() {
        assert_eq!(lyons_bounds(&ratio(1, 1)), (ratio(1, 2), ratio(1, 1)));
        assert_eq!(lyons_bounds(&ratio(0, 1)), (ratio(1, 1), ratio(2, 1)));
    }

    #[test]
    fn general_edge_probabilities() {
        let mut t = PercTree::full(3, 2);
        for i in 1..t.num_nodes() {
            t.set_edge_prob(i, ratio((i % 4 + 1) as i64, 6));
        }
        assert_eq!(t.survival_enumerate().unwrap(), t.survival_exact::<Q>());
        let half = PercTree::full(3, 2);
        for i in 1..half.num_nodes() {
            let h = half.vertex(i).height;
            assert_eq!(half.edge_resistance::<Q>(i), Some(half_edge_resistance::<Q>(h)));
        }
    }
}
