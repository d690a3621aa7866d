//! Tubes with shrunk cube cross-sections, the intersection criterion and
//! exact pairwise intersection measures.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::cantor::{Direction, DirectionSet};
use crate::scalar::{inv_pow, Scalar};
use crate::tree::{vertex_to_lattice, Vertex};

/// Scale parameters shared by every tube of a family.
#[derive(Clone, Debug, Serialize)]
pub struct TubeParams {
    pub m: u32,
    pub n: u32,
    pub d: usize,
    /// Shrink factor of the cross-section relative to the root cube.
    #[serde(skip)]
    pub kappa: BigRational,
    pub kappa_f64: f64,
    /// Far-slab offset; tubes have length `10·c0`.
    pub c0: u64,
    /// Rational upper bound on `√d`.
    #[serde(skip)]
    pub sqrt_d: BigRational,
}

/// Smallest `p / 2^20 ≥ √d`.
pub fn sqrt_upper(d: usize) -> BigRational {
    let den: u64 = 1 << 20;
    let target = d as u128 * (den as u128) * (den as u128);
    let mut p = ((d as f64).sqrt() * den as f64) as u128;
    while p * p > target {
        p -= 1;
    }
    while p * p < target {
        p += 1;
    }
    BigRational::new(BigInt::from(p), BigInt::from(den))
}

/// `κ_d = min(d^{-d}, 1/(2+4√d))`, with `√d` rounded up so the rational
/// value never exceeds the real one.
pub fn kappa(d: usize) -> BigRational {
    let a = BigRational::new(BigInt::one(), BigInt::from(d).pow(d as u32));
    let b = BigRational::one() / (BigRational::from_integer(2.into()) + sqrt_upper(d) * BigInt::from(4));
    if a < b {
        a
    } else {
        b
    }
}

/// `C₀ = ⌈max(d^d / c, 2√d / c)⌉` for the lower Lipschitz constant `c`.
pub fn far_offset(d: usize, c_lower: f64) -> u64 {
    let dd = (d as f64).powi(d as i32);
    (dd / c_lower).max(2.0 * (d as f64).sqrt() / c_lower).ceil() as u64
}

impl TubeParams {
    pub fn new(m: u32, n: u32, d: usize, c_lower: f64) -> Self {
        let kappa = kappa(d);
        TubeParams {
            m,
            n,
            d,
            kappa_f64: kappa.as_f64(),
            kappa,
            c0: far_offset(d, c_lower),
            sqrt_d: sqrt_upper(d),
        }
    }

    pub fn for_directions(dirs: &DirectionSet) -> Self {
        Self::new(dirs.m(), dirs.n(), dirs.d(), dirs.c_lower)
    }

    /// Root cube side `M^{-N}`.
    pub fn cell(&self) -> BigRational {
        inv_pow(self.m as u64, self.n)
    }

    /// Cross-section side `κ M^{-N}`.
    pub fn side(&self) -> BigRational {
        self.kappa.clone() * self.cell()
    }

    pub fn length(&self) -> u64 {
        10 * self.c0
    }

    /// Per-coordinate threshold `2κ√d M^{-N}` of the intersection criterion.
    pub fn necessary_threshold(&self) -> BigRational {
        BigRational::from_integer(2.into()) * self.kappa.clone() * self.sqrt_d.clone() * self.cell()
    }

    pub fn leaves(&self) -> u64 {
        (self.m as u64).pow(self.n * self.d as u32)
    }

    /// Base of the position tree, `M^d`.
    pub fn base(&self) -> u32 {
        self.m.pow(self.d as u32)
    }

    /// Exact center of the root cube `Q_t`.
    pub fn center(&self, t: &Vertex) -> Vec<BigRational> {
        let cell = self.cell();
        vertex_to_lattice(t, self.m, self.d)
            .into_iter()
            .map(|j| (BigRational::from_integer(j.into()) + BigRational::new(1.into(), 2.into())) * cell.clone())
            .collect()
    }
}

/// `P_{t,v}`: the set `{(s, c + s v̄ + r) : 0 ≤ s ≤ length, |r|_∞ ≤ side/2}`.
#[derive(Clone, Debug)]
pub struct Tube<S: Scalar> {
    pub root: Vertex,
    pub center: Vec<S>,
    pub slope: Vec<S>,
    pub side: S,
    pub length: S,
}

impl<S: Scalar> Tube<S> {
    pub fn new(params: &TubeParams, root: Vertex, dir: &Direction) -> Self {
        Tube {
            root,
            center: params.center(&root).iter().map(S::from_rational).collect(),
            slope: dir.slope.iter().map(S::from_rational).collect(),
            side: S::from_rational(&params.side()),
            length: S::from_int(params.length() as i64),
        }
    }

    pub fn contains(&self, p: &[S]) -> bool {
        let x = &p[0];
        if *x < S::zero() || *x > self.length {
            return false;
        }
        let half = self.side.clone() * S::half();
        self.center.iter().zip(&self.slope).zip(&p[1..]).all(|((c, v), y)| {
            (y.clone() - x.clone() * v.clone() - c.clone()).abs() <= half
        })
    }

    /// Measure of the part of the tube with first coordinate in `[a, b]`.
    pub fn volume(&self, a: &S, b: &S) -> S {
        let (lo, hi) = clamp(a, b, &self.length);
        if hi <= lo {
            return S::zero();
        }
        S::powi(&self.side, self.center.len() as i32) * (hi - lo)
    }
}

fn clamp<S: Scalar>(a: &S, b: &S, len: &S) -> (S, S) {
    (S::max_of(a.clone(), S::zero()), S::min_of(b.clone(), len.clone()))
}

/// First-axis slab `[k M^{-N}, (k+1) M^{-N}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slab {
    pub k: i64,
    pub m: u32,
    pub n: u32,
}

impl Slab {
    pub fn bounds<S: Scalar>(&self) -> (S, S) {
        let w = S::from_rational(&inv_pow(self.m as u64, self.n));
        (S::from_int(self.k) * w.clone(), S::from_int(self.k + 1) * w)
    }
}

/// Whether some `p₁ ∈ [a, b]` satisfies `|Δc_i + p₁ Δv_i| ≤ threshold` in
/// every coordinate. Implied by an actual intersection in that range.
pub fn intersection_necessary<S: Scalar>(t1: &Tube<S>, t2: &Tube<S>, a: &S, b: &S, threshold: &S) -> bool {
    let (mut lo, mut hi) = clamp(a, b, &S::min_of(t1.length.clone(), t2.length.clone()));
    if hi < lo {
        return false;
    }
    for i in 0..t1.center.len() {
        let dc = t2.center[i].clone() - t1.center[i].clone();
        let dv = t2.slope[i].clone() - t1.slope[i].clone();
        if dv.is_zero() {
            if dc.abs() > *threshold {
                return false;
            }
            continue;
        }
        let r1 = (-threshold.clone() - dc.clone()) / dv.clone();
        let r2 = (threshold.clone() - dc) / dv;
        let (l, h) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        lo = S::max_of(lo, l);
        hi = S::min_of(hi, h);
        if hi < lo {
            return false;
        }
    }
    true
}

/// Exact measure of `P_1 ∩ P_2 ∩ ([a,b] × R^d)`: the integral over `x` of
/// `∏_i max(0, w - |Δc_i + x Δv_i|)`, integrated piece by piece.
pub fn pair_measure<S: Scalar>(t1: &Tube<S>, t2: &Tube<S>, a: &S, b: &S) -> S {
    let (lo, hi) = clamp(a, b, &S::min_of(t1.length.clone(), t2.length.clone()));
    if hi <= lo {
        return S::zero();
    }
    let w = t1.side.clone();
    let d = t1.center.len();
    let mut dc = Vec::with_capacity(d);
    let mut dv = Vec::with_capacity(d);
    let mut breaks = vec![lo.clone(), hi.clone()];
    for i in 0..d {
        let c = t2.center[i].clone() - t1.center[i].clone();
        let v = t2.slope[i].clone() - t1.slope[i].clone();
        if v.is_zero() {
            if c.abs() >= w {
                return S::zero();
            }
        } else {
            for off in [-w.clone(), S::zero(), w.clone()] {
                let x = (off - c.clone()) / v.clone();
                if x > lo && x < hi {
                    breaks.push(x);
                }
            }
        }
        dc.push(c);
        dv.push(v);
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).expect("comparable breakpoints"));
    breaks.dedup();

    let mut total = S::zero();
    let mut poly: Vec<S> = Vec::with_capacity(d + 1);
    for seg in breaks.windows(2) {
        let (x0, x1) = (&seg[0], &seg[1]);
        let len = x1.clone() - x0.clone();
        let mid = (x0.clone() + x1.clone()) * S::half();
        // overlap in coordinate i on this piece: α_i + β_i (x - x0)
        poly.clear();
        poly.push(S::one());
        let mut empty = false;
        for i in 0..d {
            let at_mid = dc[i].clone() + mid.clone() * dv[i].clone();
            if at_mid.abs() >= w {
                empty = true;
                break;
            }
            let sign = if at_mid < S::zero() { -S::one() } else { S::one() };
            let alpha = w.clone() - sign.clone() * (dc[i].clone() + x0.clone() * dv[i].clone());
            let beta = -(sign * dv[i].clone());
            poly.push(S::zero());
            for k in (0..poly.len()).rev() {
                let lower = if k > 0 { poly[k - 1].clone() * beta.clone() } else { S::zero() };
                poly[k] = poly[k].clone() * alpha.clone() + lower;
            }
        }
        if empty {
            continue;
        }
        // ∫_0^len Σ a_k u^k du
        let mut acc = S::zero();
        let mut lp = len.clone();
        for (k, a) in poly.iter().enumerate() {
            acc = acc + a.clone() * lp.clone() / S::from_int(k as i64 + 1);
            lp = lp * len.clone();
        }
        total = total + acc;
    }
    total
}
