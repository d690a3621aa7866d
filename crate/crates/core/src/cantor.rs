//! Generalized Cantor sets built by a digit selector, their finite
//! representative sets and the direction sets they induce through a curve.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{KakeyaError, Result};
use crate::scalar::{inv_pow, parse_rational, rational_string, Scalar};
use crate::tree::{max_height, Vertex};

/// Chooses the two retained children of every Cantor interval. The choice
/// may depend on the digit prefix of the interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selector {
    /// Digits `0` and `M-1` everywhere; the middle-thirds rule when `M = 3`.
    Endpoints,
    /// The same pair at every interval.
    Constant { digits: [u32; 2] },
    /// Longest matching prefix wins; `default` applies otherwise.
    Rules { default: [u32; 2], rules: Vec<SelectorRule> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorRule {
    pub prefix: Vec<u32>,
    pub digits: [u32; 2],
}

impl Selector {
    pub fn select(&self, prefix: &[u32], m: u32) -> [u32; 2] {
        match self {
            Selector::Endpoints => [0, m - 1],
            Selector::Constant { digits } => *digits,
            Selector::Rules { default, rules } => rules
                .iter()
                .filter(|r| prefix.starts_with(&r.prefix))
                .max_by_key(|r| r.prefix.len())
                .map(|r| r.digits)
                .unwrap_or(*default),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KakeyaError::Config(format!("selector file: {e}")))
    }
}

/// A finite-depth Cantor construction. Validated on creation; the selected
/// digit pairs are cached in heap order of the binary tree.
#[derive(Clone, Debug)]
pub struct CantorSpec {
    pub m: u32,
    pub n: u32,
    pub selector: Selector,
    // pairs[heap(b)] = sorted digit pair selected inside binary vertex b
    pairs: Vec<[u32; 2]>,
    // M-adic index of the Cantor vertex corresponding to each binary vertex
    cantor_index: Vec<u64>,
}

/// Heap position of the binary vertex `index` at height `k`.
#[inline]
pub fn heap(k: u32, index: u64) -> usize {
    ((1u64 << k) - 1 + index) as usize
}

pub const MAX_DEPTH: u32 = 24;

impl CantorSpec {
    pub fn new(m: u32, n: u32, selector: Selector) -> Result<Self> {
        if m < 3 {
            return Err(KakeyaError::Config(format!("M = {m}; need M >= 3")));
        }
        if !(1..=MAX_DEPTH).contains(&n) || n > max_height(m) {
            return Err(KakeyaError::Config(format!("N = {n} outside supported range")));
        }
        let total = (1usize << (n + 1)) - 1;
        let mut pairs = vec![[0, 0]; (1usize << n) - 1];
        let mut cantor_index = vec![0u64; total];
        for k in 0..n {
            for b in 0..(1u64 << k) {
                let h = heap(k, b);
                let cv = Vertex::from_index(m, k, cantor_index[h]);
                let digits = cv.digits();
                let mut p = selector.select(&digits, m);
                p.sort_unstable();
                if p[1] >= m || p[1] - p[0] < 2 {
                    let side = inv_pow(m as u64, k);
                    let left = side.clone() * BigRational::from_integer(cv.index.into());
                    return Err(KakeyaError::Config(format!(
                        "selector returned digits {:?} inside interval [{}, {}) (digits {:?}); \
                         need two digits below {m} differing by at least 2",
                        p,
                        rational_string(&left),
                        rational_string(&(left.clone() + side)),
                        digits
                    )));
                }
                pairs[h] = p;
                for (bit, &dg) in p.iter().enumerate() {
                    cantor_index[heap(k + 1, 2 * b + bit as u64)] = cv.index * m as u64 + dg as u64;
                }
            }
        }
        Ok(CantorSpec { m, n, selector, pairs, cantor_index })
    }

    pub fn middle_thirds(n: u32) -> Self {
        Self::new(3, n, Selector::Endpoints).expect("middle thirds is valid")
    }

    /// Selected digit pair inside the Cantor interval of binary address `b` at height `k < N`.
    pub fn pair(&self, k: u32, b: u64) -> [u32; 2] {
        self.pairs[heap(k, b)]
    }

    /// The M-adic (Cantor tree) vertex with binary address `b` at height `k ≤ N`.
    pub fn cantor_vertex(&self, k: u32, b: u64) -> Vertex {
        Vertex::from_index(self.m, k, self.cantor_index[heap(k, b)])
    }

    /// Level-`k` basic intervals ordered by binary address.
    pub fn build_level(&self, k: u32) -> Result<Vec<BasicInterval>> {
        if k > self.n {
            return Err(KakeyaError::Config(format!("level {k} exceeds N = {}", self.n)));
        }
        Ok((0..(1u64 << k))
            .map(|b| BasicInterval { m: self.m, binary: Vertex::from_index(2, k, b), vertex: self.cantor_vertex(k, b) })
            .collect())
    }

    /// Left endpoints of the level-N intervals, ordered by binary address.
    pub fn representatives(&self) -> Vec<BigRational> {
        (0..(1u64 << self.n)).map(|b| self.cantor_vertex(self.n, b).left_endpoint(self.m)).collect()
    }
}

impl Vertex {
    /// Left endpoint of the M-adic interval this vertex encodes.
    pub fn left_endpoint(&self, m: u32) -> BigRational {
        BigRational::new(BigInt::from(self.index), BigInt::from(m).pow(self.height))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasicInterval {
    pub m: u32,
    pub binary: Vertex,
    pub vertex: Vertex,
}

impl BasicInterval {
    pub fn left(&self) -> BigRational {
        self.vertex.left_endpoint(self.m)
    }
    pub fn right(&self) -> BigRational {
        self.left() + inv_pow(self.m as u64, self.vertex.height)
    }
}

/// Polynomial curve `t ↦ (1, p_1(t), …, p_d(t))` with rational coefficients
/// (ascending powers).
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionCurve {
    pub name: String,
    pub coeffs: Vec<Vec<BigRational>>,
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    #[serde(default)]
    name: Option<String>,
    coefficients: Vec<Vec<String>>,
}

impl DirectionCurve {
    pub fn d(&self) -> usize {
        self.coeffs.len()
    }

    /// `(1, t, …, t)`: every component is the identity.
    pub fn affine(d: usize) -> Self {
        let id = vec![BigRational::zero(), BigRational::one()];
        DirectionCurve { name: "affine".into(), coeffs: vec![id; d] }
    }

    /// `(1, a_1 t + b_1, …)`.
    pub fn affine_with(ab: &[(BigRational, BigRational)]) -> Self {
        let coeffs = ab.iter().map(|(a, b)| vec![b.clone(), a.clone()]).collect();
        DirectionCurve { name: "affine".into(), coeffs }
    }

    /// Moment curve `(1, t, t², …, t^d)`.
    pub fn moment(d: usize) -> Self {
        let coeffs = (1..=d)
            .map(|k| {
                let mut c = vec![BigRational::zero(); k + 1];
                c[k] = BigRational::one();
                c
            })
            .collect();
        DirectionCurve { name: "moment".into(), coeffs }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CurveFile =
            serde_json::from_str(text).map_err(|e| KakeyaError::Config(format!("curve file: {e}")))?;
        let mut coeffs = Vec::new();
        for row in &f.coefficients {
            let mut r = Vec::new();
            for s in row {
                r.push(
                    parse_rational(s)
                        .ok_or_else(|| KakeyaError::Config(format!("bad coefficient {s:?}")))?,
                );
            }
            coeffs.push(r);
        }
        if coeffs.is_empty() {
            return Err(KakeyaError::Config("curve needs at least one component".into()));
        }
        Ok(DirectionCurve { name: f.name.unwrap_or_else(|| "poly".into()), coeffs })
    }

    /// The last `d` coordinates of the curve at `t`.
    pub fn eval<S: Scalar>(&self, t: &S) -> Vec<S> {
        self.coeffs
            .iter()
            .map(|c| {
                c.iter().rev().fold(S::zero(), |acc, a| acc * t.clone() + S::from_rational(a))
            })
            .collect()
    }
}

/// One element of `Ω_N`.
#[derive(Clone, Debug)]
pub struct Direction {
    /// Binary address (leaf of the full binary tree of height N).
    pub binary: u64,
    /// Cantor tree leaf (base M).
    pub cantor: Vertex,
    pub param: BigRational,
    /// Last `d` coordinates; the first is always 1.
    pub slope: Vec<BigRational>,
    pub slope_f64: Vec<f64>,
}

/// `Ω_N = γ(D_M^[N])` indexed by binary address, with the estimated
/// bi-Lipschitz constants of the curve.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    pub spec: CantorSpec,
    pub curve: DirectionCurve,
    pub points: Vec<Direction>,
    pub c_lower: f64,
    pub c_upper: f64,
}

const LIPSCHITZ_GRID: usize = 1 << 12;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl DirectionSet {
    pub fn new(spec: &CantorSpec, curve: &DirectionCurve) -> Result<Self> {
        let reps = spec.representatives();
        let mut points = Vec::with_capacity(reps.len());
        for (b, param) in reps.into_iter().enumerate() {
            let slope: Vec<BigRational> = curve.eval(&param);
            if slope.iter().any(|s| s.abs() > BigRational::one()) {
                return Err(KakeyaError::Domain(format!(
                    "curve leaves {{1}}x[-1,1]^d at t = {}",
                    rational_string(&param)
                )));
            }
            let slope_f64 = slope.iter().map(Scalar::as_f64).collect();
            points.push(Direction {
                binary: b as u64,
                cantor: spec.cantor_vertex(spec.n, b as u64),
                param,
                slope,
                slope_f64,
            });
        }

        let grid: Vec<(f64, Vec<f64>)> = (0..LIPSCHITZ_GRID)
            .map(|i| {
                let t = i as f64 / (LIPSCHITZ_GRID - 1) as f64;
                (t, curve.eval(&t))
            })
            .collect();
        if let Some((t, _)) = grid.iter().find(|(_, v)| v.iter().any(|x| x.abs() > 1.0 + 1e-12)) {
            return Err(KakeyaError::Domain(format!("curve leaves {{1}}x[-1,1]^d near t = {t}")));
        }

        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut push = |x: f64, y: f64, a: &[f64], b: &[f64]| {
            let r = dist(a, b) / (x - y).abs();
            lo = lo.min(r);
            hi = hi.max(r);
        };
        let pf: Vec<(f64, &Vec<f64>)> =
            points.iter().map(|p| (Scalar::as_f64(&p.param), &p.slope_f64)).collect();
        if pf.len() <= 1024 {
            for i in 0..pf.len() {
                for j in i + 1..pf.len() {
                    push(pf[i].0, pf[j].0, pf[i].1, pf[j].1);
                }
            }
        } else {
            strided_pairs(pf.len(), |i, j| push(pf[i].0, pf[j].0, pf[i].1, pf[j].1));
        }
        strided_pairs(grid.len(), |i, j| push(grid[i].0, grid[j].0, &grid[i].1, &grid[j].1));

        if !(lo > 1e-12) {
            return Err(KakeyaError::Config(format!(
                "curve {} is not bi-Lipschitz on the sampled grid (estimated c = {lo})",
                curve.name
            )));
        }
        Ok(DirectionSet { spec: spec.clone(), curve: curve.clone(), points, c_lower: lo, c_upper: hi })
    }

    pub fn n(&self) -> u32 {
        self.spec.n
    }

    pub fn m(&self) -> u32 {
        self.spec.m
    }

    pub fn d(&self) -> usize {
        self.curve.d()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Slopes as a flat row-major `f64` table (`len × d`).
    pub fn flat_f64(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.slope_f64.iter().copied()).collect()
    }

    /// Exact listing keyed by binary address, for serialization.
    pub fn listing(&self) -> BTreeMap<u64, (String, Vec<String>)> {
        self.points
            .iter()
            .map(|p| (p.binary, (rational_string(&p.param), p.slope.iter().map(rational_string).collect())))
            .collect()
    }
}

/// Visits pairs `(i, i + 2^s)` for every power-of-two stride.
fn strided_pairs(len: usize, mut f: impl FnMut(usize, usize)) {
    let mut s = 1;
    while s < len {
        for i in 0..len - s {
            f(i, i + s);
        }
        s *= 2;
    }
}

/// Convenience wrapper matching the operation name used in reports.
pub fn direction_set(spec: &CantorSpec, curve: &DirectionCurve) -> Result<DirectionSet> {
    DirectionSet::new(spec, curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn middle_thirds_levels() {
        let spec = CantorSpec::middle_thirds(3);
        let l1 = spec.build_level(1).unwrap();
        let ends: Vec<_> = l1.iter().map(|i| (i.left(), i.right())).collect();
        assert_eq!(ends, vec![(ratio(0, 1), ratio(1, 3)), (ratio(2, 3), ratio(1, 1))]);
        let l2: Vec<Vec<u32>> = spec.build_level(2).unwrap().iter().map(|i| i.vertex.digits()).collect();
        assert_eq!(l2, vec![vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2]]);
        let l0 = spec.build_level(0).unwrap();
        assert_eq!((l0[0].left(), l0[0].right()), (ratio(0, 1), ratio(1, 1)));
        assert!(spec.build_level(4).is_err());
    }

    #[test]
    fn representative_examples() {
        assert_eq!(CantorSpec::middle_thirds(1).representatives(), vec![ratio(0, 1), ratio(2, 3)]);
        assert_eq!(
            CantorSpec::middle_thirds(2).representatives(),
            vec![ratio(0, 1), ratio(2, 9), ratio(2, 3), ratio(8, 9)]
        );
    }

    #[test]
    fn adjacent_selector_is_rejected_with_interval() {
        let sel = Selector::Rules {
            default: [0, 2],
            rules: vec![SelectorRule { prefix: vec![2], digits: [1, 2] }],
        };
        let err = CantorSpec::new(3, 3, sel).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2/3, 1)"), "{msg}");
        assert!(CantorSpec::new(2, 3, Selector::Endpoints).is_err());
    }

    #[test]
    fn moment_curve_slopes() {
        let spec = CantorSpec::middle_thirds(2);
        let ds = DirectionSet::new(&spec, &DirectionCurve::moment(2)).unwrap();
        let got: Vec<Vec<BigRational>> = ds.points.iter().map(|p| p.slope.clone()).collect();
        assert_eq!(
            got,
            vec![
                vec![ratio(0, 1), ratio(0, 1)],
                vec![ratio(2, 9), ratio(4, 81)],
                vec![ratio(2, 3), ratio(4, 9)],
                vec![ratio(8, 9), ratio(64, 81)],
            ]
        );
    }

    #[test]
    fn affine_curve_is_isometric() {
        let spec = CantorSpec::middle_thirds(1);
        let ds = DirectionSet::new(&spec, &DirectionCurve::affine(1)).unwrap();
        assert_eq!(ds.points[1].slope, vec![ratio(2, 3)]);
        assert!((ds.c_lower - 1.0).abs() < 1e-12 && (ds.c_upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_outside_box_is_domain_error() {
        let curve = DirectionCurve::affine_with(&[(ratio(3, 1), ratio(0, 1))]);
        let err = DirectionSet::new(&CantorSpec::middle_thirds(2), &curve).unwrap_err();
        assert!(matches!(err, KakeyaError::Domain(_)));
        let flat = DirectionCurve::affine_with(&[(ratio(0, 1), ratio(1, 2))]);
        assert!(matches!(
            DirectionSet::new(&CantorSpec::middle_thirds(2), &flat).unwrap_err(),
            KakeyaError::Config(_)
        ));
    }

    #[test]
    fn curve_file_parses() {
        let c = DirectionCurve::from_json(r#"{"coefficients": [["0", "1/2", "1/2"]]}"#).unwrap();
        assert_eq!(c.eval(&ratio(1, 1)), vec![ratio(1, 1)]);
        assert!(DirectionCurve::from_json(r#"{"coefficients": [["x"]]}"#).is_err());
    }
}
