//! Classification of three- and four-point root configurations and the
//! closed-form conditional slope probabilities they admit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::sticky::{enumerate_conditional, sticky_admissible};
use crate::tree::{yca, yca_height, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CaseLabel {
    /// `u`, `u′` disjoint.
    FourA,
    /// `u = u′` equals every cross ancestor.
    FourB,
    /// `u′ ⊊ u`, neither of `t₁, t₂` heads toward `u′`.
    FourC,
    /// `u′ ⊊ u`, one `t` leaves the path to `u′` strictly between the two.
    FourD,
    /// `u′ ⊊ u`, one `t` lies under `u′` and splits from both `t′` at `u′`.
    FourE,
    /// `u′ ⊊ u`, one `t` lies under `u′` and follows one `t′` below it.
    FourF,
    /// Type 2 with `h(u₁) = h(u₂) > h(u)`.
    SixA,
    /// Type 2 with `h(u) < h(u₁) < h(u₂)`.
    SixB,
    /// Type 2 with `h(u₁) = h(u)`.
    SixC,
    /// Three points, `u′ ⊊ u`.
    ThreeA,
    /// Three points, `u = u′ = D(t₂, t₂′)`.
    ThreeB,
    /// Three points, type 2: `D(t₂, t₂′) ⊊ u = u′`.
    ThreeTwo,
}

impl CaseLabel {
    pub fn name(&self) -> &'static str {
        match self {
            CaseLabel::FourA => "4:1a",
            CaseLabel::FourB => "4:1b",
            CaseLabel::FourC => "4:1c",
            CaseLabel::FourD => "4:1d",
            CaseLabel::FourE => "4:1e",
            CaseLabel::FourF => "4:1f",
            CaseLabel::SixA => "4:2a",
            CaseLabel::SixB => "4:2b",
            CaseLabel::SixC => "4:2c",
            CaseLabel::ThreeA => "3:1a",
            CaseLabel::ThreeB => "3:1b",
            CaseLabel::ThreeTwo => "3:2",
        }
    }

    pub fn all() -> [CaseLabel; 12] {
        use CaseLabel::*;
        [FourA, FourB, FourC, FourD, FourE, FourF, SixA, SixB, SixC, ThreeA, ThreeB, ThreeTwo]
    }
}

/// Result of classifying a root tuple. `given` and `event` index into the
/// tuple as supplied by the caller (`[t₁, t₂, t₁′, t₂′]` or `[t₁, t₂, t₂′]`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigClass {
    pub arity: u8,
    pub type_tag: u8,
    pub case: CaseLabel,
    /// Whether the pairs (or `t₂`, `t₂′`) were swapped to get `h(u) ≤ h(u′)`.
    pub swapped: bool,
    /// `(i₁, i₂)` and `(j₁, j₂)` in the normalized tuple, 1-based.
    pub perm_i: (u8, u8),
    pub perm_j: (u8, u8),
    pub h_u: u32,
    pub h_u_prime: u32,
    /// `u₁` (four-point type 2) or `u₂ = D(t₂,t₂′)` (three-point type 2).
    pub h_aux: Option<u32>,
    /// `k` in the closed form `(1/2)^k`.
    pub exponent: u32,
    pub given: Vec<usize>,
    pub event: Vec<usize>,
}

fn check_leaves(ts: &[Vertex]) -> Result<u32> {
    let n = ts[0].height;
    for (i, a) in ts.iter().enumerate() {
        if a.height != n || a.base != ts[0].base {
            return Err(KakeyaError::Domain("tuple leaves must share base and height".into()));
        }
        if ts[i + 1..].contains(a) {
            return Err(KakeyaError::Domain(format!("repeated leaf {:?}", a.digits())));
        }
    }
    Ok(n)
}

/// Strict ancestry: `a` is a proper prefix of `b`.
fn strictly_above(a: &Vertex, b: &Vertex) -> bool {
    a.height < b.height && a.is_prefix_of(b)
}

/// Classifies `[t₁, t₂, t₁′, t₂′]`.
pub fn classify4(tuple: [Vertex; 4]) -> Result<ConfigClass> {
    let n = check_leaves(&tuple)?;
    let mut u = yca(&tuple[0], &tuple[1]);
    let mut up = yca(&tuple[2], &tuple[3]);
    let swapped = u.height > up.height;
    // position in the caller's tuple of normalized slot s
    let slot: [usize; 4] = if swapped { [2, 3, 0, 1] } else { [0, 1, 2, 3] };
    if swapped {
        std::mem::swap(&mut u, &mut up);
    }
    let t = [tuple[slot[0]], tuple[slot[1]]];
    let tp = [tuple[slot[2]], tuple[slot[3]]];
    let cross = |i: usize, j: usize| yca_height(&t[i], &tp[j]);
    let (hu, hup) = (u.height, up.height);

    let build = |type_tag: u8, case: CaseLabel, pi: (u8, u8), pj: (u8, u8), aux: Option<u32>, exponent: u32| {
        let given = vec![slot[pi.0 as usize - 1], slot[2 + pj.0 as usize - 1]];
        let event = vec![slot[pi.1 as usize - 1], slot[2 + pj.1 as usize - 1]];
        ConfigClass {
            arity: 4,
            type_tag,
            case,
            swapped,
            perm_i: pi,
            perm_j: pj,
            h_u: hu,
            h_u_prime: hup,
            h_aux: aux,
            exponent,
            given,
            event,
        }
    };
    let type1 = 2 * n - hu - hup;

    let disjoint = !u.is_prefix_of(&up) && !up.is_prefix_of(&u);
    if disjoint {
        return Ok(build(1, CaseLabel::FourA, (1, 2), (1, 2), None, type1));
    }
    if strictly_above(&u, &up) {
        // depth to which each t follows the path toward u′
        let ell = |i: usize| cross(i, 0).min(hup);
        let toward: Vec<usize> = (0..2).filter(|&i| ell(i) > hu).collect();
        debug_assert!(toward.len() <= 1, "t₁ and t₂ split at u");
        return Ok(match toward.first() {
            None => build(1, CaseLabel::FourC, (1, 2), (1, 2), None, type1),
            Some(&i) => {
                let pi = if i == 0 { (1, 2) } else { (2, 1) };
                if ell(i) < hup {
                    build(1, CaseLabel::FourD, pi, (1, 2), None, type1)
                } else if cross(i, 0) == hup && cross(i, 1) == hup {
                    build(1, CaseLabel::FourE, pi, (1, 2), None, type1)
                } else {
                    let pj = if cross(i, 0) > hup { (1, 2) } else { (2, 1) };
                    build(1, CaseLabel::FourF, pi, pj, None, type1)
                }
            }
        });
    }
    // u = u′ from here on
    debug_assert_eq!(u, up);
    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    if pairs.iter().all(|&(i, j)| cross(i, j) == hu) {
        return Ok(build(1, CaseLabel::FourB, (1, 2), (1, 2), None, type1));
    }
    // deepest cross pair, lexicographically first on ties
    let &(i2, j2) = pairs.iter().max_by(|a, b| cross(a.0, a.1).cmp(&cross(b.0, b.1)).then(b.cmp(a))).unwrap();
    let (i1, j1) = (1 - i2, 1 - j2);
    let (h1, h2) = (cross(i1, j1), cross(i2, j2));
    let case = if h1 == hu {
        CaseLabel::SixC
    } else if h1 == h2 {
        CaseLabel::SixA
    } else {
        CaseLabel::SixB
    };
    // condition on the deepest pair
    let pi = (i2 as u8 + 1, i1 as u8 + 1);
    let pj = (j2 as u8 + 1, j1 as u8 + 1);
    Ok(build(2, case, pi, pj, Some(h1), 2 * n - hu - h1))
}

/// Classifies `[t₁, t₂, t₂′]` (the pairs `(t₁,t₂)` and `(t₁,t₂′)`). The
/// closed form conditions on `t₁`.
pub fn classify3(tuple: [Vertex; 3]) -> Result<ConfigClass> {
    let n = check_leaves(&tuple)?;
    let mut h = [yca_height(&tuple[0], &tuple[1]), yca_height(&tuple[0], &tuple[2])];
    let swapped = h[0] > h[1];
    if swapped {
        h.swap(0, 1);
    }
    let (hu, hup) = (h[0], h[1]);
    let h2 = yca_height(&tuple[1], &tuple[2]);
    let (type_tag, case, aux, exponent) = if hup > hu {
        (1, CaseLabel::ThreeA, None, 2 * n - hu - hup)
    } else if h2 == hu {
        (1, CaseLabel::ThreeB, None, 2 * n - hu - hup)
    } else {
        (2, CaseLabel::ThreeTwo, Some(h2), 2 * n - hu - h2)
    };
    Ok(ConfigClass {
        arity: 3,
        type_tag,
        case,
        swapped,
        perm_i: (1, 2),
        perm_j: (1, 2),
        h_u: hu,
        h_u_prime: hup,
        h_aux: aux,
        exponent,
        given: vec![0],
        event: vec![1, 2],
    })
}

/// `(1/2)^k` as an exact rational.
pub fn half_pow(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// `Pr(σ(t₂) = α₂ | σ(t₁) = α₁)`: `2^{-(N-h(u))}` when `h(D(t₁,t₂)) ≤ h(D(α₁,α₂))`, else 0.
pub fn cond_prob_pair(t1: &Vertex, t2: &Vertex, a1: &Vertex, a2: &Vertex) -> Result<BigRational> {
    if t1 == t2 {
        return Err(KakeyaError::Domain("cond_prob_pair needs distinct leaves".into()));
    }
    let h = yca_height(t1, t2);
    Ok(if h <= yca_height(a1, a2) { half_pow(t2.height - h) } else { BigRational::zero() })
}

/// Number of edges on the rays of `event` that are not on the rays of `given`.
pub fn edge_count(given: &[Vertex], event: &[Vertex]) -> u32 {
    let mut seen: Vec<Vertex> = Vec::new();
    for t in given {
        for k in 1..=t.height {
            seen.push(t.prefix(k));
        }
    }
    let mut fresh = 0;
    for t in event {
        for k in 1..=t.height {
            let v = t.prefix(k);
            if !seen.contains(&v) {
                seen.push(v);
                fresh += 1;
            }
        }
    }
    fresh
}

/// `(1/2)^{k(A,B)}` for an admissible collection, 0 otherwise.
pub fn cond_prob_general(given: &[(Vertex, Vertex)], event: &[(Vertex, Vertex)]) -> Result<BigRational> {
    if given.iter().any(|a| event.iter().any(|b| a.0 == b.0)) {
        return Err(KakeyaError::Domain("conditioning and event sets share a leaf".into()));
    }
    let all: Vec<(Vertex, Vertex)> = given.iter().chain(event).copied().collect();
    if !sticky_admissible(&all) {
        return Ok(BigRational::zero());
    }
    let g: Vec<Vertex> = given.iter().map(|p| p.0).collect();
    let e: Vec<Vertex> = event.iter().map(|p| p.0).collect();
    Ok(half_pow(edge_count(&g, &e)))
}

/// Closed form for a classified tuple with slopes (binary leaves) attached:
/// `None` if the conditioning pairs are themselves inadmissible.
pub fn closed_form(class: &ConfigClass, leaves: &[Vertex], slopes: &[Vertex]) -> Option<BigRational> {
    let pick = |idx: &[usize]| -> Vec<(Vertex, Vertex)> { idx.iter().map(|&i| (leaves[i], slopes[i])).collect() };
    if !sticky_admissible(&pick(&class.given)) {
        return None;
    }
    let all: Vec<(Vertex, Vertex)> = leaves.iter().copied().zip(slopes.iter().copied()).collect();
    Some(if sticky_admissible(&all) { half_pow(class.exponent) } else { BigRational::zero() })
}

/// The three evaluations of one conditional probability.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub class: ConfigClass,
    pub closed_form: Option<BigRational>,
    pub edge_formula: Option<BigRational>,
    pub enumerated: Option<BigRational>,
}

impl OracleReport {
    pub fn agrees(&self) -> bool {
        self.closed_form == self.enumerated && self.edge_formula == self.enumerated
    }
}

/// Classifies the tuple and compares the closed form with brute-force enumeration.
pub fn oracle_check(leaves: &[Vertex], slopes: &[Vertex]) -> Result<OracleReport> {
    let class = match leaves.len() {
        4 => classify4([leaves[0], leaves[1], leaves[2], leaves[3]])?,
        3 => classify3([leaves[0], leaves[1], leaves[2]])?,
        k => return Err(KakeyaError::Domain(format!("tuples have 3 or 4 leaves, got {k}"))),
    };
    let pick = |idx: &[usize]| -> Vec<(Vertex, Vertex)> { idx.iter().map(|&i| (leaves[i], slopes[i])).collect() };
    let (given, event) = (pick(&class.given), pick(&class.event));
    let enumerated = enumerate_conditional(&given, &event)?;
    let closed = closed_form(&class, leaves, slopes);
    let edge_formula = if sticky_admissible(&given) { Some(cond_prob_general(&given, &event)?) } else { None };
    Ok(OracleReport { class, closed_form: closed, edge_formula, enumerated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn v(d: &[u32]) -> Vertex {
        Vertex::new(3, d)
    }

    #[test]
    fn disjoint_is_case_a() {
        let c = classify4([v(&[0, 0, 1]), v(&[0, 1, 0]), v(&[2, 0, 0]), v(&[2, 2, 1])]).unwrap();
        assert_eq!((c.type_tag, c.case), (1, CaseLabel::FourA));
        assert_eq!(c.exponent, 6 - 1 - 1);
    }

    #[test]
    fn equal_ancestors_with_deeper_cross_is_type_2() {
        let c = classify4([v(&[0, 0, 1]), v(&[1, 0, 0]), v(&[0, 0, 2]), v(&[1, 1, 1])]).unwrap();
        assert_eq!(c.type_tag, 2);
        assert_eq!(c.h_u, c.h_u_prime);
    }

    #[test]
    fn three_point_branches() {
        let a = classify3([v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[0, 1, 0])]).unwrap();
        assert_eq!(a.case, CaseLabel::ThreeA);
        let b = classify3([v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[2, 0, 0])]).unwrap();
        assert_eq!(b.case, CaseLabel::ThreeB);
        let c = classify3([v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[1, 1, 0])]).unwrap();
        assert_eq!((c.type_tag, c.case, c.exponent), (2, CaseLabel::ThreeTwo, 2 * 3 - 1));
        assert!(classify3([v(&[0, 0, 0]), v(&[0, 0, 0]), v(&[1, 1, 0])]).is_err());
    }

    #[test]
    fn pair_probabilities() {
        let b = |d: &[u32]| Vertex::new(2, d);
        let p = cond_prob_pair(&v(&[0, 1]), &v(&[2, 1]), &b(&[0, 0]), &b(&[1, 0])).unwrap();
        assert_eq!(p, ratio(1, 4));
        let p = cond_prob_pair(&v(&[0, 1]), &v(&[0, 2]), &b(&[0, 0]), &b(&[0, 1])).unwrap();
        assert_eq!(p, ratio(1, 2));
        let p = cond_prob_pair(&v(&[0, 1]), &v(&[0, 2]), &b(&[0, 0]), &b(&[1, 1])).unwrap();
        assert_eq!(p, ratio(0, 1));
    }

    #[test]
    fn general_with_empty_condition_is_unconditional() {
        let b = Vertex::new(2, &[1, 0, 1]);
        let p = cond_prob_general(&[], &[(v(&[2, 1, 1]), b)]).unwrap();
        assert_eq!(p, ratio(1, 8));
        assert!(cond_prob_general(&[(v(&[2, 1, 1]), b)], &[(v(&[2, 1, 1]), b)]).is_err());
    }
}
