//! Fast invariant suite behind `kakeya verify`. Each section returns named
//! checks with the number of cases examined.

use kakeya_core::cantor::{CantorSpec, DirectionCurve, DirectionSet};
use kakeya_core::config_prob::{classify4, edge_count, oracle_check};
use kakeya_core::percolation::{lyons_bounds, PercTree};
use kakeya_core::poss::PossContext;
use kakeya_core::scalar::ratio;
use kakeya_core::sticky::{enumerate_realizations, sticky_admissible, tau_of, TableField};
use kakeya_core::tree::{
    build_psi, check_prefix_closed, decode_cube, encode_cube, is_sticky, yca_height, FullTree, Vertex,
};
use kakeya_core::tube::{intersection_necessary, pair_measure, Tube, TubeParams};
use kakeya_core::{BigRational, Scalar};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::record::Check;
use crate::simulate::simulate;

pub const SECTIONS: [&str; 7] = ["tree", "cantor", "sticky", "tube", "percolation", "config", "replay"];

pub fn run(section: &str) -> Option<Vec<Check>> {
    Some(match section {
        "tree" => tree(),
        "cantor" => cantor(),
        "sticky" => sticky(),
        "tube" => tube(),
        "percolation" => percolation(),
        "config" => config(),
        "replay" => replay(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<Check> {
    SECTIONS.iter().flat_map(|s| run(s).expect("known section")).collect()
}

fn count_check(name: &str, cases: usize, failures: usize) -> Check {
    Check::new(name, failures == 0, format!("{cases} cases, {failures} failures"))
}

fn tree() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut out = Vec::new();
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..10_000 {
        let h = rng.gen_range(1..=10);
        let pick = |r: &mut ChaCha8Rng| Vertex::from_index(3, h, r.gen_range(0..3u64.pow(h)));
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        cases += 1;
        let (ab, bc, ac) = (yca_height(&a, &b), yca_height(&b, &c), yca_height(&a, &c));
        if ac < ab.min(bc) || ab != yca_height(&b, &a) {
            bad += 1;
        }
    }
    out.push(count_check("youngest common ancestor is ultrametric", cases, bad));

    let (mut cases, mut bad) = (0, 0);
    for _ in 0..10_000 {
        let d = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=6);
        let p: Vec<BigRational> = (0..d).map(|_| ratio(rng.gen_range(0..1_000_000), 1_000_000)).collect();
        let v = encode_cube(&p, k, 3).expect("point in the unit cube");
        let (corner, side) = decode_cube(&v, 3, d);
        cases += 1;
        if !p.iter().zip(&corner).all(|(x, c)| c <= x && *x < c.clone() + side.clone()) {
            bad += 1;
        }
    }
    out.push(count_check("cube encoding round trip", cases, bad));

    let (mut cases, mut bad) = (0, 0);
    for n in 1..=8 {
        let spec = CantorSpec::middle_thirds(n);
        let iso = build_psi(&spec);
        for b in 0..1u64 << n {
            let bin = Vertex::from_index(2, n, b);
            cases += 1;
            match iso.psi_inv(&bin).and_then(|v| iso.psi(&v)) {
                Ok(back) if back == bin => {}
                _ => bad += 1,
            }
        }
    }
    out.push(count_check("binary-to-Cantor isomorphism round trip", cases, bad));
    let full = FullTree { base: 4, height: 5 };
    out.push(Check::new("full tree prefix closed", check_prefix_closed(&full, 5), "height 5, base 4"));
    out
}

fn cantor() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, curve, d) in [("affine", DirectionCurve::affine(1), 1), ("moment", DirectionCurve::moment(2), 2)] {
        let dirs = DirectionSet::new(&CantorSpec::middle_thirds(7), &curve).expect("valid set");
        let pts = dirs.flat_f64();
        let (mut cases, mut bad) = (0, 0);
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let da = (dirs.points[i].param.as_f64() - dirs.points[j].param.as_f64()).abs();
                let dv: f64 = (0..d).map(|c| (pts[i * d + c] - pts[j * d + c]).powi(2)).sum::<f64>().sqrt();
                cases += 1;
                if dv < dirs.c_lower * da * (1.0 - 1e-9) || dv > dirs.c_upper * da * (1.0 + 1e-9) {
                    bad += 1;
                }
            }
        }
        out.push(count_check(&format!("bi-Lipschitz sandwich ({name})"), cases, bad));
    }
    out
}

fn sticky() -> Vec<Check> {
    let leaves: Vec<Vertex> = (0..9).map(|i| Vertex::from_index(3, 2, i)).collect();
    let mut verts = leaves.clone();
    verts.extend((0..3).map(|i| Vertex::from_index(3, 1, i)));
    let bad = (0..4096u64)
        .filter(|&mask| {
            let f = TableField::from_mask(3, 2, mask);
            !is_sticky(|v| Some(tau_of(&f, v)), &verts)
        })
        .count();
    let mut out = vec![count_check("every depth-two field induces a sticky map", 4096, bad)];
    let (mut cases, mut bad) = (0, 0);
    for &t1 in &leaves {
        for &t2 in &leaves {
            for a1 in 0..4 {
                for a2 in 0..4 {
                    let (x, y) = (Vertex::from_index(2, 2, a1), Vertex::from_index(2, 2, a2));
                    let p = enumerate_realizations(&[t1, t2], &[x, y]).expect("small tree");
                    cases += 1;
                    if sticky_admissible(&[(t1, x), (t2, y)]) == p.is_zero() {
                        bad += 1;
                    }
                }
            }
        }
    }
    out.push(count_check("admissible iff realizable", cases, bad));
    out
}

fn tube() -> Vec<Check> {
    let dirs = DirectionSet::new(&CantorSpec::middle_thirds(4), &DirectionCurve::affine(1)).expect("valid set");
    let params = TubeParams::for_directions(&dirs);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let thr = params.necessary_threshold();
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..2000 {
        let t1 = Tube::<BigRational>::new(&params, Vertex::from_index(3, 4, rng.gen_range(0..81)), &dirs.points[rng.gen_range(0..16)]);
        let t2 = Tube::<BigRational>::new(&params, Vertex::from_index(3, 4, rng.gen_range(0..81)), &dirs.points[rng.gen_range(0..16)]);
        let a = ratio(rng.gen_range(0..20), 10);
        let b = a.clone() + ratio(rng.gen_range(1..10), 10);
        let m = pair_measure(&t1, &t2, &a, &b);
        cases += 1;
        if m != pair_measure(&t2, &t1, &a, &b) || (m > BigRational::zero() && !intersection_necessary(&t1, &t2, &a, &b, &thr)) {
            bad += 1;
        }
    }
    let mut out = vec![count_check("pair measure symmetric, criterion has no false negatives", cases, bad)];
    let ctx = PossContext::<BigRational>::new(&params, &dirs);
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..100 {
        let p = vec![ratio(rng.gen_range(0..=20_000), 1000), ratio(rng.gen_range(-4000..4000), 1000)];
        cases += 1;
        if ctx.poss_definitional(&p).ok() != ctx.poss_affine(&p).ok() {
            bad += 1;
        }
    }
    out.push(count_check("Poss computed two ways agrees", cases, bad));
    out
}

fn percolation() -> Vec<Check> {
    let t2 = PercTree::full(2, 2);
    let r: BigRational = t2.resistance().ok().flatten().unwrap_or_else(BigRational::zero);
    let s: BigRational = t2.survival_exact();
    let mut out = vec![Check::new(
        "full binary tree of height two",
        r == ratio(1, 1) && s == ratio(39, 64),
        format!("R = {r}, survival = {s}"),
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut cases, mut bad) = (0, 0);
    for _ in 0..50 {
        let t = PercTree::random_subtree(3, 6, &mut rng);
        let r: BigRational = t.resistance().ok().flatten().expect("finite resistance");
        let (lo, hi) = lyons_bounds(&r);
        let s: BigRational = t.survival_exact();
        let short: BigRational = t.shorted_resistance().ok().flatten().expect("finite");
        cases += 1;
        if s < lo || s > hi || short > r {
            bad += 1;
        }
    }
    out.push(count_check("Lyons bounds and shorting on random trees", cases, bad));
    out
}

fn config() -> Vec<Check> {
    let leaves: Vec<Vertex> = (0..9).map(|i| Vertex::from_index(3, 2, i)).collect();
    let (mut cases, mut bad) = (0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for &a in &leaves {
        for &b in &leaves {
            for &c in &leaves {
                for &d in &leaves {
                    let t = [a, b, c, d];
                    if (0..4).any(|i| (i + 1..4).any(|j| t[i] == t[j])) {
                        continue;
                    }
                    cases += 1;
                    let Ok(class) = classify4(t) else {
                        bad += 1;
                        continue;
                    };
                    let g: Vec<Vertex> = class.given.iter().map(|&i| t[i]).collect();
                    let e: Vec<Vertex> = class.event.iter().map(|&i| t[i]).collect();
                    let slopes: Vec<Vertex> = (0..4).map(|_| Vertex::from_index(2, 2, rng.gen_range(0..4))).collect();
                    let agrees = oracle_check(&t, &slopes).map(|r| r.agrees()).unwrap_or(false);
                    if edge_count(&g, &e) != class.exponent || !agrees {
                        bad += 1;
                    }
                }
            }
        }
    }
    vec![count_check("four-point classes match enumeration at depth two", cases, bad)]
}

fn replay() -> Vec<Check> {
    let cfg = ExperimentConfig { n_min: 3, n_max: 3, samples: 4, quadrature: 64, ..Default::default() };
    let a = simulate(&cfg).and_then(|r| r.to_json());
    let b = simulate(&cfg).and_then(|r| r.to_json());
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    vec![Check::new("replay is byte identical", same, "simulate at N = 3, 4 samples")]
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_section_passes() {
        for s in super::SECTIONS {
            for c in super::run(s).unwrap() {
                assert!(c.passed, "{s}: {} ({})", c.name, c.detail);
            }
        }
        assert!(super::run("nope").is_none());
    }
}
