//! Random points in the far slab `[C₀, C₀+1] × [-2C₀, 2C₀]^d`.

use kakeya_core::cantor::DirectionSet;
use kakeya_core::tube::TubeParams;
use kakeya_core::{BigRational, Scalar};
use num_rational::Ratio;
use rand::Rng;

/// Denominator of exact random coordinates.
const DEN: i64 = 1 << 32;

fn uniform_exact<R: Rng>(rng: &mut R, lo: &BigRational, hi: &BigRational) -> BigRational {
    let u = BigRational::from(Ratio::new(rng.gen_range(0..DEN).into(), DEN.into()));
    lo.clone() + (hi.clone() - lo.clone()) * u
}

/// Volume of the far sampling region.
pub fn far_region_volume(params: &TubeParams) -> f64 {
    (4.0 * params.c0 as f64).powi(params.d as i32)
}

/// Uniform point of the far region, exact.
pub fn far_point<S: Scalar, R: Rng>(rng: &mut R, params: &TubeParams) -> Vec<S> {
    let c0 = BigRational::from_integer((params.c0 as i64).into());
    let two = BigRational::from_integer(2.into());
    let mut p = vec![uniform_exact(rng, &c0, &(c0.clone() + BigRational::from_integer(1.into())))];
    for _ in 0..params.d {
        p.push(uniform_exact(rng, &(-(two.clone() * c0.clone())), &(two.clone() * c0.clone())));
    }
    p.iter().map(S::from_rational).collect()
}

/// Point of the far region lying inside a random tube `P_{t,v}`.
pub fn far_point_in_tube<S: Scalar, R: Rng>(rng: &mut R, params: &TubeParams, dirs: &DirectionSet) -> Vec<S> {
    let leaf = kakeya_core::Vertex::from_index(params.base(), params.n, rng.gen_range(0..params.leaves()));
    let slope = &dirs.points[rng.gen_range(0..dirs.len())].slope;
    let c0 = BigRational::from_integer((params.c0 as i64).into());
    let x = uniform_exact(rng, &c0, &(c0.clone() + BigRational::from_integer(1.into())));
    let half = params.side() / BigRational::from_integer(2.into());
    let mut p = vec![x.clone()];
    for (c, v) in params.center(&leaf).iter().zip(slope) {
        p.push(c.clone() + x.clone() * v.clone() + uniform_exact(rng, &(-half.clone()), &half));
    }
    p.iter().map(S::from_rational).collect()
}
