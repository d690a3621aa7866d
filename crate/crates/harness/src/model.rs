//! Sampling a sticky random family at depth `N` and measuring its union.

use kakeya_core::cantor::DirectionSet;
use kakeya_core::sticky::{tau_all, EdgeField, KeyedField};
use kakeya_core::tube::{Tube, TubeParams};
use kakeya_core::union::{union_volume, TubeFamily, VolumeOptions};
use kakeya_core::Vertex;
use serde::Serialize;

use crate::config::{sample_seed, tags, ExperimentConfig};

/// One realization of the random family at a fixed depth.
pub struct Realization<'a> {
    pub dirs: &'a DirectionSet,
    pub params: &'a TubeParams,
    /// Binary slope address of each root cube, by leaf index.
    pub addresses: Vec<u64>,
}

impl<'a> Realization<'a> {
    pub fn from_field<F: EdgeField>(dirs: &'a DirectionSet, params: &'a TubeParams, field: &F) -> Self {
        Realization { dirs, params, addresses: tau_all(field, params.n) }
    }

    pub fn keyed(dirs: &'a DirectionSet, params: &'a TubeParams, seed: u64) -> Self {
        Self::from_field(dirs, params, &KeyedField::new(seed, params.base()))
    }

    pub fn family(&self) -> TubeFamily {
        TubeFamily::from_addresses(self.params, self.dirs, &self.addresses)
    }

    /// Every tube in scalar type `f64`.
    pub fn tubes(&self) -> Vec<Tube<f64>> {
        self.addresses
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let root = Vertex::from_index(self.params.base(), self.params.n, i as u64);
                Tube::new(self.params, root, &self.dirs.points[a as usize])
            })
            .collect()
    }
}

/// Seed of the edge field for sample `i` at depth `n`.
pub fn field_seed(cfg: &ExperimentConfig, n: u32, i: usize) -> u64 {
    sample_seed(cfg.seed, tags::FIELD, n, i as u64)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Volumes {
    pub near: f64,
    pub far: f64,
    pub near_half_width: f64,
    pub far_half_width: f64,
}

/// Union volume over `[a, a + 1] × R^d` with `cfg.quadrature` midpoint
/// cross-sections per unit length.
pub fn slab_volume(fam: &TubeFamily, a: f64, cfg: &ExperimentConfig, mc_seed: u64) -> (f64, f64) {
    let opts = VolumeOptions { samples_per_slab: 1, mc_points: cfg.mc_points, seed: mc_seed };
    let est = union_volume(fam, a, a + 1.0, 1.0 / cfg.quadrature as f64, opts);
    (est.volume, est.half_width)
}

/// Near (`[0,1]`) and far (`[C₀, C₀+1]`) volumes of one realization.
pub fn volumes(real: &Realization, cfg: &ExperimentConfig, mc_seed: u64) -> Volumes {
    let fam = real.family();
    let (near, nh) = slab_volume(&fam, 0.0, cfg, mc_seed);
    let (far, fh) = slab_volume(&fam, real.params.c0 as f64, cfg, mc_seed ^ 1);
    Volumes { near, far, near_half_width: nh, far_half_width: fh }
}
