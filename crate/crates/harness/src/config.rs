//! Experiment configuration, its content hash and per-sample seeds.

use kakeya_core::cantor::{CantorSpec, DirectionCurve, DirectionSet, Selector};
use kakeya_core::sticky::splitmix64;
use kakeya_core::tube::TubeParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Which direction curve to push the Cantor points through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveChoice {
    /// Every component equal to `t`.
    Affine,
    /// `(t, t², …, t^d)`.
    Moment,
    /// Rational coefficients in ascending powers, one row per component.
    Custom { coefficients: Vec<Vec<String>> },
}

impl CurveChoice {
    pub fn build(&self, d: usize) -> Result<DirectionCurve> {
        let curve = match self {
            CurveChoice::Affine => DirectionCurve::affine(d),
            CurveChoice::Moment => DirectionCurve::moment(d),
            CurveChoice::Custom { coefficients } => {
                let text = serde_json::json!({ "coefficients": coefficients }).to_string();
                DirectionCurve::from_json(&text)?
            }
        };
        if curve.d() != d {
            return Err(HarnessError::Config(format!("curve has {} components but d = {d}", curve.d())));
        }
        Ok(curve)
    }
}

/// Everything an experiment reads. `out_dir` is not part of the hash, so
/// moving the output does not change the identity of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub m: u32,
    pub n_min: u32,
    pub n_max: u32,
    pub d: usize,
    pub curve: CurveChoice,
    pub selector: Selector,
    /// Random fields per `N`.
    pub samples: usize,
    pub seed: u64,
    /// Values of `N - R` for slab experiments; empty means every `R` with
    /// `2 ≤ N - R ≤ N - 1` (or `1 ≤ N - R ≤ N` when that is empty).
    #[serde(default)]
    pub slab_gaps: Vec<u32>,
    /// Midpoint cross-sections per unit length when integrating union volumes.
    pub quadrature: u32,
    /// Monte Carlo points per cross-section for `d ≥ 3`.
    pub mc_points: usize,
    /// Points `x` drawn for the pointwise and percolation experiments.
    pub points: usize,
    /// Resource guard on the number of root cubes `M^{Nd}`.
    pub max_leaves: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            m: 3,
            n_min: 4,
            n_max: 8,
            d: 1,
            curve: CurveChoice::Affine,
            selector: Selector::Endpoints,
            samples: 200,
            seed: 1,
            slab_gaps: Vec::new(),
            quadrature: 1024,
            mc_points: 2048,
            points: 100,
            max_leaves: 10_000_000,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not {SCHEMA_VERSION}", self.schema_version));
        }
        if self.m < 3 {
            return bad(format!("M = {} must be at least 3", self.m));
        }
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad(format!("bad N range {}..={}", self.n_min, self.n_max));
        }
        if self.quadrature == 0 || self.samples == 0 {
            return bad("quadrature and samples must be positive".into());
        }
        if self.slab_gaps.contains(&0) {
            return bad("slab gaps N - R must be positive".into());
        }
        for n in self.n_min..=self.n_max {
            self.check_leaves(n)?;
        }
        Ok(())
    }

    /// Enforce the leaf-count guard before anything of size `M^{Nd}` is built.
    pub fn check_leaves(&self, n: u32) -> Result<u64> {
        let exp = n as u64 * self.d as u64;
        let leaves = (self.m as u128).checked_pow(exp as u32).unwrap_or(u128::MAX);
        if leaves > self.max_leaves as u128 {
            return Err(HarnessError::Resource(format!(
                "M^(Nd) = {}^{exp} root cubes exceeds the guard {}",
                self.m, self.max_leaves
            )));
        }
        Ok(leaves as u64)
    }

    pub fn n_values(&self) -> impl Iterator<Item = u32> {
        self.n_min..=self.n_max
    }

    /// The `N - R` values swept at depth `n`.
    pub fn gaps(&self, n: u32) -> Vec<u32> {
        if !self.slab_gaps.is_empty() {
            return self.slab_gaps.iter().copied().filter(|&g| g <= n).collect();
        }
        if n >= 3 {
            (2..n).collect()
        } else {
            (1..=n).collect()
        }
    }

    /// SHA-256 of the canonical JSON of the scientific fields.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn directions(&self, n: u32) -> Result<DirectionSet> {
        let spec = CantorSpec::new(self.m, n, self.selector.clone())?;
        Ok(DirectionSet::new(&spec, &self.curve.build(self.d)?)?)
    }

    /// Directions and tube parameters at depth `n`, after the resource guard.
    pub fn model(&self, n: u32) -> Result<(DirectionSet, TubeParams)> {
        self.check_leaves(n)?;
        let dirs = self.directions(n)?;
        let params = TubeParams::for_directions(&dirs);
        Ok((dirs, params))
    }
}

/// Seed of sample `i` at depth `n` of the stream `tag`. Independent of
/// evaluation order, so parallel runs reproduce serial ones.
pub fn sample_seed(base: u64, tag: u64, n: u32, i: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ n as u64) ^ i)
}

/// Stream tags, one per experiment.
pub mod tags {
    pub const FIELD: u64 = 1;
    pub const VOLUME_MC: u64 = 2;
    pub const POINTS: u64 = 3;
    pub const AUDIT: u64 = 4;
    pub const COUNTING: u64 = 5;
}
