//! Seeded fruit-layout generators for the benchmark regimes.
//!
//! Sampling always draws `f64` from a ChaCha8 stream and converts, so a
//! given spec and seed produce bit-identical layouts regardless of the
//! scalar the rest of the pipeline runs in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::LayoutError;
use crate::geom::Point3;
use crate::scalar::{real, Scalar};
use crate::types::{ArmId, FruitLayout, EPSILON_POS};
use crate::workspace::WorkspaceConfig;

/// Spatial regime of a generated layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    /// Uniform over the union of the arm boxes.
    Uniform,
    /// Gaussian blobs (std 0.15 m) around uniformly placed centers.
    Clustered,
}

/// How many fruits need more than one grasp attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureProfile {
    /// Fruits that need exactly two attempts.
    pub doubles: usize,
    /// Fruits that need exactly three attempts.
    pub triples: usize,
}

impl FailureProfile {
    pub fn none() -> Self {
        FailureProfile::default()
    }

    pub fn new(doubles: usize, triples: usize) -> Self {
        FailureProfile { doubles, triples }
    }
}

/// Recipe for one reproducible layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub id: String,
    pub n_fruits: usize,
    pub distribution: Distribution,
    /// Number of Gaussian centers when clustered; ignored for uniform.
    #[serde(default = "default_cluster_count")]
    pub cluster_count: usize,
    #[serde(default)]
    pub failure_profile: FailureProfile,
    pub seed: u64,
}

fn default_cluster_count() -> usize {
    3
}

impl LayoutSpec {
    pub fn uniform(id: impl Into<String>, n: usize, profile: FailureProfile, seed: u64) -> Self {
        LayoutSpec {
            id: id.into(),
            n_fruits: n,
            distribution: Distribution::Uniform,
            cluster_count: default_cluster_count(),
            failure_profile: profile,
            seed,
        }
    }

    pub fn clustered(
        id: impl Into<String>,
        n: usize,
        clusters: usize,
        profile: FailureProfile,
        seed: u64,
    ) -> Self {
        LayoutSpec {
            id: id.into(),
            n_fruits: n,
            distribution: Distribution::Clustered,
            cluster_count: clusters,
            failure_profile: profile,
            seed,
        }
    }

    /// The four benchmark regimes: 30/60 fruits, even (A) and clustered (B)
    /// distributions, with their grasp-failure profiles.
    pub fn preset(name: &str, seed: u64) -> Result<Self, LayoutError> {
        match name {
            "30-A" => Ok(Self::uniform("30-A", 30, FailureProfile::new(7, 2), seed)),
            "30-B" => Ok(Self::clustered(
                "30-B",
                30,
                3,
                FailureProfile::new(8, 4),
                seed,
            )),
            "60-A" => Ok(Self::uniform("60-A", 60, FailureProfile::new(10, 5), seed)),
            "60-B" => Ok(Self::clustered(
                "60-B",
                60,
                3,
                FailureProfile::new(12, 3),
                seed,
            )),
            other => Err(LayoutError::UnknownPreset(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let FailureProfile { doubles, triples } = self.failure_profile;
        if doubles + triples > self.n_fruits {
            return Err(LayoutError::ProfileTooLarge {
                n: self.n_fruits,
                doubles,
                triples,
            });
        }
        Ok(())
    }
}

const MAX_REJECTIONS: usize = 10_000;

/// Rounds to the 6-decimal precision the layout file format carries, so the
/// in-memory instance and its file are the same numbers.
fn quantize(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn in_union<S: Scalar>(p: Point3<S>, ws: &WorkspaceConfig<S>) -> bool {
    ArmId::all()
        .iter()
        .any(|&a| ws.arm_box(a).contains(p))
}

/// Generates a layout: positions inside the union of the arm boxes, at
/// least 1 mm apart pairwise, with exactly the requested attempt histogram.
/// Deterministic for a given spec.
pub fn generate<S: Scalar>(
    spec: &LayoutSpec,
    ws: &WorkspaceConfig<S>,
) -> Result<FruitLayout<S>, LayoutError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ext = ws.extents();
    let lo: [f64; 3] = ext.min.map(|c| c.to_config());
    let hi: [f64; 3] = ext.max.map(|c| c.to_config());

    let centers: Vec<[f64; 3]> = match spec.distribution {
        Distribution::Uniform => Vec::new(),
        Distribution::Clustered => (0..spec.cluster_count.max(1))
            .map(|_| sample_union(&mut rng, lo, hi, ws))
            .collect::<Result<_, _>>()?,
    };

    let mut positions: Vec<Point3<S>> = Vec::with_capacity(spec.n_fruits);
    let mut rejections = 0usize;
    let eps_sq = EPSILON_POS * EPSILON_POS;
    while positions.len() < spec.n_fruits {
        let raw = match spec.distribution {
            Distribution::Uniform => sample_union_counted(&mut rng, lo, hi, ws, &mut rejections)?,
            Distribution::Clustered => {
                let c = centers[rng.gen_range(0..centers.len())];
                sample_cluster(&mut rng, c, lo, hi, ws, &mut rejections)?
            }
        };
        let p = raw.map(quantize);
        let ps: Point3<S> = [real(p[0]), real(p[1]), real(p[2])];
        let too_close = positions.iter().any(|q| {
            let d: f64 = (0..3)
                .map(|i| (q[i].to_config() - p[i]).powi(2))
                .sum();
            d < eps_sq
        });
        if too_close {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(LayoutError::GenerationFailed {
                    requested: spec.n_fruits,
                    placed: positions.len(),
                    rejections,
                });
            }
            continue;
        }
        positions.push(ps);
    }

    // Assign the attempt histogram to uniformly chosen fruits.
    let mut order: Vec<usize> = (0..spec.n_fruits).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut attempts = vec![1u8; spec.n_fruits];
    let FailureProfile { doubles, triples } = spec.failure_profile;
    for &f in order.iter().take(doubles) {
        attempts[f] = 2;
    }
    for &f in order.iter().skip(doubles).take(triples) {
        attempts[f] = 3;
    }

    FruitLayout::new(spec.id.clone(), positions, attempts)
}

fn sample_union<S: Scalar>(
    rng: &mut ChaCha8Rng,
    lo: [f64; 3],
    hi: [f64; 3],
    ws: &WorkspaceConfig<S>,
) -> Result<[f64; 3], LayoutError> {
    let mut rejections = 0;
    sample_union_counted(rng, lo, hi, ws, &mut rejections)
}

fn sample_union_counted<S: Scalar>(
    rng: &mut ChaCha8Rng,
    lo: [f64; 3],
    hi: [f64; 3],
    ws: &WorkspaceConfig<S>,
    rejections: &mut usize,
) -> Result<[f64; 3], LayoutError> {
    loop {
        let p = [
            rng.gen_range(lo[0]..=hi[0]),
            rng.gen_range(lo[1]..=hi[1]),
            rng.gen_range(lo[2]..=hi[2]),
        ];
        let ps: Point3<S> = [real(p[0]), real(p[1]), real(p[2])];
        if in_union(ps, ws) {
            return Ok(p);
        }
        *rejections += 1;
        if *rejections >= MAX_REJECTIONS {
            return Err(LayoutError::GenerationFailed {
                requested: 1,
                placed: 0,
                rejections: *rejections,
            });
        }
    }
}

const CLUSTER_STD: f64 = 0.15;

fn sample_cluster<S: Scalar>(
    rng: &mut ChaCha8Rng,
    center: [f64; 3],
    lo: [f64; 3],
    hi: [f64; 3],
    ws: &WorkspaceConfig<S>,
    rejections: &mut usize,
) -> Result<[f64; 3], LayoutError> {
    loop {
        let p = [
            center[0] + CLUSTER_STD * standard_normal(rng),
            center[1] + CLUSTER_STD * standard_normal(rng),
            center[2] + CLUSTER_STD * standard_normal(rng),
        ];
        let inside = (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i]);
        let ps: Point3<S> = [real(p[0]), real(p[1]), real(p[2])];
        if inside && in_union(ps, ws) {
            return Ok(p);
        }
        *rejections += 1;
        if *rejections >= MAX_REJECTIONS {
            return Err(LayoutError::GenerationFailed {
                requested: 1,
                placed: 0,
                rejections: *rejections,
            });
        }
    }
}

/// Box-Muller from two uniform draws; keeps the stream identical across
/// platforms without pulling in a distributions crate.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
