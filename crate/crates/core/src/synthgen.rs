//! Synthetic embeddings with a controllable gender x label structure.
//!
//! Each example is `label_signal * y * e0 + gender_signal * g * e1 + noise`,
//! where `e0`, `e1` are the first two basis vectors and the noise is
//! isotropic Gaussian. Group sizes follow a joint distribution over
//! (gender, label) cells ordered `[male+pos, male+neg, female+pos, female+neg]`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datapipe::{Example, Gender, Manifest, ManifestHeader, Split, Task};
use crate::error::{Error, Result};

const fn joint(counts: [u32; 4]) -> [f64; 4] {
    let total = (counts[0] + counts[1] + counts[2] + counts[3]) as f64;
    [
        counts[0] as f64 / total,
        counts[1] as f64 / total,
        counts[2] as f64 / total,
        counts[3] as f64 / total,
    ]
}

/// Segment counts of the E-DAIC training split, gender x depression.
pub const DEPRESSION_TRAIN_JOINT: [f64; 4] = joint([719, 3227, 939, 2188]);
pub const DEPRESSION_TEST_JOINT: [f64; 4] = joint([308, 1330, 316, 113]);
pub const PTSD_TRAIN_JOINT: [f64; 4] = joint([1066, 2880, 1240, 1887]);
pub const PTSD_TEST_JOINT: [f64; 4] = joint([580, 1058, 269, 160]);

/// (gender, label) of each joint cell.
pub const CELLS: [(Gender, u8); 4] = [
    (Gender::Male, 1),
    (Gender::Male, 0),
    (Gender::Female, 1),
    (Gender::Female, 0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub dim: usize,
    pub joint: [f64; 4],
    pub label_signal: f64,
    pub gender_signal: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub split: Split,
    pub task: Task,
    /// Consecutive examples of one cell sharing a participant id.
    pub per_participant: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 2000,
            dim: 32,
            joint: DEPRESSION_TRAIN_JOINT,
            label_signal: 1.0,
            gender_signal: 1.0,
            noise_sigma: 0.5,
            seed: 42,
            split: Split::Train,
            task: Task::Depression,
            per_participant: 25,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!("synth dim must be at least 2, got {}", self.dim)));
        }
        let sum: f64 = self.joint.iter().sum();
        if self.joint.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "joint probabilities must be non-negative and sum to 1, got {:?}",
                self.joint
            )));
        }
        if !(self.label_signal >= 0.0 && self.gender_signal >= 0.0) {
            return Err(Error::Config("signal strengths must be >= 0".into()));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be positive".into()));
        }
        if self.per_participant == 0 {
            return Err(Error::Config("per_participant must be positive".into()));
        }
        Ok(())
    }
}

/// Largest-remainder rounding of `n * joint`; ties go to the lower cell.
pub fn allocate_counts(n: usize, joint: &[f64; 4]) -> [usize; 4] {
    let quotas: Vec<f64> = joint.iter().map(|p| n as f64 * p).collect();
    let mut counts: [usize; 4] = std::array::from_fn(|i| quotas[i].floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..4).collect();
    let rem = |i: usize| quotas[i] - quotas[i].floor();
    if assigned <= n {
        order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
        for &i in order.iter().cycle().take(n - assigned) {
            counts[i] += 1;
        }
    } else {
        // Only reachable when the joint sums to more than one.
        order.sort_by(|&a, &b| rem(a).total_cmp(&rem(b)).then(b.cmp(&a)));
        let mut excess = assigned - n;
        for &i in order.iter().cycle() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    counts
}

/// Standard normal pair by the Box-Muller transform.
fn gaussian_pair(rng: &mut impl Rng) -> (f64, f64) {
    // 1 - u lies in (0, 1], keeping the log finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

pub fn generate(config: &SynthConfig) -> Result<Vec<Example>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let counts = allocate_counts(config.n, &config.joint);
    let split = match config.split {
        Split::Train => "train",
        Split::Test => "test",
    };

    let mut out = Vec::with_capacity(config.n);
    let mut spare: Option<f64> = None;
    let mut normal = |rng: &mut ChaCha8Rng| match spare.take() {
        Some(z) => z,
        None => {
            let (a, b) = gaussian_pair(rng);
            spare = Some(b);
            a
        }
    };
    for (cell, (&(gender, label), &count)) in CELLS.iter().zip(&counts).enumerate() {
        for i in 0..count {
            let mut x: Vec<f64> = (0..config.dim)
                .map(|_| config.noise_sigma * normal(&mut rng))
                .collect();
            x[0] += config.label_signal * f64::from(label);
            x[1] += config.gender_signal * gender.index() as f64;
            out.push(Example {
                id: format!("{split}-{cell}-{i:05}"),
                participant: format!("{split}-p{cell}-{:03}", i / config.per_participant),
                gender,
                label,
                split: config.split,
                embedding: x.into_iter().map(|v| v as f32).collect(),
            });
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

pub fn generate_manifest(config: &SynthConfig) -> Result<Manifest> {
    Ok(Manifest::new(
        ManifestHeader {
            dim: config.dim,
            task: config.task,
        },
        generate(config)?,
    ))
}
