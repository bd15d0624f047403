//! Seeded control-signal generators and measurement noise.
//!
//! All randomness flows through a named 64-bit-seedable generator (ChaCha8)
//! with Box-Muller normals, so every signal is reproducible from its seed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::SignalSeries;

use super::experiment::ExperimentConfig;

/// Standard normal draws via Box-Muller on a ChaCha8 stream.
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u in (0, 1] keeps the log finite.
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Mix a base seed, replication index and stream id into an independent
/// per-stream seed (splitmix64 finalisers).
pub fn derive_seed(base: u64, replication: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(replication.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(stream.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Fold an unbounded walk position into [0, 1] by perfect reflection at both
/// boundaries.
pub(crate) fn reflect_to_unit(q: f64) -> f64 {
    let f = q.floor();
    if (f as i64) % 2 == 0 {
        q - f
    } else {
        1.0 - q + f
    }
}

/// Piecewise-constant control: a uniformly random level held for each
/// interval of `coarse_dt`, sampled at the plant step.
pub fn gen_discrete_control(cfg: &ExperimentConfig, seed: u64) -> Result<SignalSeries> {
    cfg.validate()?;
    let per_block = cfg.samples_per_block()?;
    let blocks = cfg.block_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(blocks * per_block);
    for _ in 0..blocks {
        let level = rng.gen_range(1..=cfg.cols);
        let x = cfg.x_min + (level - 1) as f64 * cfg.x_step;
        values.extend(std::iter::repeat_n(x, per_block));
    }
    SignalSeries::new(values, cfg.plant.dt)
}

/// Bounded random-walk control: a scaled Wiener increment per plant step,
/// reflected back into [0, 1] at the boundaries. Starts at 0.
pub fn gen_reflected_walk(cfg: &ExperimentConfig, seed: u64) -> Result<SignalSeries> {
    cfg.validate()?;
    let total = cfg.block_count() * cfg.samples_per_block()?;
    let mut normals = GaussianSource::new(seed);
    let step_scale = cfg.walk_rate * cfg.plant.dt.sqrt();
    let mut values = Vec::with_capacity(total);
    let mut q = 0.0f64;
    values.push(reflect_to_unit(q));
    for _ in 1..total {
        q += step_scale * normals.next_normal();
        values.push(reflect_to_unit(q));
    }
    SignalSeries::new(values, cfg.plant.dt)
}

/// Add independent Gaussian measurement noise, `scale * sigma` standard
/// deviation per sample. `sigma == 0` returns the input unchanged.
pub fn add_noise(series: &SignalSeries, scale: f64, sigma: f64, seed: u64) -> Result<SignalSeries> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise level must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(series.clone());
    }
    let mut normals = GaussianSource::new(seed);
    let sd = scale * sigma;
    let values = series
        .values()
        .iter()
        .map(|&v| v + sd * normals.next_normal())
        .collect();
    SignalSeries::new(values, series.dt())
}
