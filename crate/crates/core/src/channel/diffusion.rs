use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::Image;

pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;
pub const DEFAULT_STEPS: usize = 1000;

/// DDPM variance schedule. `beta[t - 1]` is the step-`t` variance and
/// `alpha_bar[t] = prod_{s <= t} (1 - beta_s)`, with `alpha_bar[0] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    #[serde(rename = "T")]
    pub steps: usize,
    pub beta: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::spec("T", "schedule needs at least one step"));
        }
        if let Some(b) = beta.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::spec("beta", format!("every beta must lie in (0, 1), got {b}")));
        }
        let mut alpha_bar = Vec::with_capacity(beta.len() + 1);
        alpha_bar.push(1.0);
        for b in &beta {
            let prev = *alpha_bar.last().unwrap();
            alpha_bar.push(prev * (1.0 - b));
        }
        Ok(NoiseSchedule { steps: beta.len(), beta, alpha_bar })
    }

    /// Betas evenly spaced from `start` to `end` inclusive.
    pub fn linear(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::spec("T", "schedule needs at least one step"));
        }
        let beta = if steps == 1 {
            vec![start]
        } else {
            (0..steps).map(|i| start + (end - start) * i as f64 / (steps - 1) as f64).collect()
        };
        Self::from_betas(beta)
    }

    pub fn alpha_bar_at(&self, t: usize) -> Result<f64> {
        self.alpha_bar
            .get(t)
            .copied()
            .ok_or_else(|| Error::Domain(format!("diffusion step {t} outside 0..={}", self.steps)))
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(DEFAULT_BETA_START, DEFAULT_BETA_END, DEFAULT_STEPS).expect("default schedule is valid")
    }
}

/// Text form: `linear` (defaults) or `linear:START:END:T`.
impl FromStr for NoiseSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::spec("schedule", format!("`{s}`: expected linear or linear:START:END:T"));
        match parts.as_slice() {
            ["linear"] => Ok(Self::default()),
            ["linear", a, b, t] => {
                Self::linear(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, t.parse().map_err(|_| bad())?)
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for NoiseSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "linear:{}:{}:{}", self.beta[0], self.beta[self.steps - 1], self.steps)
    }
}

/// `x_t` in the model's `[-1, 1]` convention, unclamped, channel-interleaved.
pub fn forward_diffuse_raw(img: &Image, t: usize, sched: &NoiseSchedule, seed: u64) -> Result<Vec<f64>> {
    let ab = sched.alpha_bar_at(t)?;
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(img
        .data()
        .iter()
        .map(|&v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            a * (2.0 * v - 1.0) + b * e
        })
        .collect())
}

/// `x_t = sqrt(ab_t) x_0 + sqrt(1 - ab_t) eps`, mapped back to `[0, 1]`
/// and clamped. `t = 0` returns the input unchanged.
pub fn forward_diffuse(img: &Image, t: usize, sched: &NoiseSchedule, seed: u64) -> Result<Image> {
    if t == 0 {
        return Ok(img.clone());
    }
    let raw = forward_diffuse_raw(img, t, sched, seed)?;
    Image::from_raw_clamped(img.height(), img.width(), img.channels(), raw.into_iter().map(|x| (x + 1.0) / 2.0).collect())
}
