use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CountResult, CountingOracle};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `Z·(1+ε)`; `Z_e·(1−ε)` for even `e`, `Z_e·(1+ε)` for odd `e`.
    Deterministic,
    /// Independent uniform factors in `[1−ε, 1+ε]`, derived from the seed and
    /// the query so repeated calls agree.
    SeededUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
    pub mode: NoiseMode,
}

impl NoiseSpec {
    pub fn deterministic(epsilon: f64) -> Self {
        Self {
            epsilon,
            seed: 0,
            mode: NoiseMode::Deterministic,
        }
    }

    pub fn seeded(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            seed,
            mode: NoiseMode::SeededUniform,
        }
    }

    /// Same noise model at precision `min(self.epsilon, epsilon)`.
    pub fn at_most(self, epsilon: f64) -> Self {
        Self {
            epsilon: self.epsilon.min(epsilon),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "noise ε must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Wraps an exact oracle so every output is off by a factor in `[1−ε, 1+ε]`.
#[derive(Clone)]
pub struct NoisyOracle {
    base: Arc<dyn CountingOracle>,
    spec: NoiseSpec,
}

impl std::fmt::Debug for NoisyOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoisyOracle").field("spec", &self.spec).finish_non_exhaustive()
    }
}

impl NoisyOracle {
    pub fn new(base: Arc<dyn CountingOracle>, spec: NoiseSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { base, spec })
    }

    pub fn spec(&self) -> NoiseSpec {
        self.spec
    }

    pub fn base(&self) -> &Arc<dyn CountingOracle> {
        &self.base
    }

    fn seed_for(&self, lambda: &DVector<f64>) -> u64 {
        let mut h = splitmix64(self.spec.seed);
        for x in lambda.iter() {
            h = splitmix64(h ^ x.to_bits());
        }
        h
    }
}

pub fn noisy_oracle(base: Arc<dyn CountingOracle>, spec: NoiseSpec) -> Result<NoisyOracle> {
    NoisyOracle::new(base, spec)
}

impl CountingOracle for NoisyOracle {
    fn m(&self) -> usize {
        self.base.m()
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        let mut r = self.base.count(lambda)?;
        let eps = self.spec.epsilon;
        if eps == 0.0 {
            return Ok(r);
        }
        match self.spec.mode {
            NoiseMode::Deterministic => {
                r.log_z += eps.ln_1p();
                for (e, l) in r.log_z_e.iter_mut().enumerate() {
                    *l += if e % 2 == 0 { (-eps).ln_1p() } else { eps.ln_1p() };
                }
            }
            NoiseMode::SeededUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed_for(lambda));
                let mut draw = || (eps * rng.random_range(-1.0..=1.0)).ln_1p();
                r.log_z += draw();
                for l in r.log_z_e.iter_mut() {
                    *l += draw();
                }
            }
        }
        Ok(r)
    }

    fn is_exact(&self) -> bool {
        self.spec.epsilon == 0.0
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
