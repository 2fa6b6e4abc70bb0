//! Weighted sufficient statistics of one arm.
//!
//! With powers `p_ℓ` and observations `X_ℓ`, the statistics are
//!
//! ```text
//! z = Σ p_ℓ,   x̄ = Σ p_ℓ X_ℓ / z,   S = Σ p_ℓ ‖X_ℓ − x̄‖²
//! ```
//!
//! [`ArmStats::update`] maintains them with a weighted West recursion;
//! [`batch_stats`] evaluates the sums directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Vec2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    z: f64,
    xbar: Vec2,
    scatter: f64,
    rounds: u64,
    observations: u64,
}

impl ArmStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cumulative power.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Weighted sample mean.
    pub fn xbar(&self) -> Vec2 {
        self.xbar
    }

    /// Weighted scatter `S`.
    pub fn scatter(&self) -> f64 {
        self.scatter
    }

    /// Rounds elapsed, including zero-power ones.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Rounds with positive power.
    pub fn observations(&self) -> u64 {
        self.observations
    }

    /// Folds in one round. `x` must be present exactly when `p > 0`.
    pub fn update(&mut self, p: f64, x: Option<Vec2>) -> Result<()> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::NegativePower(p));
        }
        match (p > 0.0, x) {
            (true, None) => return Err(Error::MissingObservation),
            (false, Some(_)) => return Err(Error::UnexpectedObservation),
            (false, None) => {}
            (true, Some(x)) => {
                let z = self.z + p;
                let w = p / z;
                let d0 = x[0] - self.xbar[0];
                let d1 = x[1] - self.xbar[1];
                let xbar = [self.xbar[0] + w * d0, self.xbar[1] + w * d1];
                self.scatter += p * (d0 * (x[0] - xbar[0]) + d1 * (x[1] - xbar[1]));
                self.xbar = xbar;
                self.z = z;
                self.observations += 1;
            }
        }
        self.rounds += 1;
        Ok(())
    }

    /// Functional form of [`update`](Self::update).
    pub fn updated(mut self, p: f64, x: Option<Vec2>) -> Result<Self> {
        self.update(p, x)?;
        Ok(self)
    }
}

/// Direct evaluation of the weighted statistics. Zero-power entries are ignored.
pub fn batch_stats(powers: &[f64], xs: &[Vec2]) -> Result<ArmStats> {
    if powers.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: powers.len(),
            got: xs.len(),
        });
    }
    if let Some(&p) = powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::NegativePower(p));
    }
    let z: f64 = powers.iter().sum();
    if z <= 0.0 {
        return Err(Error::AllZeroPower);
    }
    let mut acc = [0.0; 2];
    for (p, x) in powers.iter().zip(xs) {
        acc[0] += p * x[0];
        acc[1] += p * x[1];
    }
    let xbar = [acc[0] / z, acc[1] / z];
    let scatter = powers
        .iter()
        .zip(xs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, x)| p * ((x[0] - xbar[0]).powi(2) + (x[1] - xbar[1]).powi(2)))
        .sum();
    Ok(ArmStats {
        z,
        xbar,
        scatter,
        rounds: powers.len() as u64,
        observations: powers.iter().filter(|p| **p > 0.0).count() as u64,
    })
}
