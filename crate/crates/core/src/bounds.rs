//! Regret accounting, asymptotic lower-bound constants and closed-form
//! concentration functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{BanditInstance, PowerProfile};

/// Expected instantaneous regret `Σ_k Δ_k p_k` of a profile.
pub fn regret_step(instance: &BanditInstance, profile: &PowerProfile) -> Result<f64> {
    if profile.len() != instance.arms() {
        return Err(Error::DimensionMismatch {
            expected: instance.arms(),
            got: profile.len(),
        });
    }
    Ok(instance
        .gaps()
        .iter()
        .zip(profile.as_slice())
        .map(|(d, p)| d * p)
        .sum())
}

/// Per-round and cumulative pseudo-regret.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub per_round: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            per_round: Vec::with_capacity(n),
            cumulative: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, regret: f64) {
        let total = self.total() + regret;
        self.per_round.push(regret);
        self.cumulative.push(total);
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.per_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_round.is_empty()
    }
}

/// Coefficients of `log T` in the four regret lower bounds.
///
/// Spreading policies, known or unknown variance, and non-spreading policies
/// with known variance share `Σ σ_k²/Δ_k`. Non-spreading policies with unknown
/// variance pay `Σ Δ_k / log(1 + Δ_k²/σ_k²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub spreading_known: f64,
    pub spreading_unknown: f64,
    pub ns_known: f64,
    pub ns_unknown: f64,
}

pub fn lower_bound_constants(instance: &BanditInstance) -> BoundConstants {
    let (mut spreading, mut ns_unknown) = (0.0, 0.0);
    for (k, (&gap, &var)) in instance.gaps().iter().zip(instance.variances()).enumerate() {
        if k == instance.best_arm() {
            continue;
        }
        spreading += var / gap;
        ns_unknown += gap / (gap * gap / var).ln_1p();
    }
    BoundConstants {
        spreading_known: spreading,
        spreading_unknown: spreading,
        ns_known: spreading,
        ns_unknown,
    }
}

/// `σ_k²/Δ_k²` for each suboptimal arm: the `log T` coefficient of the
/// cumulative power a uniformly efficient policy must spend there.
pub fn power_constants(instance: &BanditInstance) -> Vec<(usize, f64)> {
    instance
        .gaps()
        .iter()
        .zip(instance.variances())
        .enumerate()
        .filter(|(k, _)| *k != instance.best_arm())
        .map(|(k, (gap, var))| (k, var / (gap * gap)))
        .collect()
}

fn positive(x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NonPositiveArgument(x))
    }
}

/// `h(x) = x − log(1 + x)`.
pub fn h(x: f64) -> Result<f64> {
    let x = positive(x)?;
    // below ~1e-3 the subtraction cancels; use the alternating series
    if x < 1e-3 {
        let mut term = x;
        let mut sum = 0.0;
        for n in 2..12 {
            term *= -x;
            sum -= term / n as f64;
        }
        return Ok(sum);
    }
    Ok(x - x.ln_1p())
}

/// `P(‖x̄ − μ‖ ≥ ε) = exp(−z ε²/σ²)` given the power trajectory.
pub fn mean_exceedance(z: f64, sigma2: f64, eps: f64) -> Result<f64> {
    let (z, sigma2, eps) = (positive(z)?, positive(sigma2)?, positive(eps)?);
    Ok((-z * eps * eps / sigma2).exp())
}

/// Upper bound `exp(−t h(ε/σ²))` on `P(S(t) ≥ t(σ² + ε))`.
pub fn variance_tail_bound(t: u64, sigma2: f64, eps: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::NonPositiveArgument(t as f64));
    }
    let (sigma2, eps) = (positive(sigma2)?, positive(eps)?);
    Ok((-(t as f64) * h(eps / sigma2)?).exp())
}

/// CDF of the χ² law with an even number `2m` of degrees of freedom:
/// `1 − e^{−x/2} Σ_{i<m} (x/2)^i / i!`.
///
/// Terms are formed in log space. Below the mode the complementary series
/// `Σ_{i≥m}` is summed instead, avoiding cancellation when the CDF is small.
pub fn chi2_cdf_even(dof: u32, x: f64) -> Result<f64> {
    if dof < 2 || !dof.is_multiple_of(2) {
        return Err(Error::OddDof(dof));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::NegativeX(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let m = (dof / 2) as u64;
    let half = x / 2.0;
    let log_half = half.ln();
    // log of e^{-x/2} (x/2)^i / i!
    let mut log_term = -half;
    if half < m as f64 {
        for i in 1..=m {
            log_term += log_half - (i as f64).ln();
        }
        let mut sum = 0.0;
        let mut i = m;
        loop {
            let term = log_term.exp();
            sum += term;
            if term <= sum * 1e-17 || term == 0.0 {
                break;
            }
            i += 1;
            log_term += log_half - (i as f64).ln();
        }
        Ok(sum.min(1.0))
    } else {
        let mut sum = 0.0;
        for i in 0..m {
            if i > 0 {
                log_term += log_half - (i as f64).ln();
            }
            sum += log_term.exp();
        }
        Ok((1.0 - sum).clamp(0.0, 1.0))
    }
}
