//! Ground-truth bandit instances, power profiles and the outcome law.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the outcome plane.
pub type Vec2 = [f64; 2];

/// Norm ties closer than this are rejected.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of a profile's sum from one.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn norm_sq(v: Vec2) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

#[inline]
pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// Index of the unique maximum, or the first pair closer than [`TIE_TOLERANCE`].
pub(crate) fn unique_argmax(values: &[f64]) -> std::result::Result<usize, (usize, usize)> {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    for (k, &v) in values.iter().enumerate() {
        if k != best && (values[best] - v).abs() <= TIE_TOLERANCE {
            return Err((best.min(k), best.max(k)));
        }
    }
    Ok(best)
}

/// Lowest index attaining the maximum.
pub(crate) fn first_argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = k;
            best_v = v;
        }
    }
    best
}

/// Arm means, noise variances and the derived optimal arm and gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceSpec", into = "InstanceSpec")]
pub struct BanditInstance {
    means: Vec<Vec2>,
    variances: Vec<f64>,
    norms: Vec<f64>,
    gaps: Vec<f64>,
    best: usize,
}

#[derive(Serialize, Deserialize)]
struct InstanceSpec {
    means: Vec<Vec2>,
    variances: Vec<f64>,
}

impl TryFrom<InstanceSpec> for BanditInstance {
    type Error = Error;

    fn try_from(spec: InstanceSpec) -> Result<Self> {
        BanditInstance::new(spec.means, spec.variances)
    }
}

impl From<BanditInstance> for InstanceSpec {
    fn from(inst: BanditInstance) -> Self {
        InstanceSpec {
            means: inst.means,
            variances: inst.variances,
        }
    }
}

impl BanditInstance {
    pub fn new(means: Vec<Vec2>, variances: Vec<f64>) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: variances.len(),
            });
        }
        if means.len() < 2 {
            return Err(Error::TooFewArms(means.len()));
        }
        if let Some(k) = means
            .iter()
            .position(|m| !m[0].is_finite() || !m[1].is_finite())
        {
            return Err(Error::NonFiniteMean(k));
        }
        if let Some((arm, &value)) = variances
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveVariance { arm, value });
        }
        let norms: Vec<f64> = means.iter().copied().map(norm).collect();
        let best = unique_argmax(&norms)
            .map_err(|(first, second)| Error::TiedOptimum { first, second })?;
        let gaps = norms
            .iter()
            .enumerate()
            .map(|(k, n)| if k == best { 0.0 } else { norms[best] - n })
            .collect();
        Ok(Self {
            means,
            variances,
            norms,
            gaps,
            best,
        })
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec2] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `‖μ_k‖` for every arm.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `Δ_k = ‖μ⋆‖ − ‖μ_k‖`; zero at the optimal arm.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn best_arm(&self) -> usize {
        self.best
    }

    pub fn best_norm(&self) -> f64 {
        self.norms[self.best]
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// A point on the probability simplex over arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile(Vec<f64>);

impl PowerProfile {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProfile("empty profile".into()));
        }
        if let Some(v) = p
            .iter()
            .find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::InvalidProfile(format!("entry {v} outside [0, 1]")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidProfile(format!("entries sum to {sum}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(arms: usize) -> Self {
        Self(vec![1.0 / arms as f64; arms])
    }

    pub fn one_hot(arms: usize, arm: usize) -> Self {
        let mut p = vec![0.0; arms];
        p[arm] = 1.0;
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The single arm carrying all power, if any.
    pub fn support_arm(&self) -> Option<usize> {
        let mut nz = self.0.iter().enumerate().filter(|(_, p)| **p > 0.0);
        match (nz.next(), nz.next()) {
            (Some((k, _)), None) => Some(k),
            _ => None,
        }
    }
}

impl std::ops::Index<usize> for PowerProfile {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// One round of observations; arms without power yield nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub values: Vec<Option<Vec2>>,
}

/// Draws `X_k ~ N(μ_k, σ_k²/(2 p_k) I₂)` for every arm with `p_k > 0`.
pub fn sample_outcome<R: Rng + ?Sized>(
    instance: &BanditInstance,
    profile: &PowerProfile,
    rng: &mut R,
) -> Result<Outcome> {
    if profile.len() != instance.arms() {
        return Err(Error::InvalidProfile(format!(
            "{} entries for {} arms",
            profile.len(),
            instance.arms()
        )));
    }
    let values = instance
        .means
        .iter()
        .zip(&instance.variances)
        .zip(profile.as_slice())
        .map(|((mu, var), &p)| {
            (p > 0.0).then(|| {
                let sd = (var / (2.0 * p)).sqrt();
                let g0: f64 = rng.sample(StandardNormal);
                let g1: f64 = rng.sample(StandardNormal);
                [mu[0] + sd * g0, mu[1] + sd * g1]
            })
        })
        .collect();
    Ok(Outcome { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn optimal_arm_and_gaps() {
        let inst = BanditInstance::new(vec![[2.0, 0.0], [1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(inst.best_arm(), 0);
        assert_eq!(inst.gaps(), &[0.0, 1.0]);
    }

    #[test]
    fn construction_errors() {
        let tie = BanditInstance::new(
            vec![[0.0, 3.0], [3.0, 0.0], [1.0, 1.0]],
            vec![1.0, 4.0, 9.0],
        );
        assert_eq!(
            tie,
            Err(Error::TiedOptimum {
                first: 0,
                second: 1
            })
        );
        assert_eq!(
            BanditInstance::new(vec![[1.0, 0.0]], vec![1.0]),
            Err(Error::TooFewArms(1))
        );
        assert!(matches!(
            BanditInstance::new(vec![[1.0, 0.0], [2.0, 0.0]], vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            BanditInstance::new(vec![[1.0, 0.0], [2.0, 0.0]], vec![1.0, 0.0]),
            Err(Error::NonPositiveVariance { arm: 1, .. })
        ));
        assert!(matches!(
            BanditInstance::new(vec![[f64::NAN, 0.0], [2.0, 0.0]], vec![1.0, 1.0]),
            Err(Error::NonFiniteMean(0))
        ));
    }

    #[test]
    fn profile_validation() {
        assert!(PowerProfile::new(vec![0.5, 0.5]).is_ok());
        assert!(PowerProfile::new(vec![0.5, 0.6]).is_err());
        assert!(PowerProfile::new(vec![1.5, -0.5]).is_err());
        assert!(PowerProfile::new(vec![]).is_err());
        assert_eq!(PowerProfile::one_hot(3, 2).support_arm(), Some(2));
        assert_eq!(PowerProfile::uniform(3).support_arm(), None);
    }

    #[test]
    fn zero_power_yields_no_observation() {
        let inst = BanditInstance::new(vec![[2.0, 0.0], [1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let mut rng = RandomStream::new(1);
        let out = sample_outcome(&inst, &PowerProfile::one_hot(2, 0), &mut rng).unwrap();
        assert!(out.values[0].is_some());
        assert!(out.values[1].is_none());
        let bad = PowerProfile::uniform(3);
        assert!(matches!(
            sample_outcome(&inst, &bad, &mut rng),
            Err(Error::InvalidProfile(_))
        ));
    }

    fn coordinate_variance(var: f64, p: Vec<f64>, n: usize) -> f64 {
        let inst = BanditInstance::new(vec![[0.0, 0.0], [1.0, -1.0]], vec![var, var]).unwrap();
        let profile = PowerProfile::new(p).unwrap();
        let mut rng = RandomStream::new(11);
        let mut xs = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let x = sample_outcome(&inst, &profile, &mut rng).unwrap().values[1].unwrap();
            xs.push(x[0] - 1.0);
            xs.push(x[1] + 1.0);
        }
        xs.iter().map(|v| v * v).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn unit_power_halves_variance() {
        // σ² = 2, p = 1: per-coordinate variance 1
        let v = coordinate_variance(2.0, vec![0.0, 1.0], 50_000);
        assert!((v - 1.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn split_power_empirical_variance() {
        // σ² = 1, p = 0.5: σ²/(2p) = 1
        let v = coordinate_variance(1.0, vec![0.5, 0.5], 100_000);
        assert!((v - 1.0).abs() < 0.02, "{v}");
    }
}
