//! Posterior of an arm mean under the improper uniform prior on `(μ, σ²)`.
//!
//! After `t − 1` rounds with statistics `(z, x̄, S)` the posterior density of
//! the mean is the bivariate t law
//!
//! ```text
//! f(m) = z (t − 3) / (π S) · (1 + z ‖m − x̄‖² / S)^(2 − t)
//! ```
//!
//! whose radial tail has the closed form
//! `P(‖μ̃ − x̄‖ ≥ δ) = (1 + z δ² / S)^(3 − t)`. Sampling inverts that tail and
//! draws a uniform angle, so no special functions are needed.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{norm_sq, Vec2};
use crate::stats::ArmStats;

/// Default number of joint posterior draws per belief estimate.
pub const DEFAULT_MC_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    z: f64,
    xbar: Vec2,
    scatter: f64,
    t: u64,
}

impl PosteriorParams {
    /// `t` is the round the posterior is used at; the statistics summarise `t − 1` observations.
    pub fn new(z: f64, xbar: Vec2, scatter: f64, t: u64) -> Result<Self> {
        if t < 4 {
            return Err(Error::InvalidParams(format!("round {t} < 4")));
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidParams(format!("cumulative power {z}")));
        }
        if !(scatter.is_finite() && scatter > 0.0) {
            return Err(Error::InvalidParams(format!("scatter {scatter}")));
        }
        if !(xbar[0].is_finite() && xbar[1].is_finite()) {
            return Err(Error::InvalidParams("non-finite sample mean".into()));
        }
        Ok(Self {
            z,
            xbar,
            scatter,
            t,
        })
    }

    /// Posterior after the observations folded into `stats`.
    ///
    /// The round index is one past the number of positive-power observations,
    /// so zero-power rounds do not inflate the degrees of freedom.
    pub fn from_stats(stats: &ArmStats) -> Result<Self> {
        Self::new(
            stats.z(),
            stats.xbar(),
            stats.scatter(),
            stats.observations() + 1,
        )
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn xbar(&self) -> Vec2 {
        self.xbar
    }

    pub fn scatter(&self) -> f64 {
        self.scatter
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Tail exponent `t − 3`.
    fn dof(&self) -> f64 {
        (self.t - 3) as f64
    }

    pub fn density(&self, point: Vec2) -> f64 {
        let r2 = norm_sq([point[0] - self.xbar[0], point[1] - self.xbar[1]]);
        let base = 1.0 + self.z * r2 / self.scatter;
        self.z * self.dof() / (PI * self.scatter) * base.powf(-(self.dof() + 1.0))
    }

    /// `P(‖μ̃ − x̄‖ ≥ delta)`.
    pub fn radial_tail(&self, delta: f64) -> f64 {
        (1.0 + self.z * delta * delta / self.scatter).powf(-self.dof())
    }

    /// Radius whose exceedance probability is `u`.
    pub fn radial_quantile(&self, u: f64) -> f64 {
        // u^(-1/ν) - 1, written with expm1 for large ν
        let r2 = (self.scatter / self.z) * (-u.ln() / self.dof()).exp_m1();
        r2.max(0.0).sqrt()
    }

    /// Deterministic map from `(u, θ)` to a posterior draw.
    pub fn sample_from_uniforms(&self, u: f64, theta: f64) -> Vec2 {
        let r = self.radial_quantile(u);
        let (s, c) = theta.sin_cos();
        [self.xbar[0] + r * c, self.xbar[1] + r * s]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        // 1 - U lies in (0, 1], which keeps ln finite
        let u = 1.0 - rng.random::<f64>();
        let theta = TAU * rng.random::<f64>();
        self.sample_from_uniforms(u, theta)
    }
}

pub fn posterior_density(params: &PosteriorParams, point: Vec2) -> f64 {
    params.density(point)
}

pub fn posterior_radial_tail(params: &PosteriorParams, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidParams(format!("radius {delta}")));
    }
    Ok(params.radial_tail(delta))
}

pub fn sample_posterior<R: Rng + ?Sized>(params: &PosteriorParams, rng: &mut R) -> Vec2 {
    params.sample(rng)
}

/// Monte-Carlo estimate of the probability that each arm has the largest mean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityBelief {
    pub rho: Vec<f64>,
    pub samples_used: usize,
}

/// Per-arm constants for drawing `‖μ̃‖` without forming `μ̃`.
struct NormSampler {
    scale: f64,
    inv_dof: f64,
    xbar: Vec2,
    xbar_sq: f64,
    xbar_norm: f64,
}

impl NormSampler {
    fn new(p: &PosteriorParams) -> Self {
        Self {
            scale: p.scatter / p.z,
            inv_dof: 1.0 / p.dof(),
            xbar: p.xbar,
            xbar_sq: norm_sq(p.xbar),
            xbar_norm: p.xbar[0].hypot(p.xbar[1]),
        }
    }

    /// Exponent `y = -ln(U)/ν`; the squared radius is `scale · (e^y − 1)`.
    #[inline]
    fn draw_exponent<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e * self.inv_dof
    }

    #[inline]
    fn radius_sq(&self, y: f64) -> f64 {
        self.scale * y.exp_m1()
    }

    /// `‖x̄ + δ e‖²` for a direction `e` uniform on the circle, taken from a
    /// point rejection-sampled in the unit disc.
    #[inline]
    fn norm_sq_at<R: Rng + ?Sized>(&self, r2: f64, rng: &mut R) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 31) as f64;
        let (a, b, d2) = loop {
            let bits = rng.next_u64();
            let a = (bits >> 32) as f64 * SCALE - 1.0;
            let b = (bits & 0xffff_ffff) as f64 * SCALE - 1.0;
            let d2 = a * a + b * b;
            if d2 <= 1.0 && d2 > 0.0 {
                break (a, b, d2);
            }
        };
        let proj = (r2 / d2).sqrt() * (self.xbar[0] * a + self.xbar[1] * b);
        self.xbar_sq + r2 + 2.0 * proj
    }

    #[cfg(test)]
    fn draw_norm_sq<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = self.draw_exponent(rng);
        self.norm_sq_at(self.radius_sq(y), rng)
    }
}

/// Estimates `ρ` from `samples` joint posterior draws.
///
/// Each draw credits the arm with the largest sampled norm; ties go to the
/// lowest index. Arms are visited in decreasing `‖x̄‖`; once a draw's radius
/// cannot lift an arm past the running maximum (`‖x̄‖ + δ < max`), its angle
/// is not sampled.
pub fn estimate_rho<R: Rng + ?Sized>(
    all_params: &[PosteriorParams],
    samples: usize,
    rng: &mut R,
) -> Result<OptimalityBelief> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if all_params.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<(usize, NormSampler)> = all_params
        .iter()
        .map(NormSampler::new)
        .enumerate()
        .collect();
    order.sort_by(|a, b| b.1.xbar_norm.total_cmp(&a.1.xbar_norm).then(a.0.cmp(&b.0)));
    let mut counts = vec![0usize; order.len()];
    for _ in 0..samples {
        let mut best = usize::MAX;
        let mut best_sq = f64::NEG_INFINITY;
        let mut best_norm = f64::NEG_INFINITY;
        for (k, s) in &order {
            let y = s.draw_exponent(rng);
            let gap = best_norm - s.xbar_norm;
            // e^y − 1 ≤ y/(1 − y) on [0, 1): reject without evaluating exp
            if gap > 0.0 && y < 1.0 && s.scale * y < gap * gap * (1.0 - y) {
                continue;
            }
            let r2 = s.radius_sq(y);
            if s.xbar_norm + r2.sqrt() < best_norm {
                continue;
            }
            let v = s.norm_sq_at(r2, rng);
            if v > best_sq || (v == best_sq && *k < best) {
                best = *k;
                best_sq = v;
                best_norm = v.max(0.0).sqrt();
            }
        }
        counts[best] += 1;
    }
    let m = samples as f64;
    Ok(OptimalityBelief {
        rho: counts.iter().map(|&c| c as f64 / m).collect(),
        samples_used: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn params(z: f64, s: f64, t: u64) -> PosteriorParams {
        PosteriorParams::new(z, [0.3, -0.7], s, t).unwrap()
    }

    #[test]
    fn density_examples() {
        let p = params(1.0, 1.0, 4);
        assert!((p.density(p.xbar()) - 1.0 / PI).abs() < 1e-15);
        let at_one = [p.xbar()[0] + 0.6, p.xbar()[1] + 0.8];
        assert!((p.density(at_one) - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(
            PosteriorParams::new(1.0, [0.0, 0.0], 1.0, 3),
            Err(Error::InvalidParams(_))
        ));
        assert!(PosteriorParams::new(0.0, [0.0, 0.0], 1.0, 5).is_err());
        assert!(PosteriorParams::new(1.0, [0.0, 0.0], 0.0, 5).is_err());
        assert!(PosteriorParams::from_stats(&ArmStats::new()).is_err());
        assert!(posterior_radial_tail(&params(1.0, 1.0, 4), -1.0).is_err());
    }

    #[test]
    fn radial_tail_examples() {
        assert_eq!(params(1.0, 1.0, 4).radial_tail(0.0), 1.0);
        assert!((params(1.0, 1.0, 4).radial_tail(1.0) - 0.5).abs() < 1e-15);
        assert!((params(4.0, 1.0, 5).radial_tail(1.0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn tail_monotonicity() {
        let base = params(2.0, 1.5, 8);
        for d in [0.1, 0.5, 1.0, 3.0] {
            let v = base.radial_tail(d);
            assert!(base.radial_tail(d * 1.1) < v);
            assert!(params(2.5, 1.5, 8).radial_tail(d) < v);
            assert!(params(2.0, 1.5, 9).radial_tail(d) < v);
            assert!(params(2.0, 2.0, 8).radial_tail(d) > v);
        }
    }

    #[test]
    fn quantile_inverts_tail() {
        let p = params(1.0, 1.0, 4);
        assert!((p.radial_quantile(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(p.radial_quantile(1.0), 0.0);
        assert_eq!(p.sample_from_uniforms(1.0, 2.0), p.xbar());
        let q = params(10.0, 3.0, 20);
        for u in [0.01, 0.2, 0.5, 0.9, 0.999] {
            assert!((q.radial_tail(q.radial_quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_exceedance_at_unit_radius() {
        let p = params(1.0, 1.0, 4);
        let mut rng = RandomStream::new(5);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let x = p.sample(&mut rng);
                norm_sq([x[0] - p.xbar()[0], x[1] - p.xbar()[1]]) >= 1.0
            })
            .count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "{frac}");
    }

    #[test]
    fn fast_norm_sampler_matches_tail() {
        // radial law of the norm sampler around x̄ = 0 is the posterior tail
        let p = PosteriorParams::new(4.0, [0.0, 0.0], 1.0, 5).unwrap();
        let s = NormSampler::new(&p);
        let mut rng = RandomStream::new(9);
        let n = 100_000;
        for delta in [0.25, 0.5, 1.0] {
            let hits = (0..n)
                .filter(|_| s.draw_norm_sq(&mut rng) >= delta * delta)
                .count();
            let frac = hits as f64 / n as f64;
            let want = p.radial_tail(delta);
            let se = (want * (1.0 - want) / n as f64).sqrt();
            assert!((frac - want).abs() < 4.0 * se, "{delta}: {frac} vs {want}");
        }
    }

    #[test]
    fn rho_dominant_arm() {
        let strong = PosteriorParams::new(1e6, [100.0, 0.0], 1e-6, 100).unwrap();
        let weak = PosteriorParams::new(1e6, [1.0, 0.0], 1e-6, 100).unwrap();
        let mut rng = RandomStream::new(1);
        let b = estimate_rho(&[strong, weak], 1000, &mut rng).unwrap();
        assert_eq!(b.rho, vec![1.0, 0.0]);
        assert_eq!(b.samples_used, 1000);
    }

    #[test]
    fn rho_symmetric_arms() {
        let p = params(3.0, 2.0, 10);
        let mut rng = RandomStream::new(2);
        let b = estimate_rho(&[p, p], 100_000, &mut rng).unwrap();
        assert!((b.rho[0] - 0.5).abs() < 0.01, "{:?}", b.rho);
        assert!((b.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_requires_samples() {
        let mut rng = RandomStream::new(2);
        assert_eq!(
            estimate_rho(&[params(1.0, 1.0, 4)], 0, &mut rng),
            Err(Error::ZeroSamples)
        );
    }
}
