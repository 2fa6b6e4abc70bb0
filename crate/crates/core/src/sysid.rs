//! Gain (H∞-norm) estimation as a bandit under weighted information.
//!
//! The input is a multisine over the bins `ω_k = 2πk/(2K+1)`, `k = 1..K`, of a
//! record of length `N = 2K + 1`. With power `p_k` at bin `k`, the ratio
//! `Y/U` at that bin is `G(e^{jω_k})` plus circular Gaussian noise, so arm `k`
//! has mean `[Re G, Im G]` and variance `|H(e^{jω_k})|²`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{norm, sample_outcome, unique_argmax, BanditInstance, Outcome, PowerProfile};
use crate::stats::ArmStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(arms: usize) -> Result<Self> {
        if arms < 2 {
            return Err(Error::TooFewArms(arms));
        }
        let n = (2 * arms + 1) as f64;
        Ok(Self {
            omegas: (1..=arms).map(|k| TAU * k as f64 / n).collect(),
        })
    }

    pub fn arms(&self) -> usize {
        self.omegas.len()
    }

    /// Record length `2K + 1`.
    pub fn record_len(&self) -> usize {
        2 * self.omegas.len() + 1
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }
}

/// `Σ_τ c_τ e^{−jωτ}`.
pub fn fir_response(coeffs: &[f64], omega: f64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(tau, c)| c * Complex64::from_polar(1.0, -omega * tau as f64))
        .sum()
}

/// Responses of the system `G` and the noise filter `H` on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GainProblem {
    grid: FrequencyGrid,
    g_resp: Vec<Complex64>,
    h_resp: Vec<Complex64>,
    instance: BanditInstance,
}

impl GainProblem {
    pub fn from_responses(
        grid: FrequencyGrid,
        g_resp: Vec<Complex64>,
        h_resp: Vec<Complex64>,
    ) -> Result<Self> {
        for len in [g_resp.len(), h_resp.len()] {
            if len != grid.arms() {
                return Err(Error::DimensionMismatch {
                    expected: grid.arms(),
                    got: len,
                });
            }
        }
        if let Some(k) = h_resp
            .iter()
            .position(|h| h.norm_sqr().is_nan() || h.norm_sqr() <= 0.0)
        {
            return Err(Error::ZeroNoiseBin(k));
        }
        let gains: Vec<f64> = g_resp.iter().map(|g| g.norm()).collect();
        unique_argmax(&gains).map_err(|(first, second)| Error::TiedPeak { first, second })?;
        let means = g_resp.iter().map(|g| [g.re, g.im]).collect();
        let variances = h_resp.iter().map(|h| h.norm_sqr()).collect();
        let instance = BanditInstance::new(means, variances).map_err(|e| match e {
            Error::TiedOptimum { first, second } => Error::TiedPeak { first, second },
            other => other,
        })?;
        Ok(Self {
            grid,
            g_resp,
            h_resp,
            instance,
        })
    }

    /// Evaluates FIR models of `G` and `H` on a `K`-bin grid.
    pub fn from_fir(g_coeffs: &[f64], h_coeffs: &[f64], arms: usize) -> Result<Self> {
        if g_coeffs.is_empty() || h_coeffs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let grid = FrequencyGrid::new(arms)?;
        let g = grid
            .omegas()
            .iter()
            .map(|&w| fir_response(g_coeffs, w))
            .collect();
        let h = grid
            .omegas()
            .iter()
            .map(|&w| fir_response(h_coeffs, w))
            .collect();
        Self::from_responses(grid, g, h)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn g_response(&self) -> &[Complex64] {
        &self.g_resp
    }

    pub fn h_response(&self) -> &[Complex64] {
        &self.h_resp
    }

    /// The induced bandit: `μ_k = [Re G, Im G]`, `σ_k² = |H|²`.
    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    /// `max_k |G(e^{jω_k})|`, the grid H∞-norm.
    pub fn peak_gain(&self) -> f64 {
        self.instance.best_norm()
    }
}

pub fn grid_from_fir(g_coeffs: &[f64], h_coeffs: &[f64], arms: usize) -> Result<GainProblem> {
    GainProblem::from_fir(g_coeffs, h_coeffs, arms)
}

/// One multisine experiment, simulated in the frequency domain.
pub fn run_experiment<R: Rng + ?Sized>(
    problem: &GainProblem,
    profile: &PowerProfile,
    rng: &mut R,
) -> Result<Outcome> {
    sample_outcome(problem.instance(), profile, rng)
}

/// `u_τ = Σ_k √p_k sin(ω_k τ)` for `τ = 0..N`.
pub fn synth_multisine(profile: &PowerProfile, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    if profile.len() != grid.arms() {
        return Err(Error::InvalidProfile(format!(
            "{} entries for {} bins",
            profile.len(),
            grid.arms()
        )));
    }
    let amps: Vec<(f64, f64)> = profile
        .as_slice()
        .iter()
        .zip(grid.omegas())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, w)| (p.sqrt(), *w))
        .collect();
    Ok((0..grid.record_len())
        .map(|tau| amps.iter().map(|(a, w)| a * (w * tau as f64).sin()).sum())
        .collect())
}

/// Unnormalised DFT `U_m = Σ_τ x_τ e^{−j2πmτ/N}`, evaluated directly.
pub fn dft(x: &[f64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len();
    Ok((0..n)
        .map(|m| {
            x.iter()
                .enumerate()
                .map(|(tau, v)| v * twiddle(m * tau % n, n, -1.0))
                .sum()
        })
        .collect())
}

/// Inverse of [`dft`]; returns the real part of `(1/N) Σ_m U_m e^{j2πmτ/N}`.
pub fn idft(spectrum: &[Complex64]) -> Result<Vec<f64>> {
    if spectrum.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = spectrum.len();
    Ok((0..n)
        .map(|tau| {
            let s: Complex64 = spectrum
                .iter()
                .enumerate()
                .map(|(m, u)| u * twiddle(m * tau % n, n, 1.0))
                .sum();
            s.re / n as f64
        })
        .collect())
}

#[inline]
fn twiddle(idx: usize, n: usize, sign: f64) -> Complex64 {
    Complex64::from_polar(1.0, sign * TAU * idx as f64 / n as f64)
}

/// Point estimate of the peak gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub beta_hat: f64,
    pub k_hat: usize,
    pub t: u64,
}

/// `β̂ = ‖x̄_k̂‖` at the arm with the most cumulative power.
pub fn gain_estimate(per_arm: &[ArmStats], t: u64) -> Result<GainEstimate> {
    if per_arm.iter().all(|s| s.z() <= 0.0) {
        return Err(Error::NoData);
    }
    let k_hat = crate::instance::first_argmax(per_arm.iter().map(|s| s.z()));
    Ok(GainEstimate {
        beta_hat: norm(per_arm[k_hat].xbar()),
        k_hat,
        t,
    })
}
