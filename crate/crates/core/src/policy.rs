//! Agents: Weighted Thompson Sampling and its baselines.
//!
//! Every agent keeps only per-arm [`ArmStats`] and a round counter. A round is
//! [`PolicyState::select`] followed by [`PolicyState::observe`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{first_argmax, norm_sq, BanditInstance, Outcome, PowerProfile};
use crate::posterior::{estimate_rho, PosteriorParams, DEFAULT_MC_SAMPLES};
use crate::stats::ArmStats;

/// WTS runs this many uniform rounds before its first posterior.
pub const WTS_WARMUP_ROUNDS: u64 = 3;
/// Round-robin passes before TS with unknown variance leaves warm-up.
pub const TS_UNKNOWN_WARMUP_PASSES: u64 = 3;

/// Smallest power WTS assigns to any arm, before renormalisation.
pub fn power_floor(arms: usize) -> f64 {
    1e-6 / arms as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Wts,
    TsKnown,
    TsUnknown,
    Oracle,
    Uniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Wts,
        PolicyKind::TsKnown,
        PolicyKind::TsUnknown,
        PolicyKind::Oracle,
        PolicyKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Wts => "wts",
            PolicyKind::TsKnown => "ts_known",
            PolicyKind::TsUnknown => "ts_unknown",
            PolicyKind::Oracle => "oracle",
            PolicyKind::Uniform => "uniform",
        }
    }

    /// Whether every emitted profile is one-hot.
    pub fn is_non_spreading(self) -> bool {
        matches!(
            self,
            PolicyKind::TsKnown | PolicyKind::TsUnknown | PolicyKind::Oracle
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Config {
    Wts { mc_samples: usize },
    TsKnown { variances: Vec<f64> },
    TsUnknown,
    Oracle { best: usize },
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    kind: PolicyKind,
    per_arm: Vec<ArmStats>,
    round: u64,
    config: Config,
}

impl PolicyState {
    fn with(arms: usize, kind: PolicyKind, config: Config) -> Self {
        Self {
            kind,
            per_arm: vec![ArmStats::new(); arms],
            round: 1,
            config,
        }
    }

    pub fn wts(arms: usize, mc_samples: usize) -> Self {
        Self::with(arms, PolicyKind::Wts, Config::Wts { mc_samples })
    }

    pub fn ts_known(variances: Vec<f64>) -> Self {
        let arms = variances.len();
        Self::with(arms, PolicyKind::TsKnown, Config::TsKnown { variances })
    }

    pub fn ts_unknown(arms: usize) -> Self {
        Self::with(arms, PolicyKind::TsUnknown, Config::TsUnknown)
    }

    pub fn oracle(arms: usize, best: usize) -> Self {
        Self::with(arms, PolicyKind::Oracle, Config::Oracle { best })
    }

    pub fn uniform(arms: usize) -> Self {
        Self::with(arms, PolicyKind::Uniform, Config::Uniform)
    }

    /// Builds an agent for `instance`, taking known variances or the optimal
    /// arm from it where the kind needs them.
    pub fn for_instance(kind: PolicyKind, instance: &BanditInstance, mc_samples: usize) -> Self {
        let k = instance.arms();
        match kind {
            PolicyKind::Wts => Self::wts(k, mc_samples),
            PolicyKind::TsKnown => Self::ts_known(instance.variances().to_vec()),
            PolicyKind::TsUnknown => Self::ts_unknown(k),
            PolicyKind::Oracle => Self::oracle(k, instance.best_arm()),
            PolicyKind::Uniform => Self::uniform(k),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn arms(&self) -> usize {
        self.per_arm.len()
    }

    pub fn per_arm(&self) -> &[ArmStats] {
        &self.per_arm
    }

    /// The round about to be played, starting at 1.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Profile for the current round.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PowerProfile> {
        match self.kind {
            PolicyKind::Wts => self.wts_step(rng),
            PolicyKind::TsKnown | PolicyKind::TsUnknown => self.ts_step(rng),
            PolicyKind::Oracle => self.oracle_step(),
            PolicyKind::Uniform => Ok(PowerProfile::uniform(self.arms())),
        }
    }

    /// Current posterior of every arm.
    pub fn posteriors(&self) -> Result<Vec<PosteriorParams>> {
        self.per_arm
            .iter()
            .enumerate()
            .map(|(k, s)| PosteriorParams::from_stats(s).map_err(|_| Error::InsufficientData(k)))
            .collect()
    }

    /// Weighted Thompson Sampling: the power profile is the optimality belief.
    pub fn wts_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PowerProfile> {
        let Config::Wts { mc_samples } = self.config else {
            return Err(Error::WrongKind(self.kind.name()));
        };
        let arms = self.arms();
        if self.round <= WTS_WARMUP_ROUNDS {
            return Ok(PowerProfile::uniform(arms));
        }
        let belief = estimate_rho(&self.posteriors()?, mc_samples, rng)?;
        let floor = power_floor(arms);
        let floored: Vec<f64> = belief.rho.iter().map(|r| r.max(floor)).collect();
        let total: f64 = floored.iter().sum();
        PowerProfile::new(floored.into_iter().map(|p| p / total).collect())
    }

    /// Thompson Sampling that plays one arm per round.
    pub fn ts_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PowerProfile> {
        let arms = self.arms();
        let passes = match self.config {
            Config::TsKnown { .. } => 1,
            Config::TsUnknown => TS_UNKNOWN_WARMUP_PASSES,
            _ => return Err(Error::WrongKind(self.kind.name())),
        };
        if self.round <= passes * arms as u64 {
            let arm = ((self.round - 1) % arms as u64) as usize;
            return Ok(PowerProfile::one_hot(arms, arm));
        }
        let draws: Vec<f64> = match &self.config {
            Config::TsKnown { variances } => self
                .per_arm
                .iter()
                .zip(variances)
                .enumerate()
                .map(|(k, (s, var))| {
                    if s.z() <= 0.0 {
                        return Err(Error::InsufficientData(k));
                    }
                    let sd = (var / (2.0 * s.z())).sqrt();
                    let g0: f64 = rng.sample(StandardNormal);
                    let g1: f64 = rng.sample(StandardNormal);
                    let x = s.xbar();
                    Ok(norm_sq([x[0] + sd * g0, x[1] + sd * g1]))
                })
                .collect::<Result<_>>()?,
            _ => self
                .posteriors()?
                .iter()
                .map(|p| norm_sq(p.sample(rng)))
                .collect(),
        };
        Ok(PowerProfile::one_hot(arms, first_argmax(draws)))
    }

    /// All power on the optimal arm.
    pub fn oracle_step(&self) -> Result<PowerProfile> {
        match self.config {
            Config::Oracle { best } => Ok(PowerProfile::one_hot(self.arms(), best)),
            _ => Err(Error::WrongKind(self.kind.name())),
        }
    }

    /// Folds the round's outcome into the statistics and advances the round.
    pub fn observe(&mut self, profile: &PowerProfile, outcome: &Outcome) -> Result<()> {
        let arms = self.arms();
        for len in [profile.len(), outcome.values.len()] {
            if len != arms {
                return Err(Error::ProfileMismatch {
                    expected: arms,
                    got: len,
                });
            }
        }
        // validate before mutating so a failed observe leaves the state intact
        for (p, x) in profile.as_slice().iter().zip(&outcome.values) {
            if *p > 0.0 && x.is_none() {
                return Err(Error::MissingObservation);
            }
        }
        let mut next = self.per_arm.clone();
        for ((stats, p), x) in next.iter_mut().zip(profile.as_slice()).zip(&outcome.values) {
            stats.update(*p, *x)?;
        }
        self.per_arm = next;
        self.round += 1;
        Ok(())
    }
}

impl Default for PolicyState {
    fn default() -> Self {
        Self::wts(2, DEFAULT_MC_SAMPLES)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::sample_outcome;
    use crate::rng::RandomStream;

    fn instance() -> BanditInstance {
        BanditInstance::new(
            vec![[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    fn play(
        state: &mut PolicyState,
        inst: &BanditInstance,
        rng: &mut RandomStream,
    ) -> PowerProfile {
        let p = state.select(rng).unwrap();
        let out = sample_outcome(inst, &p, rng).unwrap();
        state.observe(&p, &out).unwrap();
        p
    }

    #[test]
    fn wts_warmup_is_uniform() {
        let inst = instance();
        let mut rng = RandomStream::new(3);
        let mut s = PolicyState::wts(3, 64);
        for _ in 0..3 {
            let p = play(&mut s, &inst, &mut rng);
            assert_eq!(p, PowerProfile::uniform(3));
        }
        let mut s4 = PolicyState::wts(4, 64);
        assert_eq!(s4.select(&mut rng).unwrap().as_slice(), &[0.25; 4]);
        s4.round = 3;
        assert_eq!(s4.select(&mut rng).unwrap().as_slice(), &[0.25; 4]);
    }

    #[test]
    fn wts_observe_after_first_round() {
        let inst = BanditInstance::new(vec![[2.0, 0.0], [1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let mut rng = RandomStream::new(3);
        let mut s = PolicyState::wts(2, 64);
        play(&mut s, &inst, &mut rng);
        assert_eq!(s.round(), 2);
        assert!(s.per_arm().iter().all(|a| a.z() == 0.5));
    }

    #[test]
    fn wts_profile_after_warmup_is_floored() {
        let inst = instance();
        let mut rng = RandomStream::new(4);
        let mut s = PolicyState::wts(3, 256);
        for _ in 0..30 {
            let p = play(&mut s, &inst, &mut rng);
            assert!(p.as_slice().iter().all(|&v| v > 0.0));
            assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wts_dominant_arm_gets_almost_everything() {
        let mut s = PolicyState::wts(2, 1000);
        s.per_arm = vec![
            crate::stats::batch_stats(&[1e6 / 9.0; 9], &{
                let mut xs = vec![[100.0, 0.0]; 9];
                xs[0][0] += 1e-6;
                xs
            })
            .unwrap(),
            crate::stats::batch_stats(&[1.0; 9], &{
                let mut xs = vec![[1.0, 0.0]; 9];
                xs[0][1] += 1e-3;
                xs
            })
            .unwrap(),
        ];
        s.round = 10;
        let mut rng = RandomStream::new(1);
        let p = s.wts_step(&mut rng).unwrap();
        let floor = power_floor(2);
        let expect_low = floor / (1.0 + floor);
        assert!((p[1] - expect_low).abs() < 1e-15, "{:?}", p);
        assert!((p[0] - 1.0 / (1.0 + floor)).abs() < 1e-15);
    }

    #[test]
    fn ts_warmup_round_robin() {
        let mut s = PolicyState::ts_unknown(3);
        let mut rng = RandomStream::new(0);
        s.round = 2;
        assert_eq!(s.select(&mut rng).unwrap(), PowerProfile::one_hot(3, 1));
        let inst = instance();
        let mut s = PolicyState::ts_unknown(3);
        for t in 0..9 {
            let p = play(&mut s, &inst, &mut rng);
            assert_eq!(p.support_arm(), Some(t % 3));
        }
        assert!(s.per_arm().iter().all(|a| a.observations() == 3));
        let mut s = PolicyState::ts_known(vec![1.0; 3]);
        for t in 0..3 {
            assert_eq!(play(&mut s, &inst, &mut rng).support_arm(), Some(t));
        }
    }

    #[test]
    fn non_spreading_policies_are_one_hot() {
        let inst = instance();
        let mut rng = RandomStream::new(8);
        for kind in [
            PolicyKind::TsKnown,
            PolicyKind::TsUnknown,
            PolicyKind::Oracle,
        ] {
            let mut s = PolicyState::for_instance(kind, &inst, 64);
            for _ in 0..200 {
                let p = play(&mut s, &inst, &mut rng);
                assert!(p.support_arm().is_some(), "{kind}: {p:?}");
                assert_eq!(p.as_slice().iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn ts_known_picks_dominant_arm() {
        let mut s = PolicyState::ts_known(vec![1.0, 1.0]);
        s.per_arm = vec![
            crate::stats::batch_stats(&[1e6], &[[100.0, 0.0]]).unwrap(),
            crate::stats::batch_stats(&[1.0; 3], &[[1.0, 0.0]; 3]).unwrap(),
        ];
        s.round = 10;
        let mut rng = RandomStream::new(2);
        for _ in 0..1000 {
            assert_eq!(s.ts_step(&mut rng).unwrap().support_arm(), Some(0));
        }
    }

    #[test]
    fn oracle_is_time_invariant() {
        let mut s = PolicyState::oracle(3, 2);
        assert_eq!(s.oracle_step().unwrap().as_slice(), &[0.0, 0.0, 1.0]);
        s.round = 999;
        assert_eq!(s.oracle_step().unwrap().as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(
            PolicyState::oracle(2, 0).oracle_step().unwrap().as_slice(),
            &[1.0, 0.0]
        );
    }

    #[test]
    fn wrong_kind_errors() {
        let mut rng = RandomStream::new(0);
        assert!(matches!(
            PolicyState::uniform(2).oracle_step(),
            Err(Error::WrongKind("uniform"))
        ));
        assert!(matches!(
            PolicyState::oracle(2, 0).ts_step(&mut rng),
            Err(Error::WrongKind(_))
        ));
        assert!(matches!(
            PolicyState::ts_unknown(2).wts_step(&mut rng),
            Err(Error::WrongKind(_))
        ));
    }

    #[test]
    fn observe_errors_leave_state_untouched() {
        let mut s = PolicyState::uniform(2);
        let p = PowerProfile::uniform(2);
        let short = Outcome {
            values: vec![Some([0.0, 0.0])],
        };
        assert!(matches!(
            s.observe(&p, &short),
            Err(Error::ProfileMismatch { .. })
        ));
        let missing = Outcome {
            values: vec![Some([0.0, 0.0]), None],
        };
        assert_eq!(s.observe(&p, &missing), Err(Error::MissingObservation));
        assert_eq!(s.round(), 1);
        assert_eq!(s.per_arm()[0], ArmStats::new());
    }

    #[test]
    fn wts_guards_missing_data() {
        let mut s = PolicyState::wts(2, 16);
        s.round = 4;
        let mut rng = RandomStream::new(0);
        assert_eq!(s.wts_step(&mut rng), Err(Error::InsufficientData(0)));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("ucb".parse::<PolicyKind>().is_err());
    }
}
