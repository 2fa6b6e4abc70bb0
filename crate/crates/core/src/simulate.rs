//! One seeded run of a policy against an instance.

use crate::bounds::regret_step;
use crate::error::Error;
use crate::instance::{sample_outcome, BanditInstance, PowerProfile};
use crate::policy::PolicyState;
use crate::rng::{purpose, RandomStream};

/// An error raised at a specific round.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("round {round}: {source}")]
pub struct RoundError {
    pub round: u64,
    #[source]
    pub source: Error,
}

/// What the observer sees after each round.
pub struct RoundReport<'a> {
    pub t: u64,
    pub profile: &'a PowerProfile,
    pub regret: f64,
    pub cumulative_regret: f64,
    /// State after the round's outcome was observed.
    pub state: &'a PolicyState,
}

/// Plays `horizon` rounds.
///
/// Round `t` draws the policy's randomness from `stream.derive([t, POLICY])`
/// and the outcome from `stream.derive([t, OUTCOME])`, so a run is a pure
/// function of the instance, the policy's initial state and the stream key.
pub fn run_episode<F>(
    instance: &BanditInstance,
    policy: &mut PolicyState,
    horizon: u64,
    stream: &RandomStream,
    mut observer: F,
) -> Result<f64, RoundError>
where
    F: FnMut(RoundReport<'_>),
{
    let mut cumulative = 0.0;
    for t in 1..=horizon {
        let at = |source| RoundError { round: t, source };
        let mut policy_rng = stream.derive(&[t, purpose::POLICY]);
        let mut outcome_rng = stream.derive(&[t, purpose::OUTCOME]);
        let profile = policy.select(&mut policy_rng).map_err(at)?;
        let outcome = sample_outcome(instance, &profile, &mut outcome_rng).map_err(at)?;
        policy.observe(&profile, &outcome).map_err(at)?;
        let regret = regret_step(instance, &profile).map_err(at)?;
        cumulative += regret;
        observer(RoundReport {
            t,
            profile: &profile,
            regret,
            cumulative_regret: cumulative,
            state: policy,
        });
    }
    Ok(cumulative)
}
