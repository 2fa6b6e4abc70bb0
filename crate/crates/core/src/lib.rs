//! Gaussian bandits under weighted information.
//!
//! At every round an agent spreads a unit power budget over `K` arms. Arm `k`
//! returns a 2-D Gaussian outcome centred at `μ_k` whose per-coordinate
//! variance is `σ_k² / (2 p_k)`. The reward-maximising arm is the one with the
//! largest `‖μ_k‖`.
//!
//! The crate provides:
//!
//! * [`instance`]: ground-truth instances, power profiles and the outcome law.
//! * [`stats`]: weighted sufficient statistics, incremental and batch.
//! * [`posterior`]: the bivariate-t posterior of each arm mean and the
//!   Monte-Carlo estimate of the optimality belief `ρ`.
//! * [`policy`]: Weighted Thompson Sampling and the baseline agents.
//! * [`bounds`]: regret accounting, lower-bound constants and closed-form
//!   concentration functions.
//! * [`sysid`]: the gain (H∞-norm) estimation application.
//! * [`simulate`]: a single seeded run of a policy against an instance.
//! * [`rng`]: keyed, splittable random streams.
//! * [`diagnostics`]: helpers for Monte-Carlo checks (KS distance, moments).

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod instance;
pub mod policy;
pub mod posterior;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod sysid;

pub use bounds::{BoundConstants, RegretTrace};
pub use error::{Error, Result};
pub use instance::{BanditInstance, Outcome, PowerProfile, Vec2};
pub use policy::{PolicyKind, PolicyState};
pub use posterior::{OptimalityBelief, PosteriorParams};
pub use rng::RandomStream;
pub use stats::ArmStats;
pub use sysid::{FrequencyGrid, GainEstimate, GainProblem};
