//! Seeded, parallel Monte-Carlo replications and their persistence.
//!
//! Replication `r` of the `q`-th configured policy draws everything from
//! `RandomStream::new(base_seed).derive(&[q, r])`; inside a run, round `t`
//! further derives `[t, purpose]`. Results therefore do not depend on the
//! worker count or on execution order, and adding replications leaves the
//! existing ones untouched.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use wib_core::bounds::lower_bound_constants;
use wib_core::simulate::run_episode;
use wib_core::sysid::gain_estimate;
use wib_core::{
    BanditInstance, BoundConstants, GainEstimate, PolicyKind, PolicyState, RandomStream,
};

use crate::config::{Mode, RunConfig};
use crate::error::RunError;

pub const CSV_HEADER: &str = "policy,replication,t,regret_step,regret_cum";
pub const CSV_HEADER_GAIN: &str = "policy,replication,t,regret_step,regret_cum,beta_hat,k_hat";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub regret_step: f64,
    pub regret_cum: f64,
    pub gain: Option<GainEstimate>,
}

/// Everything one (policy, replication) run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub policy_index: usize,
    pub policy: PolicyKind,
    pub replication: u64,
    pub rows: Vec<TraceRow>,
    pub final_regret: f64,
    /// Cumulative power per arm at `T/10` and at `T`.
    pub z_tenth: Vec<f64>,
    pub z_final: Vec<f64>,
    pub gain: Option<GainEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mode: Mode,
    /// Sorted by (configured policy order, replication).
    pub results: Vec<RunResult>,
    pub bound_constants: BoundConstants,
    pub peak_gain: Option<f64>,
    pub started_at: String,
    pub elapsed_s: f64,
}

impl RunOutput {
    /// Mean and sample standard deviation of cumulative regret at `T`, in
    /// configured policy order.
    pub fn horizon_summary(&self) -> Vec<(PolicyKind, HorizonStats)> {
        let mut order: Vec<PolicyKind> = Vec::new();
        for r in &self.results {
            if !order.contains(&r.policy) {
                order.push(r.policy);
            }
        }
        order
            .into_iter()
            .map(|kind| {
                let xs: Vec<f64> = self
                    .results
                    .iter()
                    .filter(|r| r.policy == kind)
                    .map(|r| r.final_regret)
                    .collect();
                (kind, mean_std(&xs))
            })
            .collect()
    }

    pub fn results_for(&self, kind: PolicyKind) -> impl Iterator<Item = &RunResult> {
        self.results.iter().filter(move |r| r.policy == kind)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_csv(out, &self.results, self.mode == Mode::Gain)
    }
}

impl fmt::Display for RunOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>14} {:>14}", "policy", "mean_regret", "std")?;
        for (kind, s) in self.horizon_summary() {
            writeln!(f, "{:<12} {:>14.4} {:>14.4}", kind.name(), s.mean, s.std)?;
        }
        if let Some(peak) = self.peak_gain {
            writeln!(f, "peak gain on grid: {peak:.6}")?;
            for (kind, s) in self.gain_summary() {
                writeln!(
                    f,
                    "{:<12} beta_hat mean {:.6} std {:.6}",
                    kind.name(),
                    s.mean,
                    s.std
                )?;
            }
        }
        write!(f, "elapsed: {:.2} s", self.elapsed_s)
    }
}

impl RunOutput {
    fn gain_summary(&self) -> Vec<(PolicyKind, HorizonStats)> {
        self.horizon_summary()
            .into_iter()
            .map(|(kind, _)| {
                let xs: Vec<f64> = self
                    .results_for(kind)
                    .filter_map(|r| r.gain.map(|g| g.beta_hat))
                    .collect();
                (kind, mean_std(&xs))
            })
            .collect()
    }
}

pub fn mean_std(xs: &[f64]) -> HorizonStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    HorizonStats { mean, std }
}

/// The RNG stream for replication `replication` of the `policy_index`-th policy.
pub fn replication_stream(base_seed: u64, policy_index: usize, replication: u64) -> RandomStream {
    RandomStream::new(base_seed).derive(&[policy_index as u64, replication])
}

/// Runs every (policy, replication) pair without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let (instance, peak_gain) = match config.mode {
        Mode::Simulate => (config.bandit_instance()?, None),
        Mode::Gain => {
            let problem = config.gain_problem()?;
            (problem.instance().clone(), Some(problem.peak_gain()))
        }
        Mode::Verify => {
            return Err(RunError::Config(crate::error::ConfigError::Validation {
                field: "run.mode".into(),
                message: "verify mode does not produce traces".into(),
            }))
        }
    };
    let jobs: Vec<(usize, PolicyKind, u64)> = config
        .policies
        .iter()
        .enumerate()
        .flat_map(|(q, &kind)| (0..config.replications).map(move |r| (q, kind, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;
    let gain_mode = config.mode == Mode::Gain;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|&(q, kind, r)| run_one(config, &instance, q, kind, r, gain_mode))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(RunOutput {
        mode: config.mode,
        results,
        bound_constants: lower_bound_constants(&instance),
        peak_gain,
        started_at,
        elapsed_s: clock.elapsed().as_secs_f64(),
    })
}

fn run_one(
    config: &RunConfig,
    instance: &BanditInstance,
    policy_index: usize,
    kind: PolicyKind,
    replication: u64,
    gain_mode: bool,
) -> Result<RunResult, RunError> {
    let horizon = config.horizon;
    let stream = replication_stream(config.base_seed, policy_index, replication);
    let mut state = PolicyState::for_instance(kind, instance, config.mc_samples);
    let mut rows = Vec::with_capacity((horizon / config.thin + 1) as usize);
    let mut z_tenth = Vec::new();
    let mut late_error = None;
    let final_regret = run_episode(instance, &mut state, horizon, &stream, |rep| {
        if rep.t == (horizon / 10).max(1) {
            z_tenth = rep.state.per_arm().iter().map(|s| s.z()).collect();
        }
        if rep.t % config.thin == 0 || rep.t == horizon {
            let gain = if gain_mode {
                match gain_estimate(rep.state.per_arm(), rep.t) {
                    Ok(g) => Some(g),
                    Err(e) => {
                        late_error.get_or_insert((rep.t, e));
                        None
                    }
                }
            } else {
                None
            };
            rows.push(TraceRow {
                t: rep.t,
                regret_step: rep.regret,
                regret_cum: rep.cumulative_regret,
                gain,
            });
        }
    })
    .map_err(|e| RunError::Round {
        policy: kind.name().into(),
        replication,
        round: e.round,
        source: e.source,
    })?;
    if let Some((round, source)) = late_error {
        return Err(RunError::Round {
            policy: kind.name().into(),
            replication,
            round,
            source,
        });
    }
    let gain = rows.last().and_then(|r| r.gain);
    Ok(RunResult {
        policy_index,
        policy: kind,
        replication,
        rows,
        final_regret,
        z_tenth,
        z_final: state.per_arm().iter().map(|s| s.z()).collect(),
        gain,
    })
}

/// Writes the trace CSV. Floats use 17 significant digits.
pub fn write_csv<W: Write>(out: W, results: &[RunResult], gain_mode: bool) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(
        w,
        "{}",
        if gain_mode {
            CSV_HEADER_GAIN
        } else {
            CSV_HEADER
        }
    )?;
    for res in results {
        let name = res.policy.name();
        for row in &res.rows {
            write!(
                w,
                "{name},{},{},{:.16e},{:.16e}",
                res.replication, row.t, row.regret_step, row.regret_cum
            )?;
            if gain_mode {
                match row.gain {
                    Some(g) => write!(w, ",{:.16e},{}", g.beta_hat, g.k_hat)?,
                    None => write!(w, ",,")?,
                }
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a RunConfig,
    bound_constants: BoundConstants,
    horizon_summary: BTreeMap<&'static str, HorizonStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_gain: Option<f64>,
    started_at: &'a str,
    elapsed_s: f64,
}

/// The sidecar sits next to the CSV with a `.json` extension.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Executes the configuration and writes the CSV and its JSON sidecar.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    let output = execute(config)?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    if let Some(dir) = config.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(&config.out).map_err(io_err(&config.out))?;
    output.write_csv(file).map_err(io_err(&config.out))?;
    let sidecar = Sidecar {
        config,
        bound_constants: output.bound_constants,
        horizon_summary: output
            .horizon_summary()
            .into_iter()
            .map(|(k, s)| (k.name(), s))
            .collect(),
        peak_gain: output.peak_gain,
        started_at: &output.started_at,
        elapsed_s: output.elapsed_s,
    };
    let json_path = sidecar_path(&config.out);
    let json = serde_json::to_string_pretty(&sidecar)?;
    fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;
    Ok(output)
}
