//! Benchmark fixtures for the hot paths of `wib-core`.

use wib_core::{ArmStats, BanditInstance, PosteriorParams};

/// A `K`-arm instance with norms `K, K-1, …, 1` and unit variances.
pub fn ladder_instance(arms: usize) -> BanditInstance {
    let means = (0..arms).map(|k| [(arms - k) as f64, 0.0]).collect();
    BanditInstance::new(means, vec![1.0; arms]).expect("ladder instance is valid")
}

/// Posteriors resembling round `t` of a run with well-separated arms.
pub fn ladder_posteriors(arms: usize, t: u64) -> Vec<PosteriorParams> {
    (0..arms)
        .map(|k| {
            let z = if k == 0 {
                t as f64 * 0.9
            } else {
                5.0 + k as f64
            };
            PosteriorParams::new(z, [(arms - k) as f64, 0.0], t as f64, t)
                .expect("ladder posterior is valid")
        })
        .collect()
}

/// Statistics after `n` unit-power observations on a small lattice.
pub fn filled_stats(n: usize) -> ArmStats {
    let mut s = ArmStats::new();
    for i in 0..n {
        s.update(1.0, Some([(i % 7) as f64, (i % 3) as f64]))
            .expect("unit power with an observation");
    }
    s
}
