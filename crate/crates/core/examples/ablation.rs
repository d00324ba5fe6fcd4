//! All eight feature combinations on a small maze with short runs.

use ifolab::envs::{EnvKind, EnvSpec};
use ifolab::experts::record_demonstrations;
use ifolab::metrics::compute_baselines;
use ifolab::models::{NetConfig, TrainConfig};
use ifolab::trainer::{ablate, ablation_means, RunConfig};

fn main() -> ifolab::Result<()> {
    let base = RunConfig {
        alpha: 4,
        rollouts: 16,
        pre_size: 2000,
        eval_episodes: 50,
        net: NetConfig {
            channels: 8,
            ..NetConfig::default()
        },
        idm: TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        },
        pm: TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        },
        ..RunConfig::for_env(EnvKind::Maze(3))
    };
    let spec = EnvSpec::new(base.env);
    let demos = record_demonstrations(&spec, base.demo_episodes, base.demo_seed)?;
    let baselines = compute_baselines(&spec, base.eval_episodes, base.eval_seed)?;
    let rows = ablate(&base, &demos, &[0], &baselines, |row| {
        println!("{:<24} P {:7.3}  AER {:7.3}", row.combination, row.performance, row.aer)
    })?;
    let best = ablation_means(&rows)
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("eight rows");
    println!("best: {} (P {:.3})", best.0, best.1);
    Ok(())
}
