//! Full training run with per-cycle progress. Extra arguments are TOML
//! assignments layered over the defaults.
//!
//! `cargo run --release --example train_run -- maze5 0 alpha=10 "idm.epochs=5"`

use std::time::Instant;

use ifolab::cli::{resolve_config, ConfigOverrides};
use ifolab::envs::EnvKind;
use ifolab::experts::record_demonstrations;
use ifolab::metrics::compute_baselines;
use ifolab::trainer::run_with_progress;

fn main() -> ifolab::Result<()> {
    let mut args = std::env::args().skip(1);
    let env: EnvKind = args.next().as_deref().unwrap_or("cartpole").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut table = toml::Table::new();
    for assignment in args {
        let (key, value) = assignment.split_once('=').expect("key=value");
        let parsed: toml::Table = format!("v = {value}").parse().expect("TOML value");
        let mut slot = &mut table;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            slot = slot
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .expect("nested key");
        }
        slot.insert(parts[parts.len() - 1].to_string(), parsed["v"].clone());
    }
    let flags = ConfigOverrides {
        env: Some(env),
        seed: Some(seed),
        ..ConfigOverrides::default()
    };
    let config = resolve_config(Some(table), &flags)?;
    let spec = config.spec();
    let demos = record_demonstrations(&spec, config.demo_episodes, config.demo_seed)?;
    let baselines = compute_baselines(&spec, config.eval_episodes, config.eval_seed)?;
    println!(
        "{env} [{}]: random {:.3}, expert {:.3}",
        config.features.label(),
        baselines.random,
        baselines.expert
    );
    let start = Instant::now();
    run_with_progress(&config, &demos, Some(&baselines), |r| {
        println!(
            "cycle {:2}  idm acc {:.3}  pm acc {:.3}  wins {:.2}  non-MAP {:.3}  eval AER {:8.3}  solved {:.2}  P {:.3}  {:.0}s",
            r.cycle,
            r.idm_accuracy,
            r.pm_accuracy,
            r.success_rate,
            r.non_map_fraction,
            r.eval_aer,
            r.eval_success_rate,
            r.eval_performance.unwrap_or(f64::NAN),
            start.elapsed().as_secs_f64()
        );
    })?;
    Ok(())
}
