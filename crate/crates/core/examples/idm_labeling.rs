//! Trains an inverse dynamics model on random-policy transitions and uses it
//! to label expert state pairs, comparing against the actions the expert
//! actually took.

use ifolab::envs::{Env, EnvKind, EnvSpec};
use ifolab::experts::{expert_action, StatePairSet};
use ifolab::models::{label_pairs, train_idm, Mode, ModelSpec, NetConfig, TrainConfig};
use ifolab::rng::rng_from_seed;
use ifolab::trainer::generate_pre_demos;

fn main() -> ifolab::Result<()> {
    let kind: EnvKind = std::env::args().nth(1).as_deref().unwrap_or("cartpole").parse()?;
    let spec = EnvSpec::new(kind);
    let pre = generate_pre_demos(&spec, 3000, 1)?;

    // expert pairs with their true actions, which the IDM never sees
    let mut pairs = Vec::new();
    let mut truth = Vec::new();
    for seed in 0..5 {
        let mut env = Env::reset(&spec, 100 + seed)?;
        while !env.is_done() {
            let before = env.observe();
            let action = expert_action(&env);
            let after = env.step(action)?.state;
            pairs.push((before, after));
            truth.push(action);
        }
    }
    let pairs = StatePairSet { pairs };

    let model_spec = ModelSpec {
        shape: spec.shape,
        actions: spec.action_count,
        net: NetConfig::default(),
        train: TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        },
    };
    let (idm, stats) = train_idm(&pre, &model_spec, None, &mut rng_from_seed(2))?;
    println!("{kind}: IDM training accuracy {:.3} on {} random transitions", stats.accuracy, pre.len());
    for mode in [Mode::Map, Mode::Explore] {
        let labels = label_pairs(&idm.params, spec.shape, &pairs, mode, &mut rng_from_seed(3))?;
        let right = labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
        println!(
            "  {:<7} labels match the expert on {right}/{} pairs",
            mode.name(),
            truth.len()
        );
    }
    Ok(())
}
