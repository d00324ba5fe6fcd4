//! Goal-aware training set assembly on a hand-built set of rollouts.

use ifolab::envs::State;
use ifolab::models::{EpisodeRecord, Source, Transition};
use ifolab::rng::rng_from_seed;
use ifolab::sampler::{build_training_set, success_action_distribution, PostSelection};

fn transition(action: usize, source: Source) -> Transition {
    Transition {
        state: State(vec![0.0]),
        action,
        next: State(vec![0.0]),
        source,
    }
}

fn episode(actions: &[usize], goal: bool) -> EpisodeRecord {
    EpisodeRecord {
        transitions: actions.iter().map(|&a| transition(a, Source::Post)).collect(),
        goal,
        reward: 0.0,
        non_map: vec![false; actions.len()],
    }
}

fn main() -> ifolab::Result<()> {
    let records = vec![
        episode(&[0, 0, 0, 1], true),
        episode(&[0, 1, 0, 0, 0], true),
        episode(&[1, 1, 1], false),
        episode(&[1, 0, 1, 1], false),
    ];
    let pre: Vec<Transition> = (0..200).map(|i| transition(i % 2, Source::Pre)).collect();
    let dist = success_action_distribution(&records, 2)?;
    println!("success action distribution {:.3?}", dist.probs());
    let (set, report) = build_training_set(&pre, &records, 1000, 2, PostSelection::Proportional, &mut rng_from_seed(0))?;
    println!("win rate {:.2}", report.win_rate);
    println!("post counts per action {:?}", report.post_counts);
    println!("pre counts per action  {:?}  (weights 1 - P)", report.pre_counts);
    println!("training set size {}", set.len());
    Ok(())
}
