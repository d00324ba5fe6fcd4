//! Steps every environment with a random policy and with the scripted
//! expert, showing observations, rewards and the goal flag.

use ifolab::envs::{Env, EnvKind, EnvSpec};
use ifolab::experts::expert_action;
use ifolab::rng::derive_rng;
use rand::Rng;

fn play(spec: &EnvSpec, seed: u64, expert: bool) -> ifolab::Result<(usize, f64, bool)> {
    let mut env = Env::reset(spec, seed)?;
    let mut rng = derive_rng(seed, "tour", 0);
    let mut reward = 0.0;
    while !env.is_done() {
        let action = if expert {
            expert_action(&env)
        } else {
            rng.gen_range(0..spec.action_count)
        };
        reward += env.step(action)?.reward;
    }
    Ok((env.steps(), reward, env.goal_reached()))
}

fn main() -> ifolab::Result<()> {
    for kind in [EnvKind::CartPole, EnvKind::Acrobot, EnvKind::MountainCar, EnvKind::Maze(5)] {
        let spec = EnvSpec::new(kind);
        let first = Env::reset(&spec, 1)?.observe();
        println!("{kind}: {} actions, state shape {}, cap {} steps", spec.action_count, spec.shape, spec.step_cap);
        println!("  goal: {}", spec.goal_description());
        if first.len() <= 6 {
            println!("  first observation {:.3?}", first.0);
        }
        for (who, expert) in [("random", false), ("expert", true)] {
            let (steps, reward, goal) = play(&spec, 1, expert)?;
            println!("  {who:<6} {steps:4} steps, reward {reward:9.3}, goal {goal}");
        }
    }
    Ok(())
}
