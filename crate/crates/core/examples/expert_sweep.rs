//! Scripted expert quality on every environment over 100 seeds.

use ifolab::envs::{EnvKind, EnvSpec};
use ifolab::experts::expert_episode;

fn main() -> ifolab::Result<()> {
    let kinds = [
        EnvKind::CartPole,
        EnvKind::Acrobot,
        EnvKind::MountainCar,
        EnvKind::Maze(3),
        EnvKind::Maze(5),
        EnvKind::Maze(10),
    ];
    for kind in kinds {
        let spec = EnvSpec::new(kind);
        let mut total = 0.0;
        let mut worst = f64::INFINITY;
        let mut wins = 0;
        for seed in 0..100 {
            let (_, reward, goal) = expert_episode(&spec, seed)?;
            total += reward;
            worst = worst.min(reward);
            wins += usize::from(goal);
        }
        println!("{kind:<12} expert AER {:8.3}  worst {worst:8.3}  goal {wins}/100", total / 100.0);
    }
    Ok(())
}
