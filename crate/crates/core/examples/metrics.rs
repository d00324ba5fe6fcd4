//! Random and expert baselines per environment, and Performance of a few
//! reference scores against them.

use ifolab::envs::{EnvKind, EnvSpec};
use ifolab::metrics::{aer, compute_baselines, performance};

fn main() -> ifolab::Result<()> {
    for kind in [EnvKind::CartPole, EnvKind::MountainCar, EnvKind::Maze(3)] {
        let spec = EnvSpec::new(kind);
        let b = compute_baselines(&spec, 100, 1)?;
        let midway = (b.random + b.expert) / 2.0;
        println!(
            "{kind:<12} random {:8.3}  expert {:8.3}  P(midway) {:.3}  P(expert) {:.3}",
            b.random,
            b.expert,
            performance(midway, &b)?,
            performance(b.expert, &b)?
        );
    }
    println!("AER of [1, 2, 3] = {}", aer(&[1.0, 2.0, 3.0])?);
    Ok(())
}
