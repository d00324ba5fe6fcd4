//! Scripted experts and state-only demonstration recording.

mod demo_file;

use serde::{Deserialize, Serialize};

use crate::envs::maze::DIRECTIONS;
use crate::envs::{Env, EnvKind, EnvSpec, State};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
pub use demo_file::{demos_from_str, demos_to_string, read_demos, write_demos, DEMO_MAGIC, DEMO_VERSION};

/// Derivative gain of the CartPole PD rule.
pub const CARTPOLE_KD: f64 = 0.5;

/// Consecutive failed episodes tolerated while recording.
pub const MAX_EXPERT_FAILURES: usize = 100;

/// Action chosen by the scripted expert for the current episode state.
pub fn expert_action(env: &Env) -> usize {
    match env.spec().kind {
        EnvKind::CartPole => {
            let s = env.cartpole().expect("cartpole dynamics");
            usize::from(s.theta + CARTPOLE_KD * s.theta_dot > 0.0)
        }
        EnvKind::MountainCar => {
            // pump energy: push along the current velocity
            let s = env.mountaincar().expect("mountaincar dynamics");
            if s.velocity < 0.0 {
                0
            } else {
                2
            }
        }
        EnvKind::Acrobot => {
            // Torque on the second joint accelerates the first link the
            // opposite way, so pumping uses the negated sign of omega1.
            let s = env.acrobot().expect("acrobot dynamics");
            match s.s[2] {
                w if w > 0.0 => 0,
                w if w < 0.0 => 2,
                _ => 1,
            }
        }
        EnvKind::Maze(_) => {
            let m = env.maze().expect("maze dynamics");
            let dist = m.layout.distances_from(m.layout.goal());
            let here = dist[m.layout.index(m.agent)].unwrap_or(usize::MAX);
            DIRECTIONS
                .iter()
                .position(|&d| {
                    let next = m.layout.move_from(m.agent, d);
                    next != m.agent && dist[m.layout.index(next)].is_some_and(|v| v + 1 == here)
                })
                .unwrap_or(0)
        }
    }
}

/// State-only expert trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: EnvKind,
    pub states: Vec<State>,
    /// Episode return, kept as metadata only.
    pub reward: Option<f64>,
}

impl Trajectory {
    pub fn new(kind: EnvKind, states: Vec<State>, reward: Option<f64>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Input("a trajectory needs at least two states".into()));
        }
        let len = states[0].len();
        if states.iter().any(|s| s.len() != len) {
            return Err(Error::Input("trajectory states differ in shape".into()));
        }
        Ok(Trajectory { kind, states, reward })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Consecutive-state pairs `(s_t, s_{t+1})` from expert trajectories.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatePairSet {
    pub pairs: Vec<(State, State)>,
}

impl StatePairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// All adjacent pairs, trajectory by trajectory.
pub fn make_pairs(demos: &[Trajectory]) -> Result<StatePairSet> {
    if demos.is_empty() {
        return Err(Error::Input("no demonstrations".into()));
    }
    let pairs = demos
        .iter()
        .flat_map(|t| t.states.windows(2).map(|w| (w[0].clone(), w[1].clone())))
        .collect();
    Ok(StatePairSet { pairs })
}

/// Runs one expert episode from `seed`; returns the states, reward and goal flag.
pub fn expert_episode(spec: &EnvSpec, seed: u64) -> Result<(Vec<State>, f64, bool)> {
    let mut env = Env::reset(spec, seed)?;
    let mut states = vec![env.observe()];
    let mut reward = 0.0;
    while !env.is_done() {
        let out = env.step(expert_action(&env))?;
        reward += out.reward;
        states.push(out.state);
    }
    Ok((states, reward, env.goal_reached()))
}

/// Records `n_episodes` goal-reaching expert trajectories. Failed episodes
/// are dropped and the next derived seed is tried.
pub fn record_demonstrations(spec: &EnvSpec, n_episodes: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let mut demos = Vec::with_capacity(n_episodes);
    let mut failures = 0;
    let mut attempt = 0u64;
    while demos.len() < n_episodes {
        let (states, reward, success) = expert_episode(spec, derive_seed(seed, "demo", attempt))?;
        attempt += 1;
        if success {
            failures = 0;
            demos.push(Trajectory::new(spec.kind, states, Some(reward))?);
        } else {
            failures += 1;
            if failures >= MAX_EXPERT_FAILURES {
                return Err(Error::ExpertQuality {
                    env: spec.kind.to_string(),
                    attempts: failures,
                });
            }
        }
    }
    Ok(demos)
}
