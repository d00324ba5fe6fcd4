//! Seedable simulators: CartPole, Acrobot, MountainCar and grid mazes.

pub mod acrobot;
pub mod cartpole;
pub mod maze;
pub mod mountaincar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
pub use acrobot::Acrobot;
pub use cartpole::CartPole;
pub use maze::{maze_generate, MazeEnv, MazeLayout};
pub use mountaincar::MountainCar;

/// Survival length that counts as a solved CartPole episode.
pub const CARTPOLE_GOAL_STEPS: usize = 195;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EnvKind {
    CartPole,
    Acrobot,
    MountainCar,
    Maze(usize),
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvKind::CartPole => f.write_str("cartpole"),
            EnvKind::Acrobot => f.write_str("acrobot"),
            EnvKind::MountainCar => f.write_str("mountaincar"),
            EnvKind::Maze(n) => write!(f, "maze{n}"),
        }
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(EnvKind::CartPole),
            "acrobot" => Ok(EnvKind::Acrobot),
            "mountaincar" => Ok(EnvKind::MountainCar),
            _ => s
                .strip_prefix("maze")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|n| *n >= 2)
                .map(EnvKind::Maze)
                .ok_or_else(|| {
                    Error::Usage(format!(
                        "unknown environment `{s}` (expected cartpole, acrobot, mountaincar, maze3, maze5, maze10)"
                    ))
                }),
        }
    }
}

impl From<EnvKind> for String {
    fn from(k: EnvKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for EnvKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Layout of an encoded state. Grids are channels-last:
/// element `(row, col, ch)` lives at `(row * width + col) * channels + ch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateShape {
    Vector(usize),
    Grid { channels: usize, height: usize, width: usize },
}

impl StateShape {
    pub fn len(&self) -> usize {
        match *self {
            StateShape::Vector(n) => n,
            StateShape::Grid {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shape of two states fused for the inverse dynamics model: vectors are
    /// concatenated, grids are stacked along the channel axis.
    pub fn fused(&self) -> StateShape {
        match *self {
            StateShape::Vector(n) => StateShape::Vector(2 * n),
            StateShape::Grid {
                channels,
                height,
                width,
            } => StateShape::Grid {
                channels: 2 * channels,
                height,
                width,
            },
        }
    }

    /// Writes the fusion of `a` and `b` into `out`.
    pub fn fuse_into(&self, a: &[f64], b: &[f64], out: &mut Vec<f64>) {
        match *self {
            StateShape::Vector(_) => {
                out.extend_from_slice(a);
                out.extend_from_slice(b);
            }
            StateShape::Grid { channels, .. } => {
                for (ca, cb) in a.chunks(channels).zip(b.chunks(channels)) {
                    out.extend_from_slice(ca);
                    out.extend_from_slice(cb);
                }
            }
        }
    }
}

impl fmt::Display for StateShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateShape::Vector(n) => write!(f, "{n}"),
            StateShape::Grid {
                channels,
                height,
                width,
            } => write!(f, "{channels}x{height}x{width}"),
        }
    }
}

impl FromStr for StateShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let dims: Vec<usize> = s
            .split('x')
            .map(|d| d.parse().map_err(|_| format!("invalid shape `{s}`")))
            .collect::<std::result::Result<_, _>>()?;
        match dims.as_slice() {
            [n] => Ok(StateShape::Vector(*n)),
            [c, h, w] => Ok(StateShape::Grid {
                channels: *c,
                height: *h,
                width: *w,
            }),
            _ => Err(format!("invalid shape `{s}`")),
        }
    }
}

/// Encoded observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State(pub Vec<f64>);

impl std::ops::Deref for State {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub action_count: usize,
    pub shape: StateShape,
    pub step_cap: usize,
}

impl EnvSpec {
    pub fn new(kind: EnvKind) -> Self {
        let (action_count, shape, step_cap) = match kind {
            EnvKind::CartPole => (2, StateShape::Vector(4), 500),
            EnvKind::Acrobot => (3, StateShape::Vector(6), 500),
            EnvKind::MountainCar => (3, StateShape::Vector(2), 200),
            EnvKind::Maze(n) => (
                4,
                StateShape::Grid {
                    channels: maze::CHANNELS,
                    height: n,
                    width: n,
                },
                10 * n * n,
            ),
        };
        EnvSpec {
            kind,
            action_count,
            shape,
            step_cap,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(EnvSpec::new(name.parse()?))
    }

    pub fn goal_description(&self) -> &'static str {
        match self.kind {
            EnvKind::CartPole => "pole stays up for at least 195 steps",
            EnvKind::Acrobot => "tip rises above the line before the step cap",
            EnvKind::MountainCar => "car reaches the flag at position 0.5",
            EnvKind::Maze(_) => "agent stands on the goal cell",
        }
    }

    /// Per-step reward of a maze of side `n`.
    pub fn maze_step_penalty(n: usize) -> f64 {
        0.1 / (n * n) as f64
    }
}

/// Goal predicate from the length of a finished episode and its last state.
pub fn goal_reached(spec: &EnvSpec, steps: usize, final_state: &[f64]) -> bool {
    match spec.kind {
        EnvKind::CartPole => steps >= CARTPOLE_GOAL_STEPS,
        EnvKind::Acrobot => acrobot::tip_above_line(final_state),
        EnvKind::MountainCar => mountaincar::at_goal(final_state[0], final_state[1]),
        EnvKind::Maze(_) => maze::agent_on_goal(final_state),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Dynamics {
    CartPole(CartPole),
    Acrobot(Acrobot),
    MountainCar(MountainCar),
    Maze(MazeEnv),
}

/// One running episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    spec: EnvSpec,
    dynamics: Dynamics,
    steps: usize,
    done: bool,
    terminal: bool,
}

impl Env {
    /// Starts an episode. For mazes the seed also selects the layout.
    pub fn reset(spec: &EnvSpec, seed: u64) -> Result<Env> {
        let mut rng = rng_from_seed(seed);
        let dynamics = match spec.kind {
            EnvKind::CartPole => Dynamics::CartPole(CartPole::reset(&mut rng)),
            EnvKind::Acrobot => Dynamics::Acrobot(Acrobot::reset(&mut rng)),
            EnvKind::MountainCar => Dynamics::MountainCar(MountainCar::reset(&mut rng)),
            EnvKind::Maze(n) => Dynamics::Maze(MazeEnv::new(maze_generate(n, seed)?)),
        };
        Ok(Env {
            spec: *spec,
            dynamics,
            steps: 0,
            done: false,
            terminal: false,
        })
    }

    /// Starts a maze episode on a given layout.
    pub fn with_layout(layout: MazeLayout) -> Env {
        let spec = EnvSpec::new(EnvKind::Maze(layout.size()));
        Env {
            spec,
            dynamics: Dynamics::Maze(MazeEnv::new(layout)),
            steps: 0,
            done: false,
            terminal: false,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn observe(&self) -> State {
        State(match &self.dynamics {
            Dynamics::CartPole(e) => e.observe(),
            Dynamics::Acrobot(e) => e.observe(),
            Dynamics::MountainCar(e) => e.observe(),
            Dynamics::Maze(e) => e.observe(),
        })
    }

    pub fn cartpole(&self) -> Option<&CartPole> {
        match &self.dynamics {
            Dynamics::CartPole(e) => Some(e),
            _ => None,
        }
    }

    pub fn acrobot(&self) -> Option<&Acrobot> {
        match &self.dynamics {
            Dynamics::Acrobot(e) => Some(e),
            _ => None,
        }
    }

    pub fn mountaincar(&self) -> Option<&MountainCar> {
        match &self.dynamics {
            Dynamics::MountainCar(e) => Some(e),
            _ => None,
        }
    }

    pub fn maze(&self) -> Option<&MazeEnv> {
        match &self.dynamics {
            Dynamics::Maze(e) => Some(e),
            _ => None,
        }
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called after the episode finished".into()));
        }
        if action >= self.spec.action_count {
            return Err(Error::Input(format!(
                "action {action} invalid for {} ({} actions)",
                self.spec.kind, self.spec.action_count
            )));
        }
        self.steps += 1;
        let (terminal, reward) = match &mut self.dynamics {
            Dynamics::CartPole(e) => (e.step(action), 1.0),
            Dynamics::Acrobot(e) => (e.step(action), -1.0),
            Dynamics::MountainCar(e) => (e.step(action), -1.0),
            Dynamics::Maze(e) => {
                let at_goal = e.step(action);
                let penalty = EnvSpec::maze_step_penalty(e.layout.size());
                (at_goal, if at_goal { 1.0 - penalty } else { -penalty })
            }
        };
        self.terminal = terminal;
        self.done = terminal || self.steps >= self.spec.step_cap;
        Ok(StepOutcome {
            state: self.observe(),
            reward,
            done: self.done,
        })
    }

    /// Goal predicate for the episode so far.
    pub fn goal_reached(&self) -> bool {
        goal_reached(&self.spec, self.steps, &self.observe())
    }
}
