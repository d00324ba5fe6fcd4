use rand::Rng;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Under-powered car in a valley. Actions: 0 push left, 1 no push, 2 push right.
#[derive(Debug, Clone, PartialEq)]
pub struct MountainCar {
    pub position: f64,
    pub velocity: f64,
}

impl MountainCar {
    pub fn reset(rng: &mut impl Rng) -> Self {
        MountainCar {
            position: rng.gen_range(-0.6..-0.4),
            velocity: 0.0,
        }
    }

    pub fn observe(&self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }

    /// Advances one step; returns true once the flag is reached.
    pub fn step(&mut self, action: usize) -> bool {
        self.velocity += (action as f64 - 1.0) * FORCE - (3.0 * self.position).cos() * GRAVITY;
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position = (self.position + self.velocity).clamp(MIN_POSITION, MAX_POSITION);
        if self.position == MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }
        at_goal(self.position, self.velocity)
    }
}

pub fn at_goal(position: f64, velocity: f64) -> bool {
    position >= GOAL_POSITION && velocity >= 0.0
}
