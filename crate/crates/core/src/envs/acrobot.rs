use std::f64::consts::PI;

use rand::Rng;

const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_1: f64 = 0.5;
const LINK_COM_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;
const DT: f64 = 0.2;
const G: f64 = 9.8;

/// Two-link under-actuated pendulum ("book" dynamics, RK4).
/// Actions: 0, 1, 2 apply torque -1, 0, +1 on the middle joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Acrobot {
    /// theta1, theta2, omega1, omega2
    pub s: [f64; 4],
}

fn wrap(mut x: f64) -> f64 {
    let span = 2.0 * PI;
    while x > PI {
        x -= span;
    }
    while x < -PI {
        x += span;
    }
    x
}

fn derivs(s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2, l1, lc1, lc2, i1, i2) = (LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1, LINK_COM_1, LINK_COM_2, LINK_MOI, LINK_MOI);
    let [theta1, theta2, dtheta1, dtheta2] = s;
    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * G * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * G * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: [f64; 4], torque: f64, dt: f64) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]];
    let k1 = derivs(s, torque);
    let k2 = derivs(add(s, k1, dt / 2.0), torque);
    let k3 = derivs(add(s, k2, dt / 2.0), torque);
    let k4 = derivs(add(s, k3, dt), torque);
    let mut out = s;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

impl Acrobot {
    pub fn reset(rng: &mut impl Rng) -> Self {
        let mut s = [0.0; 4];
        s.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
        Acrobot { s }
    }

    /// `[cos θ1, sin θ1, cos θ2, sin θ2, ω1, ω2]`
    pub fn observe(&self) -> Vec<f64> {
        let [t1, t2, w1, w2] = self.s;
        vec![t1.cos(), t1.sin(), t2.cos(), t2.sin(), w1, w2]
    }

    /// Advances one step; returns true once the tip is above the line.
    pub fn step(&mut self, action: usize) -> bool {
        let torque = action as f64 - 1.0;
        let mut ns = rk4(self.s, torque, DT);
        ns[0] = wrap(ns[0]);
        ns[1] = wrap(ns[1]);
        ns[2] = ns[2].clamp(-MAX_VEL_1, MAX_VEL_1);
        ns[3] = ns[3].clamp(-MAX_VEL_2, MAX_VEL_2);
        self.s = ns;
        tip_above_line(&self.observe())
    }
}

/// `-cos θ1 - cos(θ1 + θ2) > 1`, evaluated from an observation vector.
pub fn tip_above_line(obs: &[f64]) -> bool {
    let (c1, s1, c2, s2) = (obs[0], obs[1], obs[2], obs[3]);
    -c1 - (c1 * c2 - s1 * s2) > 1.0
}
