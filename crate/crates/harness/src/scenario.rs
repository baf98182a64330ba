//! UAV kinematics and per-frame scene construction.
//!
//! Every UAV flies a straight line at constant velocity. Its arrays sit in the
//! body x-z plane: `forward` is the heading, `up` is world z and
//! `right = forward x up`. A direction is described by its sines along
//! `right` (azimuth) and `up` (elevation); a target is inside the field of
//! view when both sines are within `sin_fov`.

use isac_core::channel::{Direction, Path, PathKind, Scene};
use isac_core::config::{SystemConfig, Terminal};
use isac_core::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub name: String,
    /// Initial position [m].
    pub position: Vec3,
    /// Velocity [m/s].
    pub velocity: Vec3,
    /// Unit boresight direction in the horizontal plane.
    pub heading: Vec3,
}

impl Uav {
    pub fn position_at(&self, t: f64) -> Vec3 {
        [self.position[0] + self.velocity[0] * t, self.position[1] + self.velocity[1] * t, self.position[2] + self.velocity[2] * t]
    }

    /// Direction sines of world vector `v` in the body frame.
    pub fn body_direction(&self, v: Vec3) -> Direction {
        let u = scale(v, 1.0 / norm(v));
        let up = [0.0, 0.0, 1.0];
        let right = cross(self.heading, up);
        Direction::new(dot(u, right), dot(u, up))
    }
}

/// Direction inside a field of view with half-width sine `sin_fov`.
pub fn in_fov(dir: Direction, sin_fov: f64) -> bool {
    dir.az.abs() <= sin_fov && dir.el.abs() <= sin_fov
}

/// Ground truth of one path as the observing terminal should report it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// Name of the UAV the path reveals.
    pub target: String,
    pub kind: PathKind,
    pub distance: f64,
    pub velocity: f64,
    pub departure: Direction,
    pub arrival: Direction,
}

/// Reference three-UAV swarm: index 0 is the active terminal, the rest are passive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Swarm {
    pub uavs: Vec<Uav>,
}

impl Swarm {
    pub fn reference() -> Self {
        let plus_y = [0.0, 1.0, 0.0];
        let minus_y = [0.0, -1.0, 0.0];
        Self {
            uavs: vec![
                Uav { name: "AT".into(), position: [0.0, 0.0, 300.0], velocity: scale(plus_y, 10.0), heading: plus_y },
                Uav { name: "PT1".into(), position: [-8.0, 8.0, 300.0], velocity: scale(plus_y, 15.0), heading: plus_y },
                Uav { name: "PT2".into(), position: [4.0, -8.0, 300.0], velocity: scale(minus_y, 20.0), heading: minus_y },
            ],
        }
    }

    /// Same geometry with every UAV hovering.
    pub fn stationary(mut self) -> Self {
        for u in &mut self.uavs {
            u.velocity = [0.0; 3];
        }
        self
    }

    fn rel(&self, from: usize, to: usize, t: f64) -> (Vec3, Vec3) {
        let (a, b) = (&self.uavs[from], &self.uavs[to]);
        (sub(b.position_at(t), a.position_at(t)), sub(b.velocity, a.velocity))
    }

    /// Distance and its rate between two UAVs.
    fn leg(&self, from: usize, to: usize, t: f64) -> (f64, f64) {
        let (d, v) = self.rel(from, to, t);
        let r = norm(d);
        (r, dot(d, v) / r)
    }

    fn direction(&self, from: usize, to: usize, t: f64) -> Direction {
        let (d, _) = self.rel(from, to, t);
        self.uavs[from].body_direction(d)
    }

    /// Paths at the active terminal: one echo per passive UAV inside its
    /// field of view and range window.
    pub fn active_scene(&self, t: f64, cfg: &SystemConfig) -> (Scene, Vec<Truth>) {
        let sin_fov = cfg.geometry.sin_fov();
        let mut paths = Vec::new();
        let mut truth = Vec::new();
        for k in 1..self.uavs.len() {
            let dir = self.direction(0, k, t);
            let (d, v) = self.leg(0, k, t);
            if !in_fov(dir, sin_fov) || !in_range(cfg, Terminal::Active, d) {
                continue;
            }
            paths.push(Path::echo(d, v, dir, carrier_phase(cfg, 2.0 * d)));
            truth.push(Truth { target: self.uavs[k].name.clone(), kind: PathKind::Echo, distance: d, velocity: v, departure: dir, arrival: dir });
        }
        (Scene { terminal: Terminal::Active, paths }, truth)
    }

    /// Paths at passive UAV `pt`: the direct path from the active terminal
    /// and one reflection per other passive UAV lying in both fields of view.
    pub fn passive_scene(&self, pt: usize, t: f64, cfg: &SystemConfig) -> (Scene, Vec<Truth>) {
        let sin_fov = cfg.geometry.sin_fov();
        let mut paths = Vec::new();
        let mut truth = Vec::new();
        let mut push = |target: &str, kind, d: f64, v: f64, departure, arrival| {
            if in_fov(departure, sin_fov) && in_fov(arrival, sin_fov) && in_range(cfg, Terminal::Passive, d) {
                paths.push(Path { kind, distance: d, velocity: v, departure, arrival, amplitude: carrier_phase(cfg, d) });
                truth.push(Truth { target: target.to_string(), kind, distance: d, velocity: v, departure, arrival });
            }
        };
        let (d, v) = self.leg(0, pt, t);
        push(&self.uavs[0].name, PathKind::LineOfSight, d, v, self.direction(0, pt, t), self.direction(pt, 0, t));
        for k in 1..self.uavs.len() {
            if k == pt {
                continue;
            }
            let (d1, v1) = self.leg(0, k, t);
            let (d2, v2) = self.leg(k, pt, t);
            push(&self.uavs[k].name, PathKind::Reflected, d1 + d2, v1 + v2, self.direction(0, k, t), self.direction(pt, k, t));
        }
        (Scene { terminal: Terminal::Passive, paths }, truth)
    }
}

fn in_range(cfg: &SystemConfig, term: Terminal, d: f64) -> bool {
    let bin = cfg.range_to_bin(term, d);
    bin >= 0.0 && bin < (cfg.n / 2) as f64
}

/// Unit gain carrying the propagation phase of a path of length `len`.
fn carrier_phase(cfg: &SystemConfig, len: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * (len / cfg.wavelength()).rem_euclid(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_distances() {
        let cfg = SystemConfig::default();
        let swarm = Swarm::reference().stationary();
        let (scene, truth) = swarm.passive_scene(1, 0.0, &cfg);
        assert_eq!(scene.paths.len(), 2);
        assert!((truth[0].distance - 128f64.sqrt()).abs() < 1e-9);
        assert!((truth[1].distance - (80f64.sqrt() + 20.0)).abs() < 1e-9);
        assert!(truth.iter().all(|t| t.velocity == 0.0));
        let (at, _) = swarm.active_scene(0.0, &cfg);
        assert_eq!(at.paths.len(), 2);
    }

    #[test]
    fn body_frame_mirrors_for_reverse_heading() {
        let swarm = Swarm::reference();
        let v = [1.0, 1.0, 0.0];
        let a = swarm.uavs[0].body_direction(v);
        let b = swarm.uavs[2].body_direction(v);
        assert!((a.az + b.az).abs() < 1e-12);
        assert!((a.az - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
