//! Town-square wayfinding world.
//!
//! Plan-view coordinates are metres with `x` east and `y` north; the square
//! spans `[0, size]` on both axes. Headings are degrees clockwise from north,
//! so yaw 0 faces `+y` and yaw 90 faces `+x`.
//!
//! A trial starts in front of the fountain facing the subway station. The
//! player must reach the assigned entrance (left or right of the station)
//! within the time limit without riding into a bicycle.

mod agents;
mod collision;
mod layout;
mod render;
mod trial;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::ClassId;

pub use agents::{step_agents, AgentState};
pub use collision::{detect_collision, CollisionEvent, Cooldown, ObjectRef};
pub use layout::{
    builtin_layout, load_layout_file, load_scene, parse_layout, AgentSpec, GoalSpec, Layout,
    ObstacleSpec, Routes, BUILTIN_LAYOUTS, PLAZA_LAYOUTS,
};
pub use render::{band_rows, render_scene, Camera, Shading};
pub use trial::{
    metrics_summary, trial_update, MetricsSummary, NoTrials, TrialConfig, TrialMetrics, TrialState,
    TrialStatus,
};

/// A plan-view point or direction, metres. Serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;

    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;

    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector for a heading in degrees clockwise from north.
    pub fn from_heading(yaw_deg: f64) -> Self {
        let r = yaw_deg.to_radians();
        Self::new(r.sin(), r.cos())
    }

    /// Heading of this direction, degrees clockwise from north in `(-180, 180]`.
    pub fn heading(self) -> f64 {
        self.x.atan2(self.y).to_degrees()
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn len(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).len()
    }

    pub fn normalized(self) -> Option<Vec2> {
        let l = self.len();
        (l > 1e-12).then(|| self.scale(1.0 / l))
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2}, {:.2})", self.x, self.y)
    }
}

/// Plan-view outline of an object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Axis-aligned box.
    Box {
        min: Vec2,
        max: Vec2,
    },
}

impl Footprint {
    /// Closest point of the footprint to `p` (`p` itself when inside).
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        match *self {
            Footprint::Circle { center, radius } => {
                let d = p - center;
                if d.len() <= radius {
                    p
                } else {
                    center + d.scale(radius / d.len())
                }
            }
            Footprint::Box { min, max } => {
                Vec2::new(p.x.clamp(min.x, max.x), p.y.clamp(min.y, max.y))
            }
        }
    }

    /// Distance from `p` to the footprint, 0 inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        p.dist(self.closest_point(p))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Footprint::Circle { center, radius } => p.dist(center) <= radius,
            Footprint::Box { min, max } => {
                (min.x..=max.x).contains(&p.x) && (min.y..=max.y).contains(&p.y)
            }
        }
    }

    pub fn center(&self) -> Vec2 {
        match *self {
            Footprint::Circle { center, .. } => center,
            Footprint::Box { min, max } => (min + max).scale(0.5),
        }
    }

    /// Distance along the ray `origin + s * dir` (`dir` unit length) to the
    /// first boundary crossing at `s >= 0`, if any. Origins inside report 0.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match *self {
            Footprint::Circle { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = -b - disc.sqrt();
                (s >= 0.0).then_some(s)
            }
            Footprint::Box { min, max } => {
                let mut lo = 0.0_f64;
                let mut hi = f64::INFINITY;
                for (o, d, a, b) in [
                    (origin.x, dir.x, min.x, max.x),
                    (origin.y, dir.y, min.y, max.y),
                ] {
                    if d.abs() < 1e-15 {
                        if o < a || o > b {
                            return None;
                        }
                    } else {
                        let (t0, t1) = ((a - o) / d, (b - o) / d);
                        lo = lo.max(t0.min(t1));
                        hi = hi.min(t0.max(t1));
                    }
                }
                (lo <= hi).then_some(lo)
            }
        }
    }
}

/// Rendered height of a static object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightClass {
    /// Benches, planters.
    Low,
    /// Fountain rim, bins.
    Medium,
    /// A standing person.
    Person,
    /// Lampposts, buildings.
    Tall,
}

impl HeightClass {
    pub fn metres(self) -> f64 {
        match self {
            HeightClass::Low => 0.5,
            HeightClass::Medium => 1.0,
            HeightClass::Person => 1.75,
            HeightClass::Tall => 3.5,
        }
    }
}

/// Which subway entrance the player must reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalSide {
    Left,
    Right,
}

impl GoalSide {
    pub fn name(self) -> &'static str {
        match self {
            GoalSide::Left => "left",
            GoalSide::Right => "right",
        }
    }
}

/// A static obstacle placed in a scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub name: String,
    pub class: ClassId,
    pub height: HeightClass,
    pub shape: Footprint,
}

/// A moving agent with its per-trial speed and start delay already drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    pub class: ClassId,
    pub radius: f64,
    pub waypoints: Vec<Vec2>,
    /// Drawn from the layout's speed range, m/s.
    pub speed: f64,
    /// Drawn from the layout's delay range, seconds.
    pub delay: f64,
    /// Whether the agent walks its path as a closed loop instead of leaving.
    pub looped: bool,
}

impl Agent {
    /// Rendered height, metres.
    pub fn height(&self) -> f64 {
        if self.class == ClassId::BICYCLE {
            1.6
        } else {
            HeightClass::Person.metres()
        }
    }
}

/// A goal region. Reaching it means the player's center enters the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub side: GoalSide,
    pub name: String,
    pub min: Vec2,
    pub max: Vec2,
}

impl Goal {
    pub fn footprint(&self) -> Footprint {
        Footprint::Box {
            min: self.min,
            max: self.max,
        }
    }

    pub fn center(&self) -> Vec2 {
        self.footprint().center()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.footprint().contains(p)
    }
}

/// One trial's world: layout geometry plus seeded agent timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub layout: String,
    pub seed: u64,
    pub size: f64,
    pub start: Vec2,
    pub start_yaw: f64,
    pub goals: Vec<Goal>,
    pub obstacles: Vec<Obstacle>,
    pub agents: Vec<Agent>,
    /// Suggested obstacle-free routes to each goal, for scripted walkers.
    pub routes: Vec<(GoalSide, Vec<Vec2>)>,
}

impl Scene {
    pub fn goal(&self, side: GoalSide) -> Option<&Goal> {
        self.goals.iter().find(|g| g.side == side)
    }

    pub fn route(&self, side: GoalSide) -> Option<&[Vec2]> {
        self.routes
            .iter()
            .find(|(s, _)| *s == side)
            .map(|(_, r)| r.as_slice())
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.size).contains(&p.x) && (0.0..=self.size).contains(&p.y)
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown layout `{0}`")]
    UnknownLayout(String),
    #[error("layout `{layout}`: {reason}")]
    Invalid { layout: String, reason: String },
    #[error("layout file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Walking parameters of the player.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlayerParams {
    /// Body radius, metres.
    pub radius: f64,
    /// Walking speed, m/s.
    pub speed: f64,
    /// Turn rate, degrees per second.
    pub turn_rate: f64,
}

impl Default for PlayerParams {
    fn default() -> Self {
        Self {
            radius: 0.25,
            speed: 1.4,
            turn_rate: 120.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub position: Vec2,
    /// Degrees clockwise from north.
    pub yaw: f64,
    pub radius: f64,
}

impl PlayerState {
    pub fn at_start(scene: &Scene, params: &PlayerParams) -> Self {
        Self {
            position: scene.start,
            yaw: scene.start_yaw,
            radius: params.radius,
        }
    }
}

/// Locomotion request for one frame. Each axis is a fraction of full rate in
/// `[-1, 1]`: `forward` along the heading, `strafe` to the right, `turn`
/// clockwise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoveCommand {
    pub forward: f64,
    pub strafe: f64,
    pub turn: f64,
}

/// Applies one frame of locomotion. Obstacles do not block movement; the
/// player is only kept inside the square.
pub fn move_player(
    player: &mut PlayerState,
    cmd: &MoveCommand,
    params: &PlayerParams,
    size: f64,
    dt: f64,
) {
    let clamp1 = |v: f64| {
        if v.is_finite() {
            v.clamp(-1.0, 1.0)
        } else {
            0.0
        }
    };
    player.yaw = (player.yaw + clamp1(cmd.turn) * params.turn_rate * dt).rem_euclid(360.0);
    let fwd = Vec2::from_heading(player.yaw);
    let right = Vec2::new(fwd.y, -fwd.x);
    let mut step = fwd.scale(clamp1(cmd.forward)) + right.scale(clamp1(cmd.strafe));
    if step.len() > 1.0 {
        step = step.scale(1.0 / step.len());
    }
    let p = player.position + step.scale(params.speed * dt);
    let r = player.radius.min(size / 2.0);
    player.position = Vec2::new(p.x.clamp(r, size - r), p.y.clamp(r, size - r));
}
