//! Layout files.
//!
//! A layout is a TOML document describing one square:
//!
//! ```toml
//! name = "my-square"
//! size = 10.0                 # side length, metres
//! start = [5.0, 1.0]          # player start
//! start_yaw = 0.0             # degrees clockwise from north
//!
//! [[goals]]                   # exactly one "left" and one "right"
//! side = "left"
//! name = "Left subway entrance"
//! min = [1.0, 9.3]
//! max = [3.5, 10.0]
//!
//! [[obstacles]]               # static; class is a semantic class name
//! name = "Fountain"
//! class = "structure"
//! height = "medium"           # low | medium | person | tall
//! shape = { circle = { center = [5.0, 4.0], radius = 1.2 } }
//! # or   shape = { box = { min = [x0, y0], max = [x1, y1] } }
//!
//! [[agents]]                  # moving; class pedestrian or bicycle
//! name = "Bicycle"
//! class = "bicycle"
//! radius = 0.45
//! speed = [2.0, 4.0]          # m/s range, drawn per trial
//! delay = [0.0, 5.0]          # start-delay range, seconds, drawn per trial
//! looped = true               # walk the path as a closed loop
//! waypoints = [[0.5, 6.9], [9.5, 6.9]]
//!
//! [routes]                    # optional obstacle-free walking routes
//! left = [[3.4, 3.0], [2.25, 9.6]]
//! right = [[6.6, 3.0], [7.75, 9.6]]
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, Footprint, Goal, GoalSide, Obstacle, PlayerParams, Scene, SceneError, Vec2};
use crate::frames::ClassId;
use crate::rng::{stream_id, stream_rng};

/// Ids of the shipped layouts.
pub const BUILTIN_LAYOUTS: [&str; 5] = ["0", "1", "2", "empty", "bike-intercept"];
/// The town-square layouts trials are drawn from.
pub const PLAZA_LAYOUTS: [&str; 3] = ["0", "1", "2"];

pub type ObstacleSpec = Obstacle;
pub type GoalSpec = Goal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    pub class: ClassId,
    pub radius: f64,
    /// Speed range `[min, max]`, m/s.
    pub speed: [f64; 2],
    /// Start-delay range `[min, max]`, seconds.
    #[serde(default)]
    pub delay: [f64; 2],
    #[serde(default)]
    pub looped: bool,
    pub waypoints: Vec<Vec2>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Routes {
    #[serde(default)]
    pub left: Vec<Vec2>,
    #[serde(default)]
    pub right: Vec<Vec2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub name: String,
    #[serde(default = "default_size")]
    pub size: f64,
    pub start: Vec2,
    #[serde(default)]
    pub start_yaw: f64,
    pub goals: Vec<GoalSpec>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub routes: Routes,
}

fn default_size() -> f64 {
    10.0
}

impl Layout {
    /// Checks the geometry invariants every scene relies on.
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason: String| SceneError::Invalid {
            layout: self.name.clone(),
            reason,
        };
        if !(self.size > 0.0 && self.size.is_finite()) {
            return Err(bad("size must be positive".into()));
        }
        let inside = |p: Vec2| (0.0..=self.size).contains(&p.x) && (0.0..=self.size).contains(&p.y);
        if !inside(self.start) {
            return Err(bad("start lies outside the square".into()));
        }
        let body = PlayerParams::default().radius;
        for o in &self.obstacles {
            if !inside(o.shape.center()) {
                return Err(bad(format!(
                    "obstacle `{}` lies outside the square",
                    o.name
                )));
            }
            if let Footprint::Circle { radius, .. } = o.shape {
                if !(radius > 0.0) {
                    return Err(bad(format!(
                        "obstacle `{}` needs a positive radius",
                        o.name
                    )));
                }
            }
            if let Footprint::Box { min, max } = o.shape {
                if !(min.x < max.x && min.y < max.y) {
                    return Err(bad(format!("obstacle `{}` box has min >= max", o.name)));
                }
            }
            if o.shape.distance(self.start) < body {
                return Err(bad(format!("start overlaps obstacle `{}`", o.name)));
            }
        }
        let left: Vec<_> = self
            .goals
            .iter()
            .filter(|g| g.side == GoalSide::Left)
            .collect();
        let right: Vec<_> = self
            .goals
            .iter()
            .filter(|g| g.side == GoalSide::Right)
            .collect();
        if left.len() != 1 || right.len() != 1 || self.goals.len() != 2 {
            return Err(bad("need exactly one left and one right goal".into()));
        }
        for g in &self.goals {
            if !(g.min.x < g.max.x && g.min.y < g.max.y) || !inside(g.min) || !inside(g.max) {
                return Err(bad(format!(
                    "goal `{}` is not a box inside the square",
                    g.name
                )));
            }
            if g.contains(self.start) {
                return Err(bad(format!("start lies inside goal `{}`", g.name)));
            }
        }
        let (l, r) = (left[0], right[0]);
        let overlap_x = l.min.x < r.max.x && r.min.x < l.max.x;
        let overlap_y = l.min.y < r.max.y && r.min.y < l.max.y;
        if overlap_x && overlap_y {
            return Err(bad("goal regions overlap".into()));
        }
        for a in &self.agents {
            if a.class != ClassId::PEDESTRIAN && a.class != ClassId::BICYCLE {
                return Err(bad(format!(
                    "agent `{}` must be a pedestrian or bicycle",
                    a.name
                )));
            }
            if a.waypoints.len() < 2 {
                return Err(bad(format!(
                    "agent `{}` needs at least two waypoints",
                    a.name
                )));
            }
            if let Some(p) = a.waypoints.iter().find(|p| !inside(**p)) {
                return Err(bad(format!(
                    "agent `{}` waypoint {p} outside the square",
                    a.name
                )));
            }
            if a.waypoints.windows(2).all(|w| w[0] == w[1]) {
                return Err(bad(format!("agent `{}` path has zero length", a.name)));
            }
            if !(a.radius > 0.0) {
                return Err(bad(format!("agent `{}` needs a positive radius", a.name)));
            }
            if !(a.speed[0] > 0.0 && a.speed[0] <= a.speed[1] && a.speed[1].is_finite()) {
                return Err(bad(format!(
                    "agent `{}` speed range must satisfy 0 < min <= max",
                    a.name
                )));
            }
            if !(a.delay[0] >= 0.0 && a.delay[0] <= a.delay[1] && a.delay[1].is_finite()) {
                return Err(bad(format!(
                    "agent `{}` delay range must satisfy 0 <= min <= max",
                    a.name
                )));
            }
        }
        for p in self.routes.left.iter().chain(&self.routes.right) {
            if !inside(*p) {
                return Err(bad(format!("route point {p} outside the square")));
            }
        }
        Ok(())
    }

    /// Instantiates the layout for one trial: agent speeds and start delays
    /// are drawn from a generator seeded by `seed`.
    pub fn instantiate(&self, seed: u64) -> Scene {
        let mut rng = stream_rng(seed, stream_id("agents"));
        let mut draw = |[lo, hi]: [f64; 2]| {
            if lo < hi {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        };
        let agents = self
            .agents
            .iter()
            .map(|a| Agent {
                name: a.name.clone(),
                class: a.class,
                radius: a.radius,
                waypoints: a.waypoints.clone(),
                speed: draw(a.speed),
                delay: draw(a.delay),
                looped: a.looped,
            })
            .collect();
        Scene {
            layout: self.name.clone(),
            seed,
            size: self.size,
            start: self.start,
            start_yaw: self.start_yaw,
            goals: self.goals.clone(),
            obstacles: self.obstacles.clone(),
            agents,
            routes: vec![
                (GoalSide::Left, self.routes.left.clone()),
                (GoalSide::Right, self.routes.right.clone()),
            ],
        }
    }
}

pub fn parse_layout(text: &str) -> Result<Layout, SceneError> {
    let layout: Layout = toml::from_str(text)?;
    layout.validate()?;
    Ok(layout)
}

pub fn load_layout_file(path: &Path) -> Result<Layout, SceneError> {
    parse_layout(&std::fs::read_to_string(path)?)
}

/// One of the shipped layouts by id.
pub fn builtin_layout(id: &str) -> Result<Layout, SceneError> {
    let text = match id {
        "0" => include_str!("../../layouts/plaza_0.toml"),
        "1" => include_str!("../../layouts/plaza_1.toml"),
        "2" => include_str!("../../layouts/plaza_2.toml"),
        "empty" => include_str!("../../layouts/empty.toml"),
        "bike-intercept" => include_str!("../../layouts/bike_intercept.toml"),
        other => return Err(SceneError::UnknownLayout(other.to_owned())),
    };
    parse_layout(text)
}

/// Scene for a layout id (a shipped id, or a path to a `.toml` layout file)
/// with agent timing drawn from `seed`.
pub fn load_scene(layout: &str, seed: u64) -> Result<Scene, SceneError> {
    let spec = if BUILTIN_LAYOUTS.contains(&layout) {
        builtin_layout(layout)?
    } else if layout.ends_with(".toml") {
        load_layout_file(Path::new(layout))?
    } else {
        return Err(SceneError::UnknownLayout(layout.to_owned()));
    };
    Ok(spec.instantiate(seed))
}
