//! First-person labeled view by plan-view raycasting.
//!
//! One ray per image column; every object hit in that column becomes a
//! vertical band standing on the ground plane, painted far to near. Bands
//! follow a pinhole camera at eye height, so their on-screen height is
//! inversely proportional to the perpendicular distance. Everything else is ground below the horizon and
//! background above it.

use serde::{Deserialize, Serialize};

use super::{AgentState, Footprint, PlayerState, Scene, Vec2};
use crate::frames::{ClassId, LabeledFrame};

/// Goal entrances render as portals of this height, metres.
const GOAL_HEIGHT_M: f64 = 2.5;
/// Hits closer than this are drawn as if at this depth.
const NEAR_CLIP_M: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Camera {
    pub hfov_deg: f64,
    pub width: usize,
    pub height: usize,
    pub eye_height: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            hfov_deg: 60.0,
            width: 200,
            height: 200,
            eye_height: 1.6,
        }
    }
}

impl Camera {
    /// Focal length in pixels; pixels are square.
    pub fn focal_px(&self) -> f64 {
        self.width as f64 / 2.0 / (self.hfov_deg.to_radians() / 2.0).tan()
    }
}

/// Base intensity per class in `[0, 1]`, dimmed with distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Shading {
    pub structure: f64,
    pub pedestrian: f64,
    pub bicycle: f64,
    pub goal: f64,
    pub ground: f64,
    pub background: f64,
    /// Distance at which object intensity halves, metres.
    pub falloff_m: f64,
}

impl Default for Shading {
    fn default() -> Self {
        Self {
            structure: 0.55,
            pedestrian: 0.8,
            bicycle: 0.95,
            goal: 0.7,
            // Equal, so the bare horizon carries no edge: with nothing in
            // view the processed image is flat.
            ground: 0.1,
            background: 0.1,
            falloff_m: 12.0,
        }
    }
}

impl Shading {
    fn base(&self, class: ClassId) -> f64 {
        match class {
            ClassId::STRUCTURE => self.structure,
            ClassId::PEDESTRIAN => self.pedestrian,
            ClassId::BICYCLE => self.bicycle,
            ClassId::GOAL => self.goal,
            ClassId::GROUND => self.ground,
            _ => self.background,
        }
    }

    fn object(&self, class: ClassId, depth: f64) -> f64 {
        self.base(class) / (1.0 + depth / self.falloff_m)
    }
}

/// Screen rows `(top, bottom)` of an object `height_m` tall standing at
/// perpendicular distance `depth`, before clipping to the image.
pub fn band_rows(depth: f64, height_m: f64, camera: &Camera) -> (f64, f64) {
    let f = camera.focal_px();
    let horizon = camera.height as f64 / 2.0;
    (
        horizon - f * (height_m - camera.eye_height) / depth,
        horizon + f * camera.eye_height / depth,
    )
}

struct Solid {
    shape: Footprint,
    class: ClassId,
    height: f64,
}

fn solids(scene: &Scene, agents: &[AgentState]) -> Vec<Solid> {
    let mut out: Vec<Solid> = scene
        .obstacles
        .iter()
        .map(|o| Solid {
            shape: o.shape,
            class: o.class,
            height: o.height.metres(),
        })
        .collect();
    out.extend(scene.goals.iter().map(|g| Solid {
        shape: g.footprint(),
        class: ClassId::GOAL,
        height: GOAL_HEIGHT_M,
    }));
    out.extend(
        scene
            .agents
            .iter()
            .zip(agents)
            .filter(|(_, s)| s.active)
            .map(|(a, s)| Solid {
                shape: Footprint::Circle {
                    center: s.position,
                    radius: a.radius,
                },
                class: a.class,
                height: a.height(),
            }),
    );
    out
}

/// Renders what the player sees, with per-pixel ground-truth labels.
pub fn render_scene(
    scene: &Scene,
    agents: &[AgentState],
    player: &PlayerState,
    camera: &Camera,
    shading: &Shading,
) -> LabeledFrame {
    let (w, h) = (camera.width, camera.height);
    let mut frame = LabeledFrame::new(w, h, camera.hfov_deg);
    let horizon = h as f64 / 2.0;
    for r in 0..h {
        let below = r as f64 + 0.5 > horizon;
        let (class, v) = if below {
            (ClassId::GROUND, shading.ground)
        } else {
            (ClassId::BACKGROUND, shading.background)
        };
        for c in 0..w {
            frame.set(c, r, v, class);
        }
    }

    let objects = solids(scene, agents);
    let fwd = Vec2::from_heading(player.yaw);
    let right = Vec2::new(fwd.y, -fwd.x);
    let half_tan = (camera.hfov_deg.to_radians() / 2.0).tan();
    for c in 0..w {
        let u = ((c as f64 + 0.5) / w as f64 * 2.0 - 1.0) * half_tan;
        let ray = fwd + right.scale(u);
        let norm = ray.len();
        let dir = ray.scale(1.0 / norm);
        // Far to near, so nearer bands paint over farther ones while taller
        // objects still show above shorter ones in front of them.
        let mut hits: Vec<(f64, &Solid)> = objects
            .iter()
            .filter_map(|o| o.shape.ray_hit(player.position, dir).map(|s| (s, o)))
            .collect();
        hits.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (s, obj) in hits {
            // Distance along the view axis, not along the ray: no fisheye.
            let depth = (s / norm).max(NEAR_CLIP_M);
            let (top, bottom) = band_rows(depth, obj.height, camera);
            let v = shading.object(obj.class, depth);
            for r in 0..h {
                let y = r as f64 + 0.5;
                if y >= top && y < bottom {
                    frame.set(c, r, v, obj.class);
                }
            }
        }
    }
    frame
}
