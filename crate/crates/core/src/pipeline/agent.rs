//! Scripted stand-ins for a human player in headless runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentConfig, EngineError, GazeMode, InputCommand, PolicyKind, TrialSetup, World};
use crate::townsim::{PlayerParams, Vec2};

/// Waypoints closer than this count as reached, metres.
const ARRIVE_RADIUS_M: f64 = 0.2;
/// Heading error beyond which the walker stops to turn, degrees.
const TURN_IN_PLACE_DEG: f64 = 30.0;

/// Every command applied during one trial, frame by frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputTrace {
    pub setup: TrialSetup,
    pub commands: Vec<InputCommand>,
}

impl InputTrace {
    pub fn read(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::io(path.display(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| EngineError::Trace(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), EngineError> {
        let text = serde_json::to_string(self).expect("trace serializes");
        std::fs::write(path, text).map_err(|e| EngineError::io(path.display(), e))
    }
}

#[derive(Clone, Debug)]
enum Plan {
    Idle,
    Targets { points: Vec<Vec2>, next: usize },
    Replay { commands: Vec<InputCommand> },
}

/// Produces one input command per frame.
#[derive(Clone, Debug)]
pub struct ScriptedAgent {
    plan: Plan,
    gaze: GazeMode,
    gaze_center: (f64, f64),
    gaze_amplitude: f64,
    gaze_period: f64,
}

impl ScriptedAgent {
    /// Agent for the trial in `world`. Replay needs the recorded `trace`.
    pub fn new(
        cfg: &AgentConfig,
        world: &World,
        trace: Option<&InputTrace>,
    ) -> Result<Self, EngineError> {
        let goal = world
            .scene
            .goal(world.trial.goal)
            .ok_or_else(|| EngineError::Trace("scene has no goal on the assigned side".into()))?;
        let plan = match cfg.policy {
            PolicyKind::Idle => Plan::Idle,
            PolicyKind::Straight => Plan::Targets {
                points: vec![goal.center()],
                next: 0,
            },
            PolicyKind::Waypoint => {
                let mut points = world
                    .scene
                    .route(world.trial.goal)
                    .unwrap_or_default()
                    .to_vec();
                if points.is_empty() {
                    points.push(goal.center());
                }
                Plan::Targets { points, next: 0 }
            }
            PolicyKind::Replay => Plan::Replay {
                commands: trace
                    .ok_or_else(|| EngineError::Trace("replay needs an input trace".into()))?
                    .commands
                    .clone(),
            },
        };
        Ok(Self {
            plan,
            gaze: cfg.gaze,
            gaze_center: (cfg.gaze_yaw, cfg.gaze_pitch),
            gaze_amplitude: cfg.gaze_amplitude,
            gaze_period: cfg.gaze_period,
        })
    }

    pub fn command(&mut self, world: &World, player: &PlayerParams, dt: f64) -> InputCommand {
        let t = world.time(dt);
        let (gaze_yaw, gaze_pitch) = self.gaze_at(t);
        match &mut self.plan {
            Plan::Idle => InputCommand {
                gaze_yaw,
                gaze_pitch,
                ..Default::default()
            },
            Plan::Replay { commands } => commands
                .get(world.frame as usize)
                .copied()
                .unwrap_or_default(),
            Plan::Targets { points, next } => {
                let pos = world.player.position;
                while *next + 1 < points.len() && pos.dist(points[*next]) < ARRIVE_RADIUS_M {
                    *next += 1;
                }
                let to = points[*next] - pos;
                let error = wrap_deg(to.heading() - world.player.yaw);
                let max_turn = player.turn_rate * dt;
                let turn = if max_turn > 0.0 {
                    (error / max_turn).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                let forward = if error.abs() < TURN_IN_PLACE_DEG && to.len() > 1e-6 {
                    1.0
                } else {
                    0.0
                };
                InputCommand {
                    forward,
                    strafe: 0.0,
                    turn,
                    gaze_yaw,
                    gaze_pitch,
                }
            }
        }
    }

    fn gaze_at(&self, t: f64) -> (f64, f64) {
        let (y0, p0) = self.gaze_center;
        match self.gaze {
            GazeMode::Fixed => (y0, p0),
            GazeMode::Sinusoid => {
                let w = std::f64::consts::TAU * t / self.gaze_period;
                (
                    y0 + self.gaze_amplitude * w.sin(),
                    p0 + 0.5 * self.gaze_amplitude * (2.0 * w).sin(),
                )
            }
        }
    }
}

/// Angle wrapped into `(-180, 180]`.
fn wrap_deg(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_angles() {
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(0.0), 0.0);
    }
}
