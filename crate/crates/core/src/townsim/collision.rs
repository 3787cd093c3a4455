use serde::{Deserialize, Serialize};

use super::{AgentState, Footprint, PlayerState, Scene, Vec2};
use crate::frames::ClassId;

/// A collidable object: a static obstacle or a moving agent, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectRef {
    Obstacle(usize),
    Agent(usize),
}

/// Suppresses repeat events for `object` until the player has moved the
/// clearing distance away from `anchor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cooldown {
    pub object: ObjectRef,
    /// Player position when the collision registered.
    pub anchor: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    pub object: ObjectRef,
    pub name: String,
    pub class: ClassId,
    /// Player position at contact.
    pub position: Vec2,
    /// Unit vector pointing away from the object.
    pub back_up: Vec2,
}

impl CollisionEvent {
    /// Collisions with moving agents, as opposed to static obstacles.
    pub fn is_moving(&self) -> bool {
        matches!(self.object, ObjectRef::Agent(_))
    }
}

/// Registers new contacts between the player and scene objects.
///
/// Cooldowns whose anchor is at least `clear_distance` from the player are
/// dropped first. Then every object whose footprint overlaps the player's
/// body circle and has no pending cooldown yields one event and a new
/// cooldown anchored at the current player position.
pub fn detect_collision(
    player: &PlayerState,
    scene: &Scene,
    agents: &[AgentState],
    cooldowns: &mut Vec<Cooldown>,
    clear_distance: f64,
    t: f64,
) -> Vec<CollisionEvent> {
    cooldowns.retain(|c| player.position.dist(c.anchor) < clear_distance);

    let statics = scene
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, o)| (ObjectRef::Obstacle(i), o.name.as_str(), o.class, o.shape));
    let moving = scene
        .agents
        .iter()
        .zip(agents)
        .enumerate()
        .filter(|(_, (_, st))| st.active)
        .map(|(i, (a, st))| {
            let shape = Footprint::Circle {
                center: st.position,
                radius: a.radius,
            };
            (ObjectRef::Agent(i), a.name.as_str(), a.class, shape)
        });

    let mut events = Vec::new();
    for (object, name, class, shape) in statics.chain(moving) {
        if shape.distance(player.position) >= player.radius {
            continue;
        }
        if cooldowns.iter().any(|c| c.object == object) {
            continue;
        }
        cooldowns.push(Cooldown {
            object,
            anchor: player.position,
        });
        events.push(CollisionEvent {
            t,
            object,
            name: name.to_owned(),
            class,
            position: player.position,
            back_up: back_up_direction(player, &shape),
        });
    }
    events
}

fn back_up_direction(player: &PlayerState, shape: &Footprint) -> Vec2 {
    (player.position - shape.closest_point(player.position))
        .normalized()
        .or_else(|| (player.position - shape.center()).normalized())
        .unwrap_or_else(|| Vec2::from_heading(player.yaw + 180.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::townsim::{load_scene, HeightClass, Obstacle};

    fn scene_with_post() -> Scene {
        let mut s = load_scene("empty", 0).unwrap();
        s.obstacles = vec![Obstacle {
            name: "Lamppost".into(),
            class: ClassId::STRUCTURE,
            height: HeightClass::Tall,
            shape: Footprint::Circle {
                center: Vec2::new(5.0, 5.0),
                radius: 0.15,
            },
        }];
        s
    }

    fn player_at(x: f64, y: f64) -> PlayerState {
        PlayerState {
            position: Vec2::new(x, y),
            yaw: 0.0,
            radius: 0.25,
        }
    }

    #[test]
    fn back_up_points_away() {
        let s = scene_with_post();
        let mut cd = Vec::new();
        let ev = detect_collision(&player_at(5.0, 4.7), &s, &[], &mut cd, 0.25, 1.0);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].name, "Lamppost");
        assert!((ev[0].back_up.y + 1.0).abs() < 1e-12);
        assert!(!ev[0].is_moving());
    }

    #[test]
    fn far_player_has_no_events() {
        let s = scene_with_post();
        let mut cd = Vec::new();
        assert!(detect_collision(&player_at(1.0, 1.0), &s, &[], &mut cd, 0.25, 0.0).is_empty());
    }

    #[test]
    fn inactive_agents_do_not_collide() {
        let s = load_scene("bike-intercept", 0).unwrap();
        let states = AgentState::all_initial(&s);
        let mut cd = Vec::new();
        let p = PlayerState {
            position: s.agents[0].waypoints[0],
            yaw: 0.0,
            radius: 0.25,
        };
        assert!(detect_collision(&p, &s, &states, &mut cd, 0.25, 0.0).is_empty());
    }
}
