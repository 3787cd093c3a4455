use serde::{Deserialize, Serialize};

use super::{Agent, Scene, Vec2};

/// Where an agent is along its waypoint path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    /// Degrees clockwise from north.
    pub heading: f64,
    pub speed: f64,
    /// Index of the waypoint the current leg starts from.
    pub leg: usize,
    /// Metres travelled along the current leg.
    pub progress: f64,
    /// In the square and moving. False before the start delay and after a
    /// non-looping agent has reached its last waypoint.
    pub active: bool,
    pub finished: bool,
}

impl AgentState {
    pub fn initial(agent: &Agent) -> Self {
        let heading = leg_direction(agent, 0).map_or(0.0, Vec2::heading);
        Self {
            position: agent.waypoints[0],
            heading,
            speed: agent.speed,
            leg: 0,
            progress: 0.0,
            active: false,
            finished: false,
        }
    }

    pub fn all_initial(scene: &Scene) -> Vec<Self> {
        scene.agents.iter().map(Self::initial).collect()
    }
}

fn leg_count(agent: &Agent) -> usize {
    let n = agent.waypoints.len();
    if agent.looped {
        n
    } else {
        n.saturating_sub(1)
    }
}

fn leg_ends(agent: &Agent, leg: usize) -> (Vec2, Vec2) {
    let n = agent.waypoints.len();
    (agent.waypoints[leg], agent.waypoints[(leg + 1) % n])
}

fn leg_direction(agent: &Agent, leg: usize) -> Option<Vec2> {
    if leg >= leg_count(agent) {
        return None;
    }
    let (a, b) = leg_ends(agent, leg);
    (b - a).normalized()
}

/// Advances every agent over the interval `(t - dt, t]`.
///
/// An agent starts moving at its delay and covers `speed * time` metres of
/// its polyline. At a waypoint it turns toward the next one; at the end of
/// the path it either wraps to the first waypoint or leaves the square.
pub fn step_agents(scene: &Scene, states: &mut [AgentState], t: f64, dt: f64) {
    for (agent, st) in scene.agents.iter().zip(states.iter_mut()) {
        if st.finished {
            continue;
        }
        let moving_time = (t - agent.delay).clamp(0.0, dt);
        if moving_time <= 0.0 {
            continue;
        }
        st.active = true;
        advance(agent, st, agent.speed * moving_time);
    }
}

fn advance(agent: &Agent, st: &mut AgentState, mut dist: f64) {
    let legs = leg_count(agent);
    // A closed path that never goes anywhere would loop forever.
    let total: f64 = (0..legs)
        .map(|l| {
            let (a, b) = leg_ends(agent, l);
            a.dist(b)
        })
        .sum();
    if legs == 0 || total <= 0.0 {
        return;
    }
    if agent.looped {
        dist %= total;
    }
    loop {
        let (a, b) = leg_ends(agent, st.leg);
        let len = a.dist(b);
        if st.progress + dist < len {
            st.progress += dist;
            let dir = (b - a).scale(1.0 / len);
            st.position = a + dir.scale(st.progress);
            st.heading = dir.heading();
            return;
        }
        dist -= len - st.progress;
        st.progress = 0.0;
        st.leg += 1;
        if st.leg >= legs {
            if agent.looped {
                st.leg = 0;
            } else {
                st.leg = legs - 1;
                st.position = b;
                st.active = false;
                st.finished = true;
                return;
            }
        }
        st.position = agent.waypoints[st.leg];
        if let Some(d) = leg_direction(agent, st.leg) {
            st.heading = d.heading();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::ClassId;

    fn agent(waypoints: &[[f64; 2]], speed: f64, delay: f64, looped: bool) -> Agent {
        Agent {
            name: "Walker".into(),
            class: ClassId::PEDESTRIAN,
            radius: 0.3,
            waypoints: waypoints.iter().map(|w| Vec2::from(*w)).collect(),
            speed,
            delay,
            looped,
        }
    }

    fn scene_with(agent: Agent) -> Scene {
        let mut s = crate::townsim::load_scene("empty", 0).unwrap();
        s.agents = vec![agent];
        s
    }

    #[test]
    fn advances_speed_times_dt() {
        let scene = scene_with(agent(&[[1.0, 5.0], [9.0, 5.0]], 1.0, 0.0, false));
        let mut st = AgentState::all_initial(&scene);
        let dt = 1.0 / 90.0;
        step_agents(&scene, &mut st, dt, dt);
        assert!((st[0].position.x - (1.0 + dt)).abs() < 1e-12);
        assert!(st[0].active);
        assert!((st[0].heading - 90.0).abs() < 1e-12);
    }

    #[test]
    fn waits_for_delay() {
        let scene = scene_with(agent(&[[1.0, 5.0], [9.0, 5.0]], 2.0, 1.0, false));
        let mut st = AgentState::all_initial(&scene);
        step_agents(&scene, &mut st, 0.5, 0.5);
        assert!(!st[0].active);
        step_agents(&scene, &mut st, 1.25, 0.75);
        assert!((st[0].position.x - 1.5).abs() < 1e-12);
    }

    #[test]
    fn turns_at_waypoint() {
        let scene = scene_with(agent(
            &[[1.0, 1.0], [2.0, 1.0], [2.0, 3.0]],
            1.0,
            0.0,
            false,
        ));
        let mut st = AgentState::all_initial(&scene);
        step_agents(&scene, &mut st, 1.5, 1.5);
        assert_eq!(st[0].leg, 1);
        assert!((st[0].heading - 0.0).abs() < 1e-12);
        assert!((st[0].position.y - 1.5).abs() < 1e-12);
    }

    #[test]
    fn open_path_leaves_closed_path_wraps() {
        let open = scene_with(agent(&[[1.0, 1.0], [3.0, 1.0]], 1.0, 0.0, false));
        let mut st = AgentState::all_initial(&open);
        step_agents(&open, &mut st, 3.0, 3.0);
        assert!(st[0].finished && !st[0].active);
        assert_eq!(st[0].position, Vec2::new(3.0, 1.0));

        let closed = scene_with(agent(&[[1.0, 1.0], [3.0, 1.0]], 1.0, 0.0, true));
        let mut st = AgentState::all_initial(&closed);
        step_agents(&closed, &mut st, 5.0, 5.0);
        assert!(st[0].active);
        // 5 m on a 4 m loop: out, back, and 1 m out again.
        assert!((st[0].position.x - 2.0).abs() < 1e-12);
        assert!((st[0].heading - 90.0).abs() < 1e-12);
        step_agents(&closed, &mut st, 6.5, 1.5);
        assert!((st[0].position.x - 2.5).abs() < 1e-12);
        assert!((st[0].heading + 90.0).abs() < 1e-12);
    }

    #[test]
    fn agents_stay_on_path_inside_square() {
        let scene = crate::townsim::load_scene("0", 9).unwrap();
        let mut st = AgentState::all_initial(&scene);
        let dt = 1.0 / 90.0;
        for k in 1..=90 * 60 {
            step_agents(&scene, &mut st, k as f64 * dt, dt);
            for s in &st {
                assert!(scene.contains(s.position), "{:?}", s.position);
            }
        }
    }
}
