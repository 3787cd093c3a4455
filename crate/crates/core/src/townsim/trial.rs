use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CollisionEvent, Cooldown, GoalSide, Scene, Vec2};
use crate::frames::ClassId;

// Frame times are integer multiples of the frame period; this absorbs the
// rounding of e.g. 4500 * (1/90) so the limit lands on its own frame.
const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// Time limit, seconds.
    pub duration: f64,
    /// Remaining time at which the countdown is shown, seconds.
    pub countdown: f64,
    /// Distance the player must move from a collision before the same object
    /// can register again, metres.
    pub cooldown_distance: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            duration: 50.0,
            countdown: 10.0,
            cooldown_distance: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Running,
    Success,
    BikeCrash,
    Timeout,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Running => "running",
            TrialStatus::Success => "success",
            TrialStatus::BikeCrash => "bike_crash",
            TrialStatus::Timeout => "timeout",
        }
    }

    pub fn is_terminal(self) -> bool {
        self != TrialStatus::Running
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub goal: GoalSide,
    /// Seconds since the trial started, capped at the time limit.
    pub elapsed: f64,
    pub status: TrialStatus,
    pub completion_time: Option<f64>,
    /// Countdown display raised.
    pub countdown: bool,
    pub cooldowns: Vec<Cooldown>,
    pub collisions: Vec<CollisionEvent>,
}

impl TrialState {
    pub fn new(goal: GoalSide) -> Self {
        Self {
            goal,
            elapsed: 0.0,
            status: TrialStatus::Running,
            completion_time: None,
            countdown: false,
            cooldowns: Vec::new(),
            collisions: Vec::new(),
        }
    }

    pub fn remaining(&self, config: &TrialConfig) -> f64 {
        (config.duration - self.elapsed).max(0.0)
    }

    pub fn metrics(&self) -> TrialMetrics {
        let moving = self.collisions.iter().filter(|e| e.is_moving()).count();
        let total = self.collisions.len();
        let success = self.status == TrialStatus::Success;
        TrialMetrics {
            status: self.status,
            success,
            collision_free: success && total == 0,
            total_collisions: total,
            stationary_collisions: total - moving,
            moving_collisions: moving,
            completion_time: self.completion_time,
            elapsed: self.elapsed,
        }
    }
}

/// Folds one frame's collision events into the trial and decides its
/// status at time `t`.
///
/// A bicycle collision ends the trial as a crash; otherwise standing in the
/// assigned goal region is a success; otherwise reaching the time limit is a
/// timeout, recorded at exactly the limit. Terminal states never change.
pub fn trial_update(
    state: &mut TrialState,
    events: Vec<CollisionEvent>,
    t: f64,
    player: Vec2,
    scene: &Scene,
    config: &TrialConfig,
) {
    if state.status.is_terminal() {
        return;
    }
    let crashed = events.iter().any(|e| e.class == ClassId::BICYCLE);
    state.collisions.extend(events);
    state.elapsed = t.min(config.duration);
    let at_goal = scene.goal(state.goal).is_some_and(|g| g.contains(player));
    if crashed {
        state.status = TrialStatus::BikeCrash;
    } else if at_goal {
        state.status = TrialStatus::Success;
        state.completion_time = Some(state.elapsed);
    } else if t >= config.duration - TIME_EPS {
        state.status = TrialStatus::Timeout;
        state.elapsed = config.duration;
    }
    state.countdown = state.remaining(config) <= config.countdown + TIME_EPS;
}

/// Outcome of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub status: TrialStatus,
    pub success: bool,
    /// Succeeded without touching anything.
    pub collision_free: bool,
    pub total_collisions: usize,
    pub stationary_collisions: usize,
    pub moving_collisions: usize,
    /// Seconds to reach the goal; successful trials only.
    pub completion_time: Option<f64>,
    pub elapsed: f64,
}

/// Aggregate over a block of trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub trials: usize,
    pub success_rate: f64,
    pub collision_free_rate: f64,
    pub mean_collisions: f64,
    pub mean_stationary_collisions: f64,
    pub mean_moving_collisions: f64,
    /// Mean over successful trials; `None` when nothing succeeded.
    pub mean_completion_time: Option<f64>,
}

#[derive(Debug, Error, PartialEq)]
#[error("cannot summarize an empty list of trials")]
pub struct NoTrials;

pub fn metrics_summary(trials: &[TrialMetrics]) -> Result<MetricsSummary, NoTrials> {
    if trials.is_empty() {
        return Err(NoTrials);
    }
    let n = trials.len() as f64;
    let mean = |f: fn(&TrialMetrics) -> f64| trials.iter().map(f).sum::<f64>() / n;
    let times: Vec<f64> = trials.iter().filter_map(|m| m.completion_time).collect();
    Ok(MetricsSummary {
        trials: trials.len(),
        success_rate: mean(|m| m.success as u8 as f64),
        collision_free_rate: mean(|m| m.collision_free as u8 as f64),
        mean_collisions: mean(|m| m.total_collisions as f64),
        mean_stationary_collisions: mean(|m| m.stationary_collisions as f64),
        mean_moving_collisions: mean(|m| m.moving_collisions as f64),
        mean_completion_time: (!times.is_empty())
            .then(|| times.iter().sum::<f64>() / times.len() as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::townsim::{load_scene, ObjectRef};

    fn event(class: ClassId, object: ObjectRef) -> CollisionEvent {
        CollisionEvent {
            t: 0.0,
            object,
            name: "thing".into(),
            class,
            position: Vec2::new(5.0, 5.0),
            back_up: Vec2::new(0.0, -1.0),
        }
    }

    fn metrics(success: bool, collisions: usize, time: f64) -> TrialMetrics {
        TrialMetrics {
            status: if success {
                TrialStatus::Success
            } else {
                TrialStatus::Timeout
            },
            success,
            collision_free: success && collisions == 0,
            total_collisions: collisions,
            stationary_collisions: collisions,
            moving_collisions: 0,
            completion_time: success.then_some(time),
            elapsed: if success { time } else { 50.0 },
        }
    }

    #[test]
    fn bike_collision_crashes() {
        let scene = load_scene("empty", 0).unwrap();
        let cfg = TrialConfig::default();
        let mut st = TrialState::new(GoalSide::Left);
        trial_update(
            &mut st,
            vec![event(ClassId::BICYCLE, ObjectRef::Agent(0))],
            12.0,
            scene.start,
            &scene,
            &cfg,
        );
        assert_eq!(st.status, TrialStatus::BikeCrash);
        let m = st.metrics();
        assert!(!m.success && !m.collision_free);
        assert_eq!((m.moving_collisions, m.stationary_collisions), (1, 0));
    }

    #[test]
    fn reaching_goal_succeeds() {
        let scene = load_scene("empty", 0).unwrap();
        let cfg = TrialConfig::default();
        let mut st = TrialState::new(GoalSide::Right);
        let goal = scene.goal(GoalSide::Right).unwrap().center();
        let left = scene.goal(GoalSide::Left).unwrap().center();
        trial_update(&mut st, vec![], 29.0, left, &scene, &cfg);
        assert_eq!(st.status, TrialStatus::Running);
        trial_update(&mut st, vec![], 30.0, goal, &scene, &cfg);
        assert_eq!(st.status, TrialStatus::Success);
        let m = st.metrics();
        assert!(m.collision_free);
        assert_eq!(m.completion_time, Some(30.0));
    }

    #[test]
    fn timeout_is_exact_and_absorbing() {
        let scene = load_scene("empty", 0).unwrap();
        let cfg = TrialConfig::default();
        let mut st = TrialState::new(GoalSide::Left);
        trial_update(&mut st, vec![], 39.9, scene.start, &scene, &cfg);
        assert!(!st.countdown);
        trial_update(&mut st, vec![], 40.0, scene.start, &scene, &cfg);
        assert!(st.countdown);
        trial_update(
            &mut st,
            vec![],
            4500.0 * (1.0 / 90.0),
            scene.start,
            &scene,
            &cfg,
        );
        assert_eq!(st.status, TrialStatus::Timeout);
        assert_eq!(st.elapsed, 50.0);
        let goal = scene.goal(GoalSide::Left).unwrap().center();
        trial_update(
            &mut st,
            vec![event(ClassId::BICYCLE, ObjectRef::Agent(0))],
            51.0,
            goal,
            &scene,
            &cfg,
        );
        assert_eq!(st.status, TrialStatus::Timeout);
        assert!(st.collisions.is_empty());
    }

    #[test]
    fn summary_rates() {
        let mut ms: Vec<_> = (0..6).map(|i| metrics(true, 0, 20.0 + i as f64)).collect();
        ms.extend((0..4).map(|_| metrics(false, 2, 0.0)));
        let s = metrics_summary(&ms).unwrap();
        assert_eq!(s.trials, 10);
        assert!((s.success_rate - 0.6).abs() < 1e-12);
        assert!((s.collision_free_rate - 0.6).abs() < 1e-12);
        assert!((s.mean_collisions - 0.8).abs() < 1e-12);
        assert_eq!(s.mean_completion_time, Some(22.5));
        assert_eq!(metrics_summary(&[]), Err(NoTrials));
    }

    #[test]
    fn no_collisions_means_collision_free_equals_success() {
        let ms: Vec<_> = (0..7).map(|i| metrics(i % 3 != 0, 0, 10.0)).collect();
        let s = metrics_summary(&ms).unwrap();
        assert_eq!(s.collision_free_rate, s.success_rate);
    }
}
