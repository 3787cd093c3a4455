//! Frame-time measurement of the full per-frame pipeline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{run_frame, AgentConfig, Engine, EngineError, PolicyKind, ScriptedAgent, TrialSetup};
use crate::frames::StrategyKind;
use crate::townsim::GoalSide;

/// Frame period at the 90 Hz display rate, milliseconds.
pub const FRAME_BUDGET_MS: f64 = 1000.0 / 90.0;

/// Untimed frames run first to warm caches and allocations.
const WARMUP_FRAMES: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub frames: usize,
    pub fps: f64,
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub budget_ms: f64,
    /// Budget minus mean frame time; negative when too slow.
    pub margin_ms: f64,
}

impl BenchReport {
    pub fn within_budget(&self) -> bool {
        self.margin_ms >= 0.0
    }
}

/// Times `frames` frames of a walking agent in a populated layout, cycling
/// through the conditions and restarting trials as they end.
pub fn bench(engine: &Engine, frames: usize) -> Result<BenchReport, EngineError> {
    let cfg = engine.config();
    let dt = engine.dt();
    let agent_cfg = AgentConfig {
        policy: PolicyKind::Waypoint,
        ..cfg.batch.agent.clone()
    };
    let mut trial = 0;
    let mut next_setup = || {
        let setup = TrialSetup {
            condition: StrategyKind::ALL[trial % StrategyKind::ALL.len()],
            block: 0,
            trial,
            layout: "0".into(),
            seed: cfg.scene.seed.wrapping_add(trial as u64),
            goal: if trial % 2 == 0 {
                GoalSide::Left
            } else {
                GoalSide::Right
            },
        };
        trial += 1;
        setup
    };
    let setup = next_setup();
    let mut world = engine.world(&setup)?;
    let mut agent = ScriptedAgent::new(&agent_cfg, &world, None)?;
    let mut state = engine.state();
    let mut times = Vec::with_capacity(frames);
    for i in 0..WARMUP_FRAMES + frames {
        if world.finished() {
            world = engine.world(&next_setup())?;
            agent = ScriptedAgent::new(&agent_cfg, &world, None)?;
            state.reset();
        }
        let start = Instant::now();
        let cmd = agent.command(&world, &cfg.player, dt);
        let out = run_frame(engine, &mut world, &mut state, &cmd)?;
        let px = out.percept.to_gray8(cfg.render.display_gain);
        let elapsed = start.elapsed().as_secs_f64() * 1000.0;
        std::hint::black_box(px);
        if i >= WARMUP_FRAMES {
            times.push(elapsed);
        }
    }
    Ok(report(times))
}

fn report(mut times: Vec<f64>) -> BenchReport {
    let n = times.len();
    let mean = if n == 0 {
        0.0
    } else {
        times.iter().sum::<f64>() / n as f64
    };
    times.sort_by(f64::total_cmp);
    let p99 = if n == 0 {
        0.0
    } else {
        times[((n as f64 * 0.99).ceil() as usize).clamp(1, n) - 1]
    };
    BenchReport {
        frames: n,
        fps: if mean > 0.0 {
            1000.0 / mean
        } else {
            f64::INFINITY
        },
        mean_ms: mean,
        p99_ms: p99,
        max_ms: times.last().copied().unwrap_or(0.0),
        budget_ms: FRAME_BUDGET_MS,
        margin_ms: FRAME_BUDGET_MS - mean,
    }
}
