//! Headless batch runs: condition blocks of scripted trials, trial logs,
//! aggregate summaries and optional percept dumps.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::image::{montage, write_pgm};
use super::{
    run_frame, Engine, EngineConfig, EngineError, FrameOutput, GoalChoice, InputTrace, PolicyKind,
    ScriptedAgent, TrialSetup,
};
use crate::frames::StrategyKind;
use crate::rng::{derive_seed, stream_id, stream_rng};
use crate::townsim::{
    metrics_summary, GoalSide, MetricsSummary, TrialMetrics, TrialStatus, PLAZA_LAYOUTS,
};

/// One row of the trial log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub condition: StrategyKind,
    pub block: usize,
    pub trial: usize,
    pub layout: String,
    pub seed: u64,
    pub goal: GoalSide,
    pub status: TrialStatus,
    pub success: bool,
    pub collision_free: bool,
    pub total_collisions: usize,
    pub stationary_collisions: usize,
    pub moving_collisions: usize,
    /// Empty unless the trial succeeded.
    pub completion_time: Option<f64>,
    pub elapsed: f64,
    /// Subjective 1–10 rating; only ever filled in by a human client.
    pub difficulty: Option<u8>,
}

impl TrialRecord {
    pub fn new(setup: &TrialSetup, m: &TrialMetrics) -> Self {
        Self {
            condition: setup.condition,
            block: setup.block,
            trial: setup.trial,
            layout: setup.layout.clone(),
            seed: setup.seed,
            goal: setup.goal,
            status: m.status,
            success: m.success,
            collision_free: m.collision_free,
            total_collisions: m.total_collisions,
            stationary_collisions: m.stationary_collisions,
            moving_collisions: m.moving_collisions,
            completion_time: m.completion_time,
            elapsed: m.elapsed,
            difficulty: None,
        }
    }

    pub fn metrics(&self) -> TrialMetrics {
        TrialMetrics {
            status: self.status,
            success: self.success,
            collision_free: self.collision_free,
            total_collisions: self.total_collisions,
            stationary_collisions: self.stationary_collisions,
            moving_collisions: self.moving_collisions,
            completion_time: self.completion_time,
            elapsed: self.elapsed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: StrategyKind,
    #[serde(flatten)]
    pub summary: MetricsSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<ConditionSummary>,
    pub frames_rendered: u64,
    pub frames_written: u64,
    pub out_dir: PathBuf,
}

/// Presentation order: Control first when present, then the semantic
/// conditions, reversed for odd seeds to counterbalance.
pub fn condition_order(conditions: &[StrategyKind], seed: u64) -> Vec<StrategyKind> {
    let mut out = Vec::new();
    if conditions.contains(&StrategyKind::Control) {
        out.push(StrategyKind::Control);
    }
    let mut rest: Vec<StrategyKind> = conditions
        .iter()
        .copied()
        .filter(|c| *c != StrategyKind::Control)
        .collect();
    rest.dedup();
    if seed % 2 == 1 {
        rest.reverse();
    }
    out.extend(rest);
    out
}

/// Trial setups for a whole batch, in presentation order. Each trial gets
/// its own seed; the layout and goal side come from that seed unless fixed
/// by the configuration.
pub fn trial_setups(config: &EngineConfig) -> Vec<TrialSetup> {
    let base = config.scene.seed;
    let order = condition_order(&config.batch.conditions, base);
    let mut out = Vec::new();
    for (block, condition) in order.into_iter().enumerate() {
        for trial in 0..config.batch.trials {
            let index = (block * config.batch.trials + trial) as u64;
            let seed = derive_seed(base, index);
            out.push(TrialSetup {
                condition,
                block,
                trial,
                layout: pick_layout(&config.scene.layout, seed),
                seed,
                goal: pick_goal(config.scene.goal, seed),
            });
        }
    }
    out
}

pub(crate) fn pick_layout(layout: &str, seed: u64) -> String {
    if layout == "random" {
        let i = stream_rng(seed, stream_id("layout")).random_range(0..PLAZA_LAYOUTS.len());
        PLAZA_LAYOUTS[i].to_owned()
    } else {
        layout.to_owned()
    }
}

pub(crate) fn pick_goal(choice: GoalChoice, seed: u64) -> GoalSide {
    match choice {
        GoalChoice::Left => GoalSide::Left,
        GoalChoice::Right => GoalSide::Right,
        GoalChoice::Random => {
            if stream_rng(seed, stream_id("goal")).random_bool(0.5) {
                GoalSide::Left
            } else {
                GoalSide::Right
            }
        }
    }
}

/// Result of one scripted trial.
#[derive(Clone, Debug)]
pub struct TrialRun {
    pub record: TrialRecord,
    pub trace: InputTrace,
    pub frames: u64,
}

/// Runs one trial to its end, handing every frame to `sink`.
pub fn run_trial(
    engine: &Engine,
    setup: &TrialSetup,
    trace: Option<&InputTrace>,
    sink: &mut dyn FnMut(&FrameOutput) -> Result<(), EngineError>,
) -> Result<TrialRun, EngineError> {
    let cfg = engine.config();
    let dt = engine.dt();
    let mut world = engine.world(setup)?;
    let mut state = engine.state();
    let mut agent = ScriptedAgent::new(&cfg.batch.agent, &world, trace)?;
    let mut commands = Vec::new();
    // The trial clock always ends it; this only guards a broken clock.
    let limit = (cfg.trial.duration / dt).ceil() as u64 + 2;
    while !world.finished() && world.frame < limit {
        let cmd = agent.command(&world, &cfg.player, dt);
        let out = run_frame(engine, &mut world, &mut state, &cmd)?;
        commands.push(cmd);
        sink(&out)?;
    }
    Ok(TrialRun {
        record: TrialRecord::new(setup, &world.trial.metrics()),
        trace: InputTrace {
            setup: setup.clone(),
            commands,
        },
        frames: world.frame,
    })
}

fn create_dir(path: &Path) -> Result<(), EngineError> {
    fs::create_dir_all(path).map_err(|e| EngineError::io(path.display(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), EngineError> {
    fs::write(path, bytes).map_err(|e| EngineError::io(path.display(), e))
}

/// Runs every configured trial and writes, under `out_dir`:
///
/// - `trials.csv` and `trials.jsonl`: one record per trial
/// - `summary.json`: aggregate metrics per condition
/// - `traces/<condition>_b<block>_t<trial>.json`: input traces for replay
/// - `frames/<condition>_b<block>_t<trial>/NNNNN.pgm` when frame dumps are on
/// - `montage/<condition>_b<block>_t<trial>.pgm` when montages are on
///
/// With the `replay` policy the single trial recorded in the configured
/// trace is re-run instead.
pub fn run_batch(engine: &Engine, out_dir: &Path) -> Result<BatchReport, EngineError> {
    let cfg = engine.config();
    let replay = match cfg.batch.agent.policy {
        PolicyKind::Replay => {
            let path = cfg
                .batch
                .agent
                .trace
                .as_ref()
                .ok_or_else(|| EngineError::Trace("replay needs a trace file".into()))?;
            Some(InputTrace::read(path)?)
        }
        _ => None,
    };
    let setups = match &replay {
        Some(t) => vec![t.setup.clone()],
        None => trial_setups(cfg),
    };

    create_dir(out_dir)?;
    create_dir(&out_dir.join("traces"))?;
    let size = engine.grid().width();
    let gain = cfg.render.display_gain;
    let io = &cfg.io;

    let mut records = Vec::new();
    let mut frames_rendered = 0;
    let mut frames_written = 0;
    for setup in &setups {
        let tag = format!(
            "{}_b{}_t{:03}",
            setup.condition.name(),
            setup.block,
            setup.trial
        );
        let frame_dir = out_dir.join("frames").join(&tag);
        if io.dump_frames {
            create_dir(&frame_dir)?;
        }
        let mut tiles = Vec::new();
        let mut sink = |out: &FrameOutput| -> Result<(), EngineError> {
            let wanted_dump = io.dump_frames && out.frame.is_multiple_of(io.frame_stride as u64);
            let wanted_tile = io.montage && out.frame.is_multiple_of(io.montage_every as u64);
            if wanted_dump || wanted_tile {
                let px = out.percept.to_gray8(gain);
                if wanted_dump {
                    write_pgm(
                        &frame_dir.join(format!("{:05}.pgm", out.frame)),
                        size,
                        size,
                        &px,
                    )?;
                    frames_written += 1;
                }
                if wanted_tile {
                    tiles.push(px);
                }
            }
            Ok(())
        };
        let run = run_trial(engine, setup, replay.as_ref(), &mut sink)?;
        frames_rendered += run.frames;
        if io.montage && !tiles.is_empty() {
            create_dir(&out_dir.join("montage"))?;
            let (w, h, px) = montage(&tiles, size, size, 8);
            write_pgm(
                &out_dir.join("montage").join(format!("{tag}.pgm")),
                w,
                h,
                &px,
            )?;
        }
        run.trace
            .write(&out_dir.join("traces").join(format!("{tag}.json")))?;
        records.push(run.record);
    }

    let mut summaries = Vec::new();
    let mut seen = Vec::new();
    for r in &records {
        if seen.contains(&r.condition) {
            continue;
        }
        seen.push(r.condition);
        let ms: Vec<TrialMetrics> = records
            .iter()
            .filter(|x| x.condition == r.condition)
            .map(TrialRecord::metrics)
            .collect();
        summaries.push(ConditionSummary {
            condition: r.condition,
            summary: metrics_summary(&ms).expect("condition has trials"),
        });
    }

    write_logs(out_dir, &records)?;
    let summary = serde_json::to_string_pretty(&summaries).expect("summary serializes");
    write_file(&out_dir.join("summary.json"), summary.as_bytes())?;

    Ok(BatchReport {
        records,
        summaries,
        frames_rendered,
        frames_written,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Writes `trials.csv` and `trials.jsonl`.
pub(crate) fn write_logs(out_dir: &Path, records: &[TrialRecord]) -> Result<(), EngineError> {
    let mut csv = csv::Writer::from_writer(Vec::new());
    for r in records {
        csv.serialize(r)
            .map_err(|e| EngineError::io("trials.csv", std::io::Error::other(e)))?;
    }
    let csv = csv
        .into_inner()
        .map_err(|e| EngineError::io("trials.csv", std::io::Error::other(e.to_string())))?;
    write_file(&out_dir.join("trials.csv"), &csv)?;
    let mut jsonl = String::new();
    for r in records {
        jsonl.push_str(&serde_json::to_string(r).expect("record serializes"));
        jsonl.push('\n');
    }
    write_file(&out_dir.join("trials.jsonl"), jsonl.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_first_then_counterbalanced() {
        use StrategyKind::*;
        let all = StrategyKind::ALL;
        assert_eq!(
            condition_order(&all, 2),
            vec![Control, SemanticEdges, SemanticRaster]
        );
        assert_eq!(
            condition_order(&all, 3),
            vec![Control, SemanticRaster, SemanticEdges]
        );
        assert_eq!(
            condition_order(&[SemanticRaster, Control, SemanticEdges], 4),
            vec![Control, SemanticRaster, SemanticEdges]
        );
    }

    #[test]
    fn thirty_setups_for_ten_by_three() {
        let cfg = EngineConfig::default();
        let s = trial_setups(&cfg);
        assert_eq!(s.len(), 30);
        assert!(s.iter().all(|t| PLAZA_LAYOUTS.contains(&t.layout.as_str())));
        let blocks: Vec<_> = s.iter().map(|t| (t.block, t.condition)).collect();
        assert_eq!(blocks[0], (0, StrategyKind::Control));
        assert_eq!(blocks[29].0, 2);
        assert_eq!(s, trial_setups(&cfg));
    }
}
