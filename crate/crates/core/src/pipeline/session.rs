//! Transport-independent state machine for one interactive session.
//!
//! The session owns the world and serializes every mutation: client
//! messages only update pending state, and [`Session::tick`] runs exactly
//! one frame using the most recent input. Trials follow the same schedule
//! as a batch run, block by block.

use std::path::PathBuf;

use super::batch::write_logs;
use super::protocol::{ClientMessage, CloseCode, CollisionHud, Hud, ProtocolError, ServerMessage};
use super::{
    encode_frame, run_frame, trial_setups, Engine, EngineError, EngineState, InputCommand,
    InputTrace, TrialRecord, TrialSetup, World, COLLISION_MESSAGE, PROTOCOL_VERSION,
};
use crate::frames::StrategyKind;
use crate::townsim::CollisionEvent;

/// How long a collision banner stays on the HUD, seconds.
const COLLISION_HUD_S: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Nothing but `hello` is accepted.
    AwaitHello,
    /// Between trials; waiting for `start_trial`.
    Ready,
    Running,
    /// A block just ended; waiting for `rate_difficulty`.
    AwaitRating,
    /// Every scheduled trial is done and rated.
    Finished,
}

/// Something to send to the client.
#[derive(Clone, Debug, PartialEq)]
pub enum Outgoing {
    Text(ServerMessage),
    Frame(Vec<u8>),
}

impl Outgoing {
    pub fn to_json(msg: &ServerMessage) -> String {
        serde_json::to_string(msg).expect("server message serializes")
    }
}

struct ActiveTrial {
    setup: TrialSetup,
    practice: bool,
    world: World,
    state: EngineState,
    commands: Vec<InputCommand>,
    last_collision: Option<(u64, CollisionEvent)>,
}

pub struct Session<'a> {
    engine: &'a Engine,
    out_dir: Option<PathBuf>,
    phase: Phase,
    schedule: Vec<TrialSetup>,
    next: usize,
    input: InputCommand,
    active: Option<ActiveTrial>,
    records: Vec<TrialRecord>,
    traces: Vec<InputTrace>,
    ratings: Vec<(usize, u8)>,
}

impl<'a> Session<'a> {
    /// A session over the configured trial schedule. With `out_dir`, the
    /// trial log and input traces are written there as trials finish.
    pub fn new(engine: &'a Engine, out_dir: Option<PathBuf>) -> Self {
        Self {
            engine,
            out_dir,
            phase: Phase::AwaitHello,
            schedule: trial_setups(engine.config()),
            next: 0,
            input: InputCommand::default(),
            active: None,
            records: Vec::new(),
            traces: Vec::new(),
            ratings: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    /// Input traces of the logged trials, in order.
    pub fn traces(&self) -> &[InputTrace] {
        &self.traces
    }

    /// `(block, rating)` pairs in the order received.
    pub fn ratings(&self) -> &[(usize, u8)] {
        &self.ratings
    }

    /// Handles one text message from the client.
    pub fn handle_text(&mut self, text: &str) -> Result<Vec<Outgoing>, ProtocolError> {
        let msg: ClientMessage = serde_json::from_str(text).map_err(|e| {
            ProtocolError::new(CloseCode::Malformed, format!("unreadable message: {e}"))
        })?;
        self.handle(msg)
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Result<Vec<Outgoing>, ProtocolError> {
        let out_of_order = |what: &str, phase: Phase| {
            ProtocolError::new(
                CloseCode::OutOfOrder,
                format!("{what} not allowed in phase {phase:?}"),
            )
        };
        match msg {
            ClientMessage::Hello { version } => {
                if self.phase != Phase::AwaitHello {
                    return Err(out_of_order("hello", self.phase));
                }
                if version != PROTOCOL_VERSION {
                    return Err(ProtocolError::new(
                        CloseCode::VersionMismatch,
                        format!(
                            "client speaks version {version}, server speaks {PROTOCOL_VERSION}"
                        ),
                    ));
                }
                self.phase = if self.schedule.is_empty() {
                    Phase::Finished
                } else {
                    Phase::Ready
                };
                Ok(vec![Outgoing::Text(ServerMessage::Config {
                    version: PROTOCOL_VERSION,
                    config: Box::new(self.engine.config().clone()),
                })])
            }
            ClientMessage::Input(cmd) => {
                if self.phase == Phase::AwaitHello {
                    return Err(out_of_order("input", self.phase));
                }
                let finite = [
                    cmd.forward,
                    cmd.strafe,
                    cmd.turn,
                    cmd.gaze_yaw,
                    cmd.gaze_pitch,
                ]
                .iter()
                .all(|v| v.is_finite());
                if !finite {
                    return Err(ProtocolError::new(
                        CloseCode::InvalidValue,
                        "input values must be finite",
                    ));
                }
                self.input = cmd;
                Ok(Vec::new())
            }
            ClientMessage::StartTrial { practice } => {
                if self.phase != Phase::Ready {
                    return Err(out_of_order("start_trial", self.phase));
                }
                self.start(practice)
            }
            ClientMessage::RateDifficulty { value } => {
                if self.phase != Phase::AwaitRating {
                    return Err(out_of_order("rate_difficulty", self.phase));
                }
                if !(1..=10).contains(&value) {
                    return Err(ProtocolError::new(
                        CloseCode::InvalidValue,
                        format!("difficulty {value} is outside 1..=10"),
                    ));
                }
                let block = self.schedule[self.next - 1].block;
                self.ratings.push((block, value));
                for r in self.records.iter_mut().filter(|r| r.block == block) {
                    r.difficulty = Some(value);
                }
                self.phase = if self.next == self.schedule.len() {
                    Phase::Finished
                } else {
                    Phase::Ready
                };
                Ok(Vec::new())
            }
        }
    }

    fn start(&mut self, practice: bool) -> Result<Vec<Outgoing>, ProtocolError> {
        let mut setup = self.schedule[self.next].clone();
        if practice {
            setup.condition = StrategyKind::Control;
        }
        let world = self
            .engine
            .world(&setup)
            .map_err(|e| ProtocolError::new(CloseCode::Internal, e.to_string()))?;
        self.active = Some(ActiveTrial {
            setup: setup.clone(),
            practice,
            world,
            state: self.engine.state(),
            commands: Vec::new(),
            last_collision: None,
        });
        self.input = InputCommand::default();
        self.phase = Phase::Running;
        Ok(vec![Outgoing::Text(ServerMessage::TrialStart {
            setup,
            practice,
        })])
    }

    /// Runs one frame if a trial is in progress: a percept frame and a HUD
    /// update, plus `trial_end` when the trial finishes.
    pub fn tick(&mut self) -> Result<Vec<Outgoing>, EngineError> {
        let Some(active) = self.active.as_mut() else {
            return Ok(Vec::new());
        };
        let engine = self.engine;
        let cfg = engine.config();
        let dt = engine.dt();
        let cmd = self.input;
        let out = run_frame(engine, &mut active.world, &mut active.state, &cmd)?;
        active.commands.push(cmd);
        if let Some(e) = out.events.last() {
            active.last_collision = Some((active.world.frame, e.clone()));
        }
        let hold = (COLLISION_HUD_S / dt).round() as u64;
        let collision = active
            .last_collision
            .as_ref()
            .filter(|(at, _)| active.world.frame - at < hold)
            .map(|(_, e)| collision_hud(e, active.world.player.yaw));

        let size = engine.grid().width();
        let px = out.percept.to_gray8(cfg.render.display_gain);
        let trial = &active.world.trial;
        let mut msgs = vec![
            Outgoing::Frame(encode_frame(size, size, out.frame, &px)),
            Outgoing::Text(ServerMessage::Hud(Hud {
                frame: out.frame,
                condition: active.setup.condition,
                block: active.setup.block,
                trial: active.setup.trial,
                practice: active.practice,
                remaining: trial.remaining(&cfg.trial),
                countdown: trial.countdown,
                collision,
            })),
        ];
        if active.world.finished() {
            let active = self.active.take().expect("trial is active");
            msgs.push(self.finish(active)?);
        }
        Ok(msgs)
    }

    fn finish(&mut self, active: ActiveTrial) -> Result<Outgoing, EngineError> {
        let metrics = active.world.trial.metrics();
        let mut block_complete = false;
        let mut session_complete = false;
        if active.practice {
            self.phase = Phase::Ready;
        } else {
            self.records.push(TrialRecord::new(&active.setup, &metrics));
            let trace = InputTrace {
                setup: active.setup.clone(),
                commands: active.commands,
            };
            self.next += 1;
            block_complete = self
                .schedule
                .get(self.next)
                .is_none_or(|s| s.block != active.setup.block);
            session_complete = self.next == self.schedule.len();
            self.phase = if block_complete {
                Phase::AwaitRating
            } else {
                Phase::Ready
            };
            if let Some(dir) = &self.out_dir {
                let traces = dir.join("traces");
                std::fs::create_dir_all(&traces)
                    .map_err(|e| EngineError::io(traces.display(), e))?;
                let s = &active.setup;
                trace.write(&traces.join(format!(
                    "{}_b{}_t{:03}.json",
                    s.condition.name(),
                    s.block,
                    s.trial
                )))?;
            }
            self.traces.push(trace);
        }
        self.save()?;
        Ok(Outgoing::Text(ServerMessage::TrialEnd {
            setup: active.setup,
            practice: active.practice,
            metrics,
            block_complete,
            session_complete,
        }))
    }

    /// Rewrites the trial log, including any ratings received so far.
    pub fn save(&self) -> Result<(), EngineError> {
        match &self.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| EngineError::io(dir.display(), e))?;
                write_logs(dir, &self.records)
            }
            None => Ok(()),
        }
    }
}

fn collision_hud(e: &CollisionEvent, yaw: f64) -> CollisionHud {
    let rel = (e.back_up.heading() - yaw).rem_euclid(360.0);
    CollisionHud {
        message: COLLISION_MESSAGE.to_owned(),
        object: e.name.clone(),
        class: e.class,
        direction: e.back_up,
        direction_deg: if rel > 180.0 { rel - 360.0 } else { rel },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{EngineConfig, PolicyKind};

    fn engine(trials: usize) -> Engine {
        let mut cfg = EngineConfig::default();
        cfg.batch.trials = trials;
        cfg.trial.duration = 1.0;
        cfg.trial.countdown = 0.5;
        cfg.scene.layout = "empty".into();
        cfg.batch.agent.policy = PolicyKind::Idle;
        Engine::new(cfg).unwrap()
    }

    fn texts(out: &[Outgoing]) -> Vec<&ServerMessage> {
        out.iter()
            .filter_map(|o| match o {
                Outgoing::Text(m) => Some(m),
                Outgoing::Frame(_) => None,
            })
            .collect()
    }

    #[test]
    fn hello_is_required_and_versioned() {
        let e = engine(1);
        let mut s = Session::new(&e, None);
        let err = s.handle_text(r#"{"type":"start_trial"}"#).unwrap_err();
        assert_eq!(err.code, CloseCode::OutOfOrder);
        let err = s
            .handle_text(r#"{"type":"hello","version":99}"#)
            .unwrap_err();
        assert_eq!(err.code, CloseCode::VersionMismatch);
        let err = s.handle_text("not json").unwrap_err();
        assert_eq!(err.code, CloseCode::Malformed);
        let out = s.handle_text(r#"{"type":"hello","version":1}"#).unwrap();
        match texts(&out)[0] {
            ServerMessage::Config { config, .. } => assert_eq!(**config, *e.config()),
            m => panic!("unexpected {m:?}"),
        }
        assert_eq!(s.phase(), Phase::Ready);
    }

    #[test]
    fn blocks_end_with_one_rating_prompt() {
        let e = engine(1);
        let mut s = Session::new(&e, None);
        s.handle_text(r#"{"type":"hello","version":1}"#).unwrap();
        let mut prompts = 0;
        for block in 0..3 {
            s.handle_text(r#"{"type":"start_trial"}"#).unwrap();
            let mut frames = 0;
            loop {
                let out = s.tick().unwrap();
                frames += out
                    .iter()
                    .filter(|o| matches!(o, Outgoing::Frame(_)))
                    .count();
                if let Some(ServerMessage::TrialEnd {
                    block_complete,
                    metrics,
                    ..
                }) = texts(&out).last()
                {
                    assert_eq!(metrics.elapsed, 1.0);
                    prompts += *block_complete as usize;
                    break;
                }
            }
            assert_eq!(frames, 90);
            assert_eq!(s.phase(), Phase::AwaitRating);
            assert_eq!(
                s.handle_text(r#"{"type":"rate_difficulty","value":11}"#)
                    .unwrap_err()
                    .code,
                CloseCode::InvalidValue
            );
            s.handle_text(&format!(
                r#"{{"type":"rate_difficulty","value":{}}}"#,
                block + 2
            ))
            .unwrap();
        }
        assert_eq!(prompts, 3);
        assert_eq!(s.phase(), Phase::Finished);
        let ratings: Vec<_> = s.records().iter().map(|r| r.difficulty).collect();
        assert_eq!(ratings, vec![Some(2), Some(3), Some(4)]);
    }

    #[test]
    fn practice_trials_are_not_logged() {
        let e = engine(2);
        let mut s = Session::new(&e, None);
        s.handle_text(r#"{"type":"hello","version":1}"#).unwrap();
        s.handle_text(r#"{"type":"start_trial","practice":true}"#)
            .unwrap();
        while s.phase() == Phase::Running {
            s.tick().unwrap();
        }
        assert_eq!(s.phase(), Phase::Ready);
        assert!(s.records().is_empty());
    }

    #[test]
    fn collision_hud_points_back() {
        use crate::frames::ClassId;
        use crate::townsim::{ObjectRef, Vec2};
        let e = CollisionEvent {
            t: 1.0,
            object: ObjectRef::Obstacle(0),
            name: "Fountain".into(),
            class: ClassId::STRUCTURE,
            position: Vec2::new(5.0, 3.0),
            back_up: Vec2::new(0.0, -1.0),
        };
        let h = collision_hud(&e, 0.0);
        assert_eq!(h.message, COLLISION_MESSAGE);
        assert_eq!(h.object, "Fountain");
        assert!((h.direction_deg.abs() - 180.0).abs() < 1e-9);
        assert!((collision_hud(&e, 90.0).direction_deg - 90.0).abs() < 1e-9);
    }
}
