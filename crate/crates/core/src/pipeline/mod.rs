//! End-to-end percept pipeline and the programs built on it.
//!
//! One frame runs, in this fixed order: render the scene → downscale and
//! smooth → scene simplification strategy → raster eligibility → electrode
//! sampling around gaze → axon-map spatial percept → temporal integration.
//! The world then advances by one frame period: the player moves, agents
//! walk, collisions register and the trial status updates. Input given for
//! frame `k` is therefore first visible in frame `k + 1`.

mod agent;
mod batch;
mod bench;
mod config;
mod engine;
mod image;
mod protocol;
mod serve;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agent::{InputTrace, ScriptedAgent};
pub use batch::{
    condition_order, run_batch, run_trial, trial_setups, BatchReport, TrialRecord, TrialRun,
};
pub use bench::{bench, BenchReport, FRAME_BUDGET_MS};
pub use config::{
    AgentConfig, BatchConfig, EngineConfig, GazeMode, GoalChoice, ImplantConfig, IoConfig,
    PolicyKind, RenderConfig, SceneConfig,
};
pub use engine::{run_frame, Engine, EngineState, FrameOutput, World};
pub use image::{montage, write_pgm};
pub use protocol::{
    decode_frame, encode_frame, ClientMessage, CloseCode, CollisionHud, Hud, ProtocolError,
    ServerMessage, COLLISION_MESSAGE, FRAME_HEADER_LEN, PROTOCOL_VERSION,
};
pub use serve::{serve, serve_listener, ServeOutcome};
pub use session::{Outgoing, Phase, Session};

use crate::frames::{FrameError, StrategyKind};
use crate::gaze::GazeError;
use crate::raster::RasterError;
use crate::retina::RetinaError;
use crate::temporal::TemporalError;
use crate::townsim::{GoalSide, MoveCommand, SceneError};

/// A rejected configuration value.
#[derive(Clone, Debug, PartialEq, Error)]
pub struct ConfigError {
    /// Dotted path of the offending field; empty for document-level errors.
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "config: {}", self.reason)
        } else {
            write!(f, "config field `{}`: {}", self.field, self.reason)
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Retina(#[from] RetinaError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Gaze(#[from] GazeError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace: {0}")]
    Trace(String),
    #[error("websocket: {0}")]
    WebSocket(Box<tungstenite::Error>),
}

impl From<tungstenite::Error> for EngineError {
    fn from(e: tungstenite::Error) -> Self {
        Self::WebSocket(Box::new(e))
    }
}

impl EngineError {
    pub(crate) fn io(context: impl fmt::Display, source: std::io::Error) -> Self {
        Self::Io {
            context: context.to_string(),
            source,
        }
    }
}

/// One frame of user or scripted input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputCommand {
    /// Walk forward (+) or back (−), fraction of full speed.
    pub forward: f64,
    /// Side-step right (+) or left (−).
    pub strafe: f64,
    /// Turn clockwise (+) or counter-clockwise (−), fraction of full rate.
    pub turn: f64,
    /// Gaze relative to head-forward, degrees; right and up positive.
    pub gaze_yaw: f64,
    pub gaze_pitch: f64,
}

impl InputCommand {
    pub fn movement(&self) -> MoveCommand {
        MoveCommand {
            forward: self.forward,
            strafe: self.strafe,
            turn: self.turn,
        }
    }
}

/// Everything that identifies a trial before it runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub condition: StrategyKind,
    /// Block number in presentation order, from 0.
    pub block: usize,
    /// Trial number within the block, from 0.
    pub trial: usize,
    pub layout: String,
    pub seed: u64,
    pub goal: GoalSide,
}
