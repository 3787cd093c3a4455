//! Wire protocol between the session service and an interactive client.
//!
//! Text messages are JSON objects tagged by `"type"`. Percept frames travel
//! as binary messages:
//!
//! | bytes   | field                         |
//! |---------|-------------------------------|
//! | 0..2    | width, `u16` little-endian    |
//! | 2..4    | height, `u16` little-endian   |
//! | 4..8    | frame index, `u32` little-endian |
//! | 8..     | `width × height` brightness bytes, row-major |
//!
//! A session starts with `hello`; the server answers with the full engine
//! configuration. `start_trial` begins the next trial of the current block.
//! While a trial runs the client streams `input` (latest wins, applied at
//! the next frame boundary) and the server streams a frame plus a `hud`
//! message per frame, then `trial_end`. After the last trial of a block the
//! server waits for one `rate_difficulty`. Protocol violations close the
//! connection with a [`CloseCode`] and reason.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EngineConfig, InputCommand, TrialSetup};
use crate::frames::{ClassId, StrategyKind};
use crate::townsim::{TrialMetrics, Vec2};

pub const PROTOCOL_VERSION: u32 = 1;
pub const FRAME_HEADER_LEN: usize = 8;
/// Banner text accompanying every collision.
pub const COLLISION_MESSAGE: &str = "Collision, back up!";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        version: u32,
    },
    Input(InputCommand),
    /// Starts the next scheduled trial. A practice trial runs the next
    /// trial's scene under Control and is not logged.
    StartTrial {
        #[serde(default)]
        practice: bool,
    },
    /// Difficulty of the block just completed: 1 very easy … 10 very hard.
    RateDifficulty {
        value: u8,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionHud {
    pub message: String,
    /// Name of the object collided with.
    pub object: String,
    pub class: ClassId,
    /// Unit back-up direction in world coordinates (x east, y north).
    pub direction: Vec2,
    /// Back-up direction relative to the player's facing, degrees
    /// clockwise; 180 means straight back.
    pub direction_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hud {
    pub frame: u64,
    pub condition: StrategyKind,
    pub block: usize,
    pub trial: usize,
    pub practice: bool,
    /// Seconds left in the trial.
    pub remaining: f64,
    /// Whether the countdown should be visible.
    pub countdown: bool,
    pub collision: Option<CollisionHud>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Config {
        version: u32,
        config: Box<EngineConfig>,
    },
    TrialStart {
        setup: TrialSetup,
        practice: bool,
    },
    Hud(Hud),
    TrialEnd {
        setup: TrialSetup,
        practice: bool,
        metrics: TrialMetrics,
        /// Last trial of its block: a difficulty rating is expected next.
        block_complete: bool,
        /// No trials remain after this block.
        session_complete: bool,
    },
    Error {
        code: u16,
        reason: String,
    },
}

/// Close codes for ending a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CloseCode {
    /// Session finished normally.
    Normal,
    /// Text that is not a valid client message, or an unexpected binary message.
    Malformed,
    /// `hello` with a protocol version the server does not speak.
    VersionMismatch,
    /// A message not allowed in the current session phase.
    OutOfOrder,
    /// A well-formed message with an invalid value.
    InvalidValue,
    /// The engine failed while running the session.
    Internal,
}

impl CloseCode {
    pub fn code(self) -> u16 {
        match self {
            Self::Normal => 1000,
            Self::Malformed => 4000,
            Self::VersionMismatch => 4001,
            Self::OutOfOrder => 4002,
            Self::InvalidValue => 4003,
            Self::Internal => 4010,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        [
            Self::Normal,
            Self::Malformed,
            Self::VersionMismatch,
            Self::OutOfOrder,
            Self::InvalidValue,
            Self::Internal,
        ]
        .into_iter()
        .find(|c| c.code() == code)
    }
}

/// A client message the session cannot accept; ends the session.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{reason}")]
pub struct ProtocolError {
    pub code: CloseCode,
    pub reason: String,
}

impl ProtocolError {
    pub fn new(code: CloseCode, reason: impl Into<String>) -> Self {
        Self {
            code,
            reason: reason.into(),
        }
    }
}

/// Binary frame message for an 8-bit image.
pub fn encode_frame(width: usize, height: usize, frame: u64, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(
        pixels.len(),
        width * height,
        "pixel buffer does not match size"
    );
    let w = u16::try_from(width).expect("width fits u16");
    let h = u16::try_from(height).expect("height fits u16");
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + pixels.len());
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&(frame as u32).to_le_bytes());
    out.extend_from_slice(pixels);
    out
}

/// Inverse of [`encode_frame`]: `(width, height, frame, pixels)`.
pub fn decode_frame(bytes: &[u8]) -> Result<(usize, usize, u32, &[u8]), ProtocolError> {
    let bad = |why: &str| ProtocolError::new(CloseCode::Malformed, format!("frame message: {why}"));
    if bytes.len() < FRAME_HEADER_LEN {
        return Err(bad("shorter than its header"));
    }
    let w = u16::from_le_bytes([bytes[0], bytes[1]]) as usize;
    let h = u16::from_le_bytes([bytes[2], bytes[3]]) as usize;
    let frame = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]);
    let px = &bytes[FRAME_HEADER_LEN..];
    if px.len() != w * h {
        return Err(bad("payload does not match width × height"));
    }
    Ok((w, h, frame, px))
}
