//! Engine configuration: one TOML document, every field optional.
//!
//! Missing fields take their defaults. Unknown fields are rejected.
//! Individual values can be overridden with dotted keys (`temporal.dt=0.01`)
//! before validation. Errors name the offending field path.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::frames::StrategyConfig;
use crate::frames::StrategyKind;
use crate::raster::{RasterLayout, SamplingMode};
use crate::retina::AxonMode;
use crate::temporal::TemporalParams;
use crate::townsim::{Camera, PlayerParams, Shading, TrialConfig, BUILTIN_LAYOUTS};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub implant: ImplantConfig,
    pub temporal: TemporalParams,
    pub strategy: StrategyConfig,
    pub render: RenderConfig,
    pub trial: TrialConfig,
    pub player: PlayerParams,
    pub scene: SceneConfig,
    pub batch: BatchConfig,
    pub io: IoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImplantConfig {
    pub rows: usize,
    pub cols: usize,
    /// Electrode pitch, µm.
    pub spacing_um: f64,
    /// Current spread around an electrode, µm.
    pub rho: f64,
    /// Brightness decay along an axon, µm.
    pub lambda: f64,
    pub um_per_degree: f64,
    pub axon_mode: AxonMode,
    pub raster: RasterLayout,
    pub sampling: SamplingMode,
}

impl Default for ImplantConfig {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            spacing_um: 400.0,
            rho: 200.0,
            lambda: 400.0,
            um_per_degree: 280.0,
            axon_mode: AxonMode::Spiral,
            raster: RasterLayout::Checkerboard,
            sampling: SamplingMode::Nearest,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    /// Side of the gaze-centered stimulated window, degrees.
    pub window_deg: f64,
    /// Percept raster side, pixels.
    pub percept_size: usize,
    /// Brightness multiplier applied before 8-bit quantization.
    pub display_gain: f64,
    pub camera: Camera,
    pub shading: Shading,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            window_deg: 14.6,
            percept_size: 128,
            display_gain: 4.0,
            camera: Camera::default(),
            shading: Shading::default(),
        }
    }
}

/// Goal assignment for a trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalChoice {
    #[default]
    Random,
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// `random` (one town-square layout drawn per trial), a shipped layout id
    /// (`0`, `1`, `2`, `empty`, `bike-intercept`) or a path to a `.toml` file.
    pub layout: String,
    /// Base seed; every random stream in a run derives from it.
    pub seed: u64,
    pub goal: GoalChoice,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            layout: "random".into(),
            seed: 42,
            goal: GoalChoice::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Follow the layout's obstacle-free route to the goal.
    #[default]
    Waypoint,
    /// Head straight for the goal center.
    Straight,
    /// Stand still.
    Idle,
    /// Play back a recorded input trace.
    Replay,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GazeMode {
    #[default]
    Fixed,
    /// Slow Lissajous sweep around the fixed direction.
    Sinusoid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub policy: PolicyKind,
    pub gaze: GazeMode,
    /// Fixed gaze, or sweep center, degrees.
    pub gaze_yaw: f64,
    pub gaze_pitch: f64,
    /// Sweep amplitude, degrees.
    pub gaze_amplitude: f64,
    /// Sweep period, seconds.
    pub gaze_period: f64,
    /// Input trace for `replay`.
    pub trace: Option<PathBuf>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Waypoint,
            gaze: GazeMode::Fixed,
            gaze_yaw: 0.0,
            gaze_pitch: 0.0,
            gaze_amplitude: 5.0,
            gaze_period: 4.0,
            trace: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    /// Trials per condition block.
    pub trials: usize,
    /// Conditions to run. Control always goes first; the other two swap
    /// order with the seed's parity.
    pub conditions: Vec<StrategyKind>,
    pub agent: AgentConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            conditions: StrategyKind::ALL.to_vec(),
            agent: AgentConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub out_dir: PathBuf,
    /// Write every `frame_stride`-th percept as an 8-bit PGM.
    pub dump_frames: bool,
    pub frame_stride: usize,
    /// Write one contact sheet per trial.
    pub montage: bool,
    /// Frames between montage tiles.
    pub montage_every: usize,
    /// Interface the interactive service binds to.
    pub bind: String,
    pub port: u16,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("spv-out"),
            dump_frames: false,
            frame_stride: 1,
            montage: false,
            montage_every: 45,
            bind: "127.0.0.1".into(),
            port: 8765,
        }
    }
}

impl EngineConfig {
    /// Parses and validates a TOML document, applying `overrides`
    /// (`dotted.key=value`) first.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("", e.message().to_owned()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: EngineConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
            .map_err(|e| ConfigError::new(e.path().to_string(), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field: &str, reason: &str| Err(ConfigError::new(field, reason));
        let im = &self.implant;
        if im.rows == 0 || im.cols == 0 {
            return err("implant.rows", "array needs at least one row and column");
        }
        if !(im.spacing_um > 0.0) {
            return err("implant.spacing_um", "must be positive");
        }
        if !(im.rho > 0.0) {
            return err("implant.rho", "must be positive");
        }
        if !(im.lambda >= 0.0) {
            return err("implant.lambda", "must be non-negative");
        }
        if !(im.um_per_degree > 0.0) {
            return err("implant.um_per_degree", "must be positive");
        }
        if im.raster != RasterLayout::Checkerboard {
            return err("implant.raster", "only `checkerboard` is implemented");
        }
        self.temporal
            .validate()
            .map_err(|e| ConfigError::new("temporal", e.to_string()))?;
        self.strategy
            .validate()
            .map_err(|e| ConfigError::new("strategy", e.to_string()))?;
        let r = &self.render;
        if !(r.window_deg > 0.0 && r.window_deg <= r.camera.hfov_deg) {
            return err(
                "render.window_deg",
                "must be positive and within the camera field of view",
            );
        }
        if r.percept_size == 0 || r.percept_size > 1024 {
            return err("render.percept_size", "must be between 1 and 1024");
        }
        if !(r.display_gain >= 0.0) {
            return err("render.display_gain", "must be non-negative");
        }
        if r.camera.width < crate::frames::PROCESSED_SIZE
            || r.camera.height < crate::frames::PROCESSED_SIZE
        {
            return err("render.camera", "camera frames must be at least 200x200");
        }
        if !(r.camera.hfov_deg > 0.0 && r.camera.hfov_deg < 180.0) {
            return err("render.camera.hfov_deg", "must be in (0, 180)");
        }
        if !(r.camera.eye_height > 0.0) {
            return err("render.camera.eye_height", "must be positive");
        }
        if !(self.trial.duration > 0.0) {
            return err("trial.duration", "must be positive");
        }
        if !(self.trial.countdown >= 0.0) {
            return err("trial.countdown", "must be non-negative");
        }
        if !(self.trial.cooldown_distance >= 0.0) {
            return err("trial.cooldown_distance", "must be non-negative");
        }
        if !(self.player.radius > 0.0) {
            return err("player.radius", "must be positive");
        }
        if !(self.player.speed >= 0.0 && self.player.turn_rate >= 0.0) {
            return err("player", "speed and turn_rate must be non-negative");
        }
        let layout = self.scene.layout.as_str();
        if layout != "random" && !BUILTIN_LAYOUTS.contains(&layout) && !layout.ends_with(".toml") {
            return err(
                "scene.layout",
                "expected `random`, a shipped layout id or a .toml path",
            );
        }
        if self.batch.trials == 0 {
            return err("batch.trials", "must be at least 1");
        }
        if self.batch.conditions.is_empty() {
            return err("batch.conditions", "need at least one condition");
        }
        if self.batch.agent.policy == PolicyKind::Replay && self.batch.agent.trace.is_none() {
            return err("batch.agent.trace", "replay needs a trace file");
        }
        if !(self.batch.agent.gaze_period > 0.0) {
            return err("batch.agent.gaze_period", "must be positive");
        }
        if self.io.frame_stride == 0 || self.io.montage_every == 0 {
            return err("io", "frame_stride and montage_every must be at least 1");
        }
        Ok(())
    }
}

/// Sets `dotted.key` to `value`. The value is read as a TOML literal when it
/// parses as one (`3`, `0.5`, `true`, `["a"]`), else as a bare string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(key, "empty key segment"));
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let entry = node
            .entry((*p).to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(key, format!("`{p}` is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_reference_values() {
        let c = EngineConfig::from_toml("", &[]).unwrap();
        assert_eq!((c.implant.rows, c.implant.cols), (10, 10));
        assert_eq!(c.implant.spacing_um, 400.0);
        assert_eq!((c.implant.rho, c.implant.lambda), (200.0, 400.0));
        assert_eq!(
            (c.temporal.tau_n, c.temporal.tau_b, c.temporal.alpha),
            (0.2, 5.0, 0.2)
        );
        assert_eq!(c.strategy.dwell, 0.2);
        assert_eq!(
            (c.strategy.control_kernel, c.strategy.semantic_kernel),
            (3, 7)
        );
        assert_eq!(c.render.window_deg, 14.6);
        assert_eq!(c.render.percept_size, 128);
        assert_eq!(
            (
                c.trial.duration,
                c.trial.countdown,
                c.trial.cooldown_distance
            ),
            (50.0, 10.0, 0.25)
        );
        assert_eq!(c.render.camera.hfov_deg, 60.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = EngineConfig::default();
        assert_eq!(EngineConfig::from_toml(&c.to_toml(), &[]).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let e = EngineConfig::from_toml("[temporal]\ntau_n = \"fast\"\n", &[]).unwrap_err();
        assert_eq!(e.field, "temporal.tau_n");
        let e = EngineConfig::from_toml("[implant]\nbogus = 1\n", &[]).unwrap_err();
        assert!(e.field.starts_with("implant"), "{e}");
        let e = EngineConfig::from_toml("[render]\npercept_size = 0\n", &[]).unwrap_err();
        assert_eq!(e.field, "render.percept_size");
        let e = EngineConfig::from_toml("[implant]\nraster = \"random\"\n", &[]).unwrap_err();
        assert_eq!(e.field, "implant.raster");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let c = EngineConfig::from_toml(
            "[scene]\nseed = 1\n",
            &[
                "scene.seed=7".into(),
                "scene.layout=empty".into(),
                "strategy.kind=semantic_edges".into(),
                "render.camera.width=256".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.scene.seed, 7);
        assert_eq!(c.scene.layout, "empty");
        assert_eq!(c.strategy.kind, StrategyKind::SemanticEdges);
        assert_eq!(c.render.camera.width, 256);
        let e = EngineConfig::from_toml("", &["temporal.dt=-1".into()]).unwrap_err();
        assert_eq!(e.field, "temporal");
        assert!(EngineConfig::from_toml("", &["nonsense".into()]).is_err());
    }
}
