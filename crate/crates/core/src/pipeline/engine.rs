//! The per-frame pipeline and the world it runs on.

use crate::frames::{apply_strategy, downscale_gray_smooth, StrategyConfig, StrategyKind};
use crate::gaze::{gaze_window, GazeSample, WindowGeometry};
use crate::raster::{sample_electrodes, SamplingGeometry};
use crate::retina::{
    build_kernel, generate_axon_paths, spatial_percept_into, AxonMapParams, AxonPathSet,
    ElectrodeArray, KernelMatrix, PerceptFrame, RetinalPoint, VisualFieldGrid,
};
use crate::temporal::{step_temporal, TemporalState};
use crate::townsim::{
    detect_collision, load_scene, move_player, render_scene, step_agents, trial_update, AgentState,
    CollisionEvent, PlayerState, Scene, TrialState, TrialStatus,
};

use super::{EngineConfig, EngineError, InputCommand, TrialSetup};

/// Precomputed, immutable parts of the pipeline: implant geometry, axon
/// paths and the spatial kernel. Shareable across sessions.
#[derive(Debug)]
pub struct Engine {
    config: EngineConfig,
    array: ElectrodeArray,
    grid: VisualFieldGrid,
    paths: AxonPathSet,
    kernel: KernelMatrix,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let im = &config.implant;
        let params = AxonMapParams {
            rho: im.rho,
            lambda: im.lambda,
            um_per_degree: im.um_per_degree,
        };
        let array = ElectrodeArray::new(im.rows, im.cols, im.spacing_um, RetinalPoint::ORIGIN)?;
        let size = config.render.percept_size;
        let grid = VisualFieldGrid::new(size, size, config.render.window_deg, im.um_per_degree)?;
        let paths = generate_axon_paths(&grid, &params, im.axon_mode)?;
        let kernel = build_kernel(&array, &paths, &params);
        Ok(Self {
            config,
            array,
            grid,
            paths,
            kernel,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn array(&self) -> &ElectrodeArray {
        &self.array
    }

    pub fn grid(&self) -> &VisualFieldGrid {
        &self.grid
    }

    pub fn paths(&self) -> &AxonPathSet {
        &self.paths
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn dt(&self) -> f64 {
        self.config.temporal.dt
    }

    /// Fresh world for `setup`.
    pub fn world(&self, setup: &TrialSetup) -> Result<World, EngineError> {
        let scene = load_scene(&setup.layout, setup.seed)?;
        Ok(World::new(scene, setup, &self.config))
    }

    pub fn state(&self) -> EngineState {
        EngineState {
            temporal: TemporalState::new(self.grid.width(), self.grid.height()),
            segment_drive: Vec::new(),
            spatial: PerceptFrame::for_grid(&self.grid),
        }
    }

    fn window_geometry(&self) -> WindowGeometry {
        WindowGeometry {
            frame_px: crate::frames::PROCESSED_SIZE,
            camera_fov_deg: self.config.render.camera.hfov_deg,
            window_deg: self.config.render.window_deg,
        }
    }
}

/// Mutable per-session pipeline state.
#[derive(Clone, Debug)]
pub struct EngineState {
    pub temporal: TemporalState,
    segment_drive: Vec<f64>,
    spatial: PerceptFrame,
}

impl EngineState {
    pub fn reset(&mut self) {
        self.temporal.reset();
    }
}

/// The simulated square during one trial.
#[derive(Clone, Debug)]
pub struct World {
    pub scene: Scene,
    pub agents: Vec<AgentState>,
    pub player: PlayerState,
    pub trial: TrialState,
    pub condition: StrategyKind,
    /// Frames completed so far; the next frame shows time `frame * dt`.
    pub frame: u64,
}

impl World {
    pub fn new(scene: Scene, setup: &TrialSetup, config: &EngineConfig) -> Self {
        Self {
            agents: AgentState::all_initial(&scene),
            player: PlayerState::at_start(&scene, &config.player),
            trial: TrialState::new(setup.goal),
            condition: setup.condition,
            frame: 0,
            scene,
        }
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.frame as f64 * dt
    }

    pub fn finished(&self) -> bool {
        self.trial.status.is_terminal()
    }
}

#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub frame: u64,
    pub percept: PerceptFrame,
    pub events: Vec<CollisionEvent>,
    pub status: TrialStatus,
}

/// Runs one frame of the pipeline on the current world, then advances the
/// world by one frame period under `input`.
pub fn run_frame(
    engine: &Engine,
    world: &mut World,
    state: &mut EngineState,
    input: &InputCommand,
) -> Result<FrameOutput, EngineError> {
    let cfg = &engine.config;
    let dt = cfg.temporal.dt;
    let frame = world.frame;
    let t = world.time(dt);

    let camera_frame = render_scene(
        &world.scene,
        &world.agents,
        &world.player,
        &cfg.render.camera,
        &cfg.render.shading,
    );
    let processed = downscale_gray_smooth(&camera_frame)?;
    let strategy = StrategyConfig {
        kind: world.condition,
        ..cfg.strategy.clone()
    };
    let simplified = apply_strategy(&processed, &strategy, t)?;
    let mask = cfg.implant.raster.mask(&engine.array, frame)?;
    let geometry = engine.window_geometry();
    let gaze = GazeSample::new(t, input.gaze_yaw, input.gaze_pitch);
    let center = gaze_window(&gaze, &geometry);
    let sampling = SamplingGeometry {
        hfov_deg: cfg.render.camera.hfov_deg,
        um_per_degree: cfg.implant.um_per_degree,
        mode: cfg.implant.sampling,
    };
    let activations = sample_electrodes(
        &simplified,
        &engine.array,
        &sampling,
        geometry.center_to_gaze(center),
        &mask,
    );
    spatial_percept_into(
        &activations,
        &engine.kernel,
        &engine.paths,
        &mut state.segment_drive,
        &mut state.spatial,
    )?;
    step_temporal(&mut state.temporal, &state.spatial, &cfg.temporal)?;
    let percept = state.temporal.brightness(t);

    let events = advance_world(engine, world, input);
    Ok(FrameOutput {
        frame,
        percept,
        events,
        status: world.trial.status,
    })
}

/// One frame period of world time: locomotion, agents, collisions, status.
fn advance_world(engine: &Engine, world: &mut World, input: &InputCommand) -> Vec<CollisionEvent> {
    let cfg = &engine.config;
    let dt = cfg.temporal.dt;
    world.frame += 1;
    if world.finished() {
        return Vec::new();
    }
    let t = world.time(dt);
    move_player(
        &mut world.player,
        &input.movement(),
        &cfg.player,
        world.scene.size,
        dt,
    );
    step_agents(&world.scene, &mut world.agents, t, dt);
    let events = detect_collision(
        &world.player,
        &world.scene,
        &world.agents,
        &mut world.trial.cooldowns,
        cfg.trial.cooldown_distance,
        t,
    );
    trial_update(
        &mut world.trial,
        events.clone(),
        t,
        world.player.position,
        &world.scene,
        &cfg.trial,
    );
    events
}
