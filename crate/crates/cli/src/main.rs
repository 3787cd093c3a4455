//! `spv`: command-line front end for the simulated prosthetic vision engine.
//!
//! Every subcommand reads one TOML configuration (from `--config` or the
//! `SPV_CONFIG` environment variable), applies `--set key=value` overrides
//! and the typed flags, and validates the result before doing any work.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! failures.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spv_core::frames::{downscale_gray_smooth, GrayImage, StrategyKind};
use spv_core::gaze::{
    gaze_accuracy_stats, read_trace, synthesize_trace, write_trace, DotTrajectory,
};
use spv_core::pipeline::{
    bench, run_batch, run_frame, serve, trial_setups, write_pgm, ConfigError, Engine, EngineConfig,
    EngineError, InputTrace, PolicyKind, ScriptedAgent,
};
use spv_core::rng::{stream_id, stream_rng};
use spv_core::townsim::render_scene;

#[derive(Debug, Parser)]
#[command(name = "spv", version, about = "Simulated prosthetic vision engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured batch of scripted trials and write logs.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Serve one interactive session over WebSocket.
    Serve {
        #[command(flatten)]
        config: ConfigArgs,
        /// Do not write logs and traces when the session ends.
        #[arg(long)]
        no_logs: bool,
    },
    /// Render a single frame of the first trial of a condition as a PGM.
    Render {
        #[command(flatten)]
        config: ConfigArgs,
        /// Condition to render; defaults to the first configured one.
        #[arg(long)]
        condition: Option<String>,
        /// Frame index to capture; earlier frames still drive the percept.
        #[arg(long, default_value_t = 30)]
        frame: u64,
        /// Pipeline stage to capture.
        #[arg(long, value_enum, default_value_t = Stage::Percept)]
        stage: Stage,
        /// Output file.
        #[arg(short, long, default_value = "frame.pgm")]
        output: PathBuf,
    },
    /// Gaze accuracy against a moving target, from files or synthesized.
    GazeStats(GazeArgs),
    /// Print the effective configuration as TOML and exit.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Measure per-frame cost against the 90 Hz budget.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Timed frames after warm-up.
        #[arg(long, default_value_t = 900)]
        frames: usize,
        /// Exit with a runtime error when the mean frame misses the budget.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Stage {
    /// Camera frame as rendered.
    Camera,
    /// Downscaled, smoothed frame fed to the strategy.
    Processed,
    /// Simplified frame after the scene strategy.
    Strategy,
    /// Simulated percept after temporal integration.
    Percept,
}

/// Configuration source plus flags that mirror common config fields.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, env = "SPV_CONFIG")]
    config: Option<PathBuf>,
    /// Override any field, e.g. `--set temporal.dt=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// scene.seed
    #[arg(long)]
    seed: Option<u64>,
    /// scene.layout: `random`, a shipped id or a .toml path.
    #[arg(long)]
    layout: Option<String>,
    /// scene.goal: random, left or right.
    #[arg(long)]
    goal: Option<String>,
    /// batch.trials
    #[arg(long)]
    trials: Option<usize>,
    /// batch.conditions, comma separated.
    #[arg(long, value_delimiter = ',')]
    conditions: Option<Vec<String>>,
    /// batch.agent.policy: waypoint, straight, idle or replay.
    #[arg(long)]
    policy: Option<String>,
    /// batch.agent.trace
    #[arg(long)]
    trace: Option<PathBuf>,
    /// batch.agent.gaze: fixed or sinusoid.
    #[arg(long)]
    gaze: Option<String>,
    /// batch.agent.gaze_yaw, degrees.
    #[arg(long, allow_hyphen_values = true)]
    gaze_yaw: Option<f64>,
    /// batch.agent.gaze_pitch, degrees.
    #[arg(long, allow_hyphen_values = true)]
    gaze_pitch: Option<f64>,
    /// trial.duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// temporal.dt, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// io.out_dir
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// io.dump_frames
    #[arg(long)]
    dump_frames: bool,
    /// io.frame_stride
    #[arg(long)]
    frame_stride: Option<usize>,
    /// io.montage
    #[arg(long)]
    montage: bool,
    /// io.bind
    #[arg(long)]
    bind: Option<String>,
    /// io.port
    #[arg(long)]
    port: Option<u16>,
}

#[derive(Debug, Args)]
struct GazeArgs {
    /// Gaze trace, one `t yaw pitch` sample per line.
    #[arg(long, requires = "dot")]
    trace: Option<PathBuf>,
    /// Target trajectory as JSON.
    #[arg(long, requires = "trace")]
    dot: Option<PathBuf>,
    /// Target moves for a synthesized session.
    #[arg(long, default_value_t = 12)]
    moves: usize,
    /// Half-width of the synthesized screen, degrees.
    #[arg(long, default_value_t = 15.0)]
    screen_half: f64,
    /// Tracker rate of the synthesized trace, Hz.
    #[arg(long, default_value_t = 120.0)]
    rate: f64,
    /// Tracker noise of the synthesized trace, degrees (per axis sd).
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Save the synthesized trace and trajectory into this directory.
    #[arg(long)]
    save: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            let engine = Engine::new(config.load()?)?;
            let out_dir = engine.config().io.out_dir.clone();
            let report = run_batch(&engine, &out_dir)?;
            print_json(&report.summaries)?;
            eprintln!(
                "{} trials, {} frames, logs in {}",
                report.records.len(),
                report.frames_rendered,
                report.out_dir.display()
            );
            Ok(())
        }
        Command::Serve { config, no_logs } => {
            let engine = Engine::new(config.load()?)?;
            let io = &engine.config().io;
            eprintln!("listening on ws://{}:{}", io.bind, io.port);
            let out_dir = (!no_logs).then(|| io.out_dir.clone());
            let outcome = serve(&engine, out_dir)?;
            print_json(&outcome)
        }
        Command::Render {
            config,
            condition,
            frame,
            stage,
            output,
        } => render(config.load()?, condition, frame, stage, &output),
        Command::GazeStats(args) => gaze_stats(&args),
        Command::Config { config } => {
            print!("{}", config.load()?.to_toml());
            Ok(())
        }
        Command::Bench {
            config,
            frames,
            strict,
        } => {
            let engine = Engine::new(config.load()?)?;
            let report = bench(&engine, frames)?;
            print_json(&report)?;
            if strict && !report.within_budget() {
                return Err(CliError::Runtime(format!(
                    "mean frame {:.2} ms exceeds the {:.2} ms budget",
                    report.mean_ms, report.budget_ms
                )));
            }
            Ok(())
        }
    }
}

impl ConfigArgs {
    /// Reads the config document and applies overrides: `--set` first, then
    /// the typed flags.
    fn load(&self) -> Result<EngineConfig, CliError> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
            None => String::new(),
        };
        let mut overrides = self.overrides.clone();
        let mut set = |key: &str, value: String| overrides.push(format!("{key}={value}"));
        let quote = |s: &str| toml_string(s);
        if let Some(v) = self.seed {
            set("scene.seed", v.to_string());
        }
        if let Some(v) = &self.layout {
            set("scene.layout", quote(v));
        }
        if let Some(v) = &self.goal {
            set("scene.goal", quote(v));
        }
        if let Some(v) = self.trials {
            set("batch.trials", v.to_string());
        }
        if let Some(v) = &self.conditions {
            let items: Vec<String> = v.iter().map(|c| quote(c.trim())).collect();
            set("batch.conditions", format!("[{}]", items.join(", ")));
        }
        if let Some(v) = &self.policy {
            set("batch.agent.policy", quote(v));
        }
        if let Some(v) = &self.trace {
            set("batch.agent.trace", quote(&v.to_string_lossy()));
        }
        if let Some(v) = &self.gaze {
            set("batch.agent.gaze", quote(v));
        }
        if let Some(v) = self.gaze_yaw {
            set("batch.agent.gaze_yaw", toml_float(v));
        }
        if let Some(v) = self.gaze_pitch {
            set("batch.agent.gaze_pitch", toml_float(v));
        }
        if let Some(v) = self.duration {
            set("trial.duration", toml_float(v));
        }
        if let Some(v) = self.dt {
            set("temporal.dt", toml_float(v));
        }
        if let Some(v) = &self.out_dir {
            set("io.out_dir", quote(&v.to_string_lossy()));
        }
        if self.dump_frames {
            set("io.dump_frames", "true".into());
        }
        if let Some(v) = self.frame_stride {
            set("io.frame_stride", v.to_string());
        }
        if self.montage {
            set("io.montage", "true".into());
        }
        if let Some(v) = &self.bind {
            set("io.bind", quote(v));
        }
        if let Some(v) = self.port {
            set("io.port", v.to_string());
        }
        Ok(EngineConfig::from_toml(&text, &overrides)?)
    }
}

fn toml_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Float literal that TOML will not read back as an integer.
fn toml_float(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 {
        format!("{v:.1}")
    } else {
        v.to_string()
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialize: {e}")))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Runtime(format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn gray8(img: &GrayImage, gain: f64) -> Vec<u8> {
    img.data
        .iter()
        .map(|v| (v * gain * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

fn render(
    config: EngineConfig,
    condition: Option<String>,
    frame: u64,
    stage: Stage,
    output: &Path,
) -> Result<(), CliError> {
    let condition = match condition {
        Some(name) => serde_json::from_value::<StrategyKind>(serde_json::Value::String(name))
            .map_err(|e| CliError::Config(format!("--condition: {e}")))?,
        None => config.batch.conditions[0],
    };
    let engine = Engine::new(config)?;
    let cfg = engine.config();
    let setup = trial_setups(cfg)
        .into_iter()
        .find(|s| s.condition == condition)
        .ok_or_else(|| CliError::Config(format!("condition {condition:?} is not configured")))?;
    let dt = engine.dt();
    let mut world = engine.world(&setup)?;
    let mut state = engine.state();
    let trace = match (&cfg.batch.agent.policy, &cfg.batch.agent.trace) {
        (PolicyKind::Replay, Some(path)) => Some(InputTrace::read(path)?),
        _ => None,
    };
    let mut agent = ScriptedAgent::new(&cfg.batch.agent, &world, trace.as_ref())?;
    let mut percept = None;
    // Advance to the requested frame; the trial may end first, in which
    // case its last frame is captured.
    while world.frame <= frame && !world.finished() {
        if world.frame == frame && stage != Stage::Percept {
            break;
        }
        let cmd = agent.command(&world, &cfg.player, dt);
        percept = Some(run_frame(&engine, &mut world, &mut state, &cmd)?.percept);
    }
    let camera = render_scene(
        &world.scene,
        &world.agents,
        &world.player,
        &cfg.render.camera,
        &cfg.render.shading,
    );
    let (w, h, pixels) = match stage {
        Stage::Camera => (
            camera.width,
            camera.height,
            gray8(&camera.intensity_image(), 1.0),
        ),
        Stage::Processed | Stage::Strategy => {
            let processed = downscale_gray_smooth(&camera).map_err(EngineError::from)?;
            let img = if stage == Stage::Strategy {
                let strategy = spv_core::frames::StrategyConfig {
                    kind: condition,
                    ..cfg.strategy.clone()
                };
                spv_core::frames::apply_strategy(&processed, &strategy, world.time(dt))
                    .map_err(EngineError::from)?
            } else {
                processed.intensity_image()
            };
            (img.width, img.height, gray8(&img, 1.0))
        }
        Stage::Percept => {
            let p = percept.ok_or_else(|| CliError::Runtime("no frame was rendered".into()))?;
            (p.width, p.height, p.to_gray8(cfg.render.display_gain))
        }
    };
    write_pgm(output, w, h, &pixels)?;
    let shown = match stage {
        Stage::Percept => world.frame.saturating_sub(1),
        _ => world.frame,
    };
    eprintln!("wrote {} ({w}x{h}, frame {shown})", output.display());
    Ok(())
}

#[derive(Serialize)]
struct GazeReport<'a> {
    source: &'a str,
    samples: usize,
    #[serde(flatten)]
    stats: spv_core::gaze::GazeAccuracyStats,
}

fn gaze_stats(args: &GazeArgs) -> Result<(), CliError> {
    let runtime = |e: &dyn std::fmt::Display| CliError::Runtime(e.to_string());
    let (source, trace, dot) = match (&args.trace, &args.dot) {
        (Some(trace_path), Some(dot_path)) => {
            let trace = read_trace(trace_path).map_err(|e| runtime(&e))?;
            let text = fs::read_to_string(dot_path)
                .map_err(|e| runtime(&format!("{}: {e}", dot_path.display())))?;
            let dot: DotTrajectory = serde_json::from_str(&text)
                .map_err(|e| runtime(&format!("{}: {e}", dot_path.display())))?;
            ("files", trace, dot)
        }
        _ => {
            let positive = |v: f64| v > 0.0;
            if args.moves == 0
                || !positive(args.rate)
                || !positive(args.screen_half)
                || args.noise.is_nan()
                || args.noise < 0.0
            {
                return Err(CliError::Config(
                    "--moves, --rate and --screen-half must be positive, --noise non-negative"
                        .into(),
                ));
            }
            let mut rng = stream_rng(args.seed, stream_id("gaze"));
            let dot = DotTrajectory::generate(&mut rng, args.moves, args.screen_half);
            let trace = synthesize_trace(&dot, args.rate, args.noise, &mut rng);
            if let Some(dir) = &args.save {
                let save = |name: &str, text: String| {
                    let path = dir.join(name);
                    fs::write(&path, text).map_err(|e| runtime(&format!("{}: {e}", path.display())))
                };
                fs::create_dir_all(dir).map_err(|e| runtime(&format!("{}: {e}", dir.display())))?;
                save("gaze.txt", write_trace(&trace))?;
                save(
                    "dot.json",
                    serde_json::to_string_pretty(&dot).expect("trajectory serializes"),
                )?;
            }
            ("synthetic", trace, dot)
        }
    };
    let stats = gaze_accuracy_stats(&trace, &dot).map_err(|e| runtime(&e))?;
    print_json(&GazeReport {
        source,
        samples: trace.len(),
        stats,
    })
}
