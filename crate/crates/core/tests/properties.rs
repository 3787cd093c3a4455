//! Structural invariants of every stage, checked on generated inputs.

use proptest::prelude::*;
use spv_core::frames::{
    apply_strategy, ClassId, GrayImage, LabeledFrame, StrategyConfig, StrategyKind,
};
use spv_core::gaze::{
    gaze_accuracy_stats, gaze_window, synthesize_trace, DotTrajectory, GazeSample, WindowGeometry,
};
use spv_core::raster::{
    checkerboard_mask, sample_electrodes, RasterMask, SamplingGeometry, SamplingMode,
};
use spv_core::retina::{
    build_kernel, generate_axon_paths, spatial_percept, AxonMapParams, AxonMode, ElectrodeArray,
    RetinalPoint, VisualFieldGrid,
};
use spv_core::townsim::{
    detect_collision, load_scene, move_player, step_agents, trial_update, AgentState, GoalSide,
    MoveCommand, PlayerParams, PlayerState, TrialConfig, TrialState, TrialStatus, Vec2,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rectangles of random classes and intensities over a split background.
fn labeled_frame() -> impl Strategy<Value = LabeledFrame> {
    let rect = (
        0usize..32,
        0usize..32,
        1usize..16,
        1usize..16,
        0usize..6,
        0.0f64..1.0,
    );
    (0.0f64..0.5, prop::collection::vec(rect, 0..6)).prop_map(|(bg, rects)| {
        let mut f = LabeledFrame::new(32, 32, 60.0);
        for r in 0..32 {
            for c in 0..32 {
                let l = if r >= 16 {
                    ClassId::GROUND
                } else {
                    ClassId::BACKGROUND
                };
                f.set(c, r, bg, l);
            }
        }
        for (c0, r0, w, h, class, v) in rects {
            for r in r0..(r0 + h).min(32) {
                for c in c0..(c0 + w).min(32) {
                    f.set(c, r, v, ClassId::ALL[class]);
                }
            }
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strategy_outputs_are_unit_range_and_nested(f in labeled_frame(), t in 0.0f64..30.0) {
        let edges = apply_strategy(&f, &StrategyConfig::with_kind(StrategyKind::SemanticEdges), t).unwrap();
        let raster = apply_strategy(&f, &StrategyConfig::with_kind(StrategyKind::SemanticRaster), t).unwrap();
        let control = StrategyConfig::with_kind(StrategyKind::Control);
        let c0 = apply_strategy(&f, &control, 0.0).unwrap();
        let ct = apply_strategy(&f, &control, t).unwrap();
        prop_assert_eq!(&c0, &ct);
        for img in [&edges, &raster, &c0] {
            prop_assert!(img.data.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        for (r, e) in raster.data.iter().zip(&edges.data) {
            prop_assert!(*r == 0.0 || *e > 0.0);
        }
    }

    #[test]
    fn checkerboard_is_safe_periodic_and_covering(rows in 1usize..12, cols in 1usize..12, k in 0u64..1_000_000) {
        let array = ElectrodeArray::new(rows, cols, 400.0, RetinalPoint::ORIGIN).unwrap();
        let (m0, m1, m2) = (
            checkerboard_mask(&array, k),
            checkerboard_mask(&array, k + 1),
            checkerboard_mask(&array, k + 2),
        );
        prop_assert_eq!(&m0.eligible, &m2.eligible);
        prop_assert!(m0.eligible.iter().zip(&m1.eligible).all(|(a, b)| *a || *b));
        for i in 0..array.len() {
            for j in 0..array.len() {
                let ((r1, c1), (r2, c2)) = (array.row_col(i), array.row_col(j));
                if r1.abs_diff(r2) + c1.abs_diff(c2) == 1 {
                    prop_assert!(!(m0.eligible[i] && m0.eligible[j]));
                }
            }
        }
    }

    #[test]
    fn ineligible_electrodes_stay_dark(
        pixels in prop::collection::vec(0.0f64..1.0, 200 * 200),
        eligible in prop::collection::vec(any::<bool>(), 100),
        yaw in -40.0f64..40.0,
        pitch in -40.0f64..40.0,
    ) {
        let img = GrayImage { width: 200, height: 200, data: pixels };
        let array = ElectrodeArray::new(10, 10, 400.0, RetinalPoint::ORIGIN).unwrap();
        let mask = RasterMask { frame_index: 0, eligible };
        for mode in [SamplingMode::Nearest, SamplingMode::Bilinear] {
            let geometry = SamplingGeometry { hfov_deg: 60.0, um_per_degree: 280.0, mode };
            let a = sample_electrodes(&img, &array, &geometry, (yaw, pitch), &mask);
            for (v, on) in a.0.iter().zip(&mask.eligible) {
                prop_assert!((0.0..=1.0).contains(v));
                if !on {
                    prop_assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn sampling_follows_content_and_gaze_shifted_together(
        pixels in prop::collection::vec(0.0f64..1.0, 200 * 200),
        shift in -30isize..30,
    ) {
        // One pixel per degree, so whole-degree gaze shifts are whole-pixel shifts.
        let geometry = SamplingGeometry { hfov_deg: 200.0, um_per_degree: 280.0, mode: SamplingMode::Nearest };
        let array = ElectrodeArray::new(10, 10, 400.0, RetinalPoint::ORIGIN).unwrap();
        let img = GrayImage { width: 200, height: 200, data: pixels };
        let mut moved = GrayImage::new(200, 200);
        for r in 0..200 {
            for c in 0..200isize {
                let src = c - shift;
                if (0..200).contains(&src) {
                    moved.data[r * 200 + c as usize] = img.data[r * 200 + src as usize];
                }
            }
        }
        let mask = RasterMask::all(100);
        let a = sample_electrodes(&img, &array, &geometry, (0.0, 0.0), &mask);
        let b = sample_electrodes(&moved, &array, &geometry, (shift as f64, 0.0), &mask);
        prop_assert_eq!(a.0, b.0);
    }

    #[test]
    fn gaze_window_is_monotone_until_clamped(a in -60.0f64..60.0, d in 0.01f64..20.0, pitch in -30.0f64..30.0) {
        let g = WindowGeometry::default();
        let left = gaze_window(&GazeSample::new(0.0, a, pitch), &g);
        let right = gaze_window(&GazeSample::new(0.0, a + d, pitch), &g);
        let size = g.frame_px as f64;
        let half = (g.window_deg * g.pixels_per_degree() / 2.0).min(size / 2.0);
        prop_assert!(right.0 > left.0 || right.0 == size - half || left.0 == half);
        prop_assert!(right.0 >= left.0);
        prop_assert_eq!(left.1, right.1);
    }

    #[test]
    fn gaze_stats_partition_and_fractions(seed in any::<u64>(), noise in 0.0f64..6.0, moves in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dot = DotTrajectory::generate(&mut rng, moves, 15.0);
        let trace = synthesize_trace(&dot, 90.0, noise, &mut rng);
        let s = gaze_accuracy_stats(&trace, &dot).unwrap();
        prop_assert_eq!(s.fixation.count + s.pursuit.count, s.overall.count);
        prop_assert!((0.0..=1.0).contains(&s.fraction_below_3));
        prop_assert!((0.0..=1.0).contains(&s.fraction_below_5));
        prop_assert!(s.fraction_below_3 <= s.fraction_below_5);
    }

    #[test]
    fn gaze_stats_ignore_time_shifts(seed in any::<u64>(), shift in -100i32..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dot = DotTrajectory::generate(&mut rng, 4, 15.0);
        let trace = synthesize_trace(&dot, 90.0, 1.0, &mut rng);
        let dt = shift as f64 * 0.5;
        let moved: Vec<GazeSample> = trace.iter().map(|g| GazeSample::new(g.t + dt, g.yaw, g.pitch)).collect();
        let a = gaze_accuracy_stats(&trace, &dot).unwrap();
        let b = gaze_accuracy_stats(&moved, &dot.shifted(dt)).unwrap();
        prop_assert_eq!(a.overall.count, b.overall.count);
        prop_assert_eq!(a.fixation.count, b.fixation.count);
        prop_assert!((a.overall.mean - b.overall.mean).abs() < 1e-6);
        prop_assert!((a.fraction_below_5 - b.fraction_below_5).abs() < 1e-12);
    }

    #[test]
    fn arrays_are_regular_and_centered(
        rows in 1usize..12, cols in 1usize..12, spacing in 50.0f64..800.0,
        cx in -2000.0f64..2000.0, cy in -2000.0f64..2000.0,
    ) {
        let center = RetinalPoint { x: cx, y: cy };
        let array = ElectrodeArray::new(rows, cols, spacing, center).unwrap();
        prop_assert_eq!(array.len(), rows * cols);
        let (sx, sy) = array.positions().iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        let n = array.len() as f64;
        prop_assert!((sx - n * cx).abs() < 1e-6 * n.max(1.0) * (1.0 + cx.abs()));
        prop_assert!((sy - n * cy).abs() < 1e-6 * n.max(1.0) * (1.0 + cy.abs()));
        for i in 0..array.len() {
            let (r, c) = array.row_col(i);
            if c + 1 < cols {
                let j = i + 1;
                prop_assert_eq!(array.row_col(j), (r, c + 1));
                prop_assert!((array.positions()[j].x - array.positions()[i].x - spacing).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn axon_weights_and_kernel_entries_are_well_formed() {
    let params = AxonMapParams::default();
    let grid = VisualFieldGrid::new(32, 32, 14.6, params.um_per_degree).unwrap();
    let array = ElectrodeArray::new(10, 10, 400.0, RetinalPoint::ORIGIN).unwrap();
    for mode in [AxonMode::Spiral, AxonMode::Point] {
        let paths = generate_axon_paths(&grid, &params, mode).unwrap();
        for px in 0..grid.len() {
            let refs = paths.pixel_refs(px);
            assert!(!refs.is_empty());
            assert_eq!(refs[0].weight, 1.0);
            assert!(refs.iter().all(|r| r.weight > 0.0 && r.weight <= 1.0));
            assert!(refs.windows(2).all(|w| w[1].weight <= w[0].weight));
        }
        let kernel = build_kernel(&array, &paths, &params);
        for e in 0..kernel.electrodes() {
            assert!(kernel
                .electrode_column(e)
                .iter()
                .all(|k| *k > 0.0 && *k <= 1.0));
        }
        let dark = spatial_percept(&[0.0; 100], &kernel, &paths, &grid).unwrap();
        assert!(dark.data.iter().all(|v| *v == 0.0));
    }
}

#[derive(Debug, Clone)]
struct Walk {
    layout: &'static str,
    seed: u64,
    commands: Vec<(f64, f64, f64, u16)>,
}

fn walk() -> impl Strategy<Value = Walk> {
    let cmd = (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 1u16..120);
    (
        prop::sample::select(vec!["0", "1", "2", "bike-intercept"]),
        any::<u64>(),
        prop::collection::vec(cmd, 1..12),
    )
        .prop_map(|(layout, seed, commands)| Walk {
            layout,
            seed,
            commands,
        })
}

/// Plays a walk through locomotion, agents, collisions and trial status.
fn play(w: &Walk) -> (Vec<TrialState>, Vec<Vec2>, Vec<Vec<AgentState>>) {
    let scene = load_scene(w.layout, w.seed).unwrap();
    let params = PlayerParams::default();
    let config = TrialConfig::default();
    let dt = 1.0 / 90.0;
    let mut player = PlayerState::at_start(&scene, &params);
    let mut agents = AgentState::all_initial(&scene);
    let mut trial = TrialState::new(GoalSide::Left);
    let (mut states, mut positions, mut agent_log) = (Vec::new(), Vec::new(), Vec::new());
    let mut frame = 0u64;
    for &(forward, strafe, turn, frames) in &w.commands {
        let cmd = MoveCommand {
            forward,
            strafe,
            turn,
        };
        for _ in 0..frames {
            frame += 1;
            let t = frame as f64 * dt;
            move_player(&mut player, &cmd, &params, scene.size, dt);
            step_agents(&scene, &mut agents, t, dt);
            if !trial.status.is_terminal() {
                let events = detect_collision(
                    &player,
                    &scene,
                    &agents,
                    &mut trial.cooldowns,
                    config.cooldown_distance,
                    t,
                );
                trial_update(&mut trial, events, t, player.position, &scene, &config);
            }
            states.push(trial.clone());
            positions.push(player.position);
            agent_log.push(agents.clone());
        }
    }
    (states, positions, agent_log)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walks_respect_bounds_cooldowns_and_terminal_states(w in walk()) {
        let scene = load_scene(w.layout, w.seed).unwrap();
        let (states, positions, agents) = play(&w);
        let r = PlayerParams::default().radius;
        for p in &positions {
            prop_assert!(p.x >= r && p.x <= scene.size - r && p.y >= r && p.y <= scene.size - r);
        }
        for frame in &agents {
            for a in frame.iter().filter(|a| a.active) {
                prop_assert!(scene.contains(a.position), "{}", a.position);
            }
        }
        // Terminal statuses never change, and the log only grows.
        let mut terminal: Option<TrialStatus> = None;
        for (i, s) in states.iter().enumerate() {
            if let Some(t) = terminal {
                prop_assert_eq!(s.status, t);
                prop_assert_eq!(s.collisions.len(), states[i - 1].collisions.len());
            } else if s.status.is_terminal() {
                terminal = Some(s.status);
            }
        }
        let last = states.last().unwrap();
        let m = last.metrics();
        prop_assert!(!m.collision_free || (m.success && m.total_collisions == 0));
        prop_assert!(m.completion_time.is_none_or(|t| t <= 50.0));
        prop_assert_eq!(m.total_collisions, m.stationary_collisions + m.moving_collisions);

        // A repeat event on the same object needs a 0.25 m excursion from
        // the earlier event's anchor in between.
        let dt = 1.0 / 90.0;
        let events = &last.collisions;
        for (j, e) in events.iter().enumerate() {
            if let Some(prev) = events[..j].iter().rev().find(|p| p.object == e.object) {
                let from = (prev.t / dt).round() as usize;
                let to = (e.t / dt).round() as usize;
                let left = positions[from - 1..to].iter().any(|p| p.dist(prev.position) >= 0.25);
                prop_assert!(left, "{} counted twice without leaving", e.name);
            }
        }
    }

    #[test]
    fn walks_are_deterministic(w in walk()) {
        let (a, pa, _) = play(&w);
        let (b, pb, _) = play(&w);
        prop_assert_eq!(a.last().unwrap().metrics(), b.last().unwrap().metrics());
        prop_assert_eq!(pa, pb);
    }
}
