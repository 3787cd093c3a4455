//! Axon-map model against independent reference computations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spv_core::retina::{
    build_kernel, generate_axon_paths, spatial_percept, AxonMapParams, AxonMode, AxonPathSet,
    ElectrodeArray, RetinalPoint, VisualFieldGrid,
};

struct Model {
    grid: VisualFieldGrid,
    paths: AxonPathSet,
    array: ElectrodeArray,
    params: AxonMapParams,
}

fn model(n: usize, rows: usize, mode: AxonMode) -> Model {
    let params = AxonMapParams::default();
    let grid = VisualFieldGrid::new(n, n, 14.6, params.um_per_degree).unwrap();
    let paths = generate_axon_paths(&grid, &params, mode).unwrap();
    let array = ElectrodeArray::new(rows, rows, 400.0, RetinalPoint::ORIGIN).unwrap();
    Model {
        grid,
        paths,
        array,
        params,
    }
}

/// Direct evaluation: for every pixel, walk its axon, recompute the arc length
/// back to the cell body from the geometry, and sum both exponentials per
/// active electrode without any cached factor.
fn brute_force(m: &Model, activations: &[f64]) -> Vec<f64> {
    let (rho, lambda) = (m.params.rho, m.params.lambda);
    (0..m.grid.len())
        .map(|px| {
            let pts: Vec<RetinalPoint> = m.paths.pixel_path(px).collect();
            let mut d_soma = 0.0;
            let mut best = 0.0f64;
            for (i, p) in pts.iter().enumerate() {
                if i > 0 {
                    d_soma += ((p.x - pts[i - 1].x).powi(2) + (p.y - pts[i - 1].y).powi(2)).sqrt();
                }
                let mut sum = 0.0;
                for (e, a) in m.array.positions().iter().zip(activations) {
                    if *a == 0.0 {
                        continue;
                    }
                    let d_e_sq = (p.x - e.x).powi(2) + (p.y - e.y).powi(2);
                    sum += a
                        * (-d_e_sq / (2.0 * rho * rho) - d_soma * d_soma / (2.0 * lambda * lambda))
                            .exp();
                }
                best = best.max(sum);
            }
            best
        })
        .collect()
}

#[test]
fn factored_matches_brute_force_on_random_activations() {
    let m = model(16, 3, AxonMode::Spiral);
    let kernel = build_kernel(&m.array, &m.paths, &m.params);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..25 {
        let a: Vec<f64> = (0..9)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random()
                }
            })
            .collect();
        let fast = spatial_percept(&a, &kernel, &m.paths, &m.grid).unwrap();
        let slow = brute_force(&m, &a);
        for (x, y) in fast.data.iter().zip(&slow) {
            assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn point_mode_is_sum_of_isotropic_gaussians() {
    let m = model(20, 3, AxonMode::Point);
    let kernel = build_kernel(&m.array, &m.paths, &m.params);
    let a = [0.2, 0.0, 1.0, 0.5, 0.7, 0.0, 0.1, 0.9, 0.3];
    let f = spatial_percept(&a, &kernel, &m.paths, &m.grid).unwrap();
    for px in 0..m.grid.len() {
        let p = m.grid.pixel_retina(px);
        let expected: f64 = m
            .array
            .positions()
            .iter()
            .zip(a)
            .map(|(e, a)| a * (-p.dist_sq(*e) / (2.0 * 200.0 * 200.0)).exp())
            .sum();
        assert!((f.data[px] - expected).abs() < 1e-12);
    }
}

/// Net turning angle (radians, counter-clockwise positive) along a polyline.
fn turning(points: &[RetinalPoint]) -> f64 {
    points
        .windows(3)
        .map(|w| {
            let (ax, ay) = (w[1].x - w[0].x, w[1].y - w[0].y);
            let (bx, by) = (w[2].x - w[1].x, w[2].y - w[1].y);
            (ax * by - ay * bx).atan2(ax * bx + ay * by)
        })
        .sum()
}

/// Dense reference for the fiber-bundle family: 4000 bundles, 8001 samples
/// each, no resampling, clipped to the region between the window and the disc.
fn dense_family() -> Vec<Vec<RetinalPoint>> {
    let umd = 280.0;
    let (odx, ody) = (4000.0 / umd, 600.0 / umd);
    let inside = |p: &RetinalPoint| p.x.abs() < 5000.0 && p.y.abs() < 3500.0;
    (0..4000)
        .map(|i| {
            let phi0 = -180.0 + (i as f64 + 0.5) * 360.0 / 4000.0;
            let (b, c) = if phi0 > 0.0 {
                (
                    (-1.9 + 3.9 * (-(phi0 - 121.0) / 14.0).tanh()).exp(),
                    1.9 + 1.4 * ((phi0 - 121.0) / 14.0).tanh(),
                )
            } else {
                (
                    -(0.5 + 1.5 * (-(-phi0 - 90.0) / 25.0).tanh()).exp(),
                    1.0 + 0.5 * ((-phi0 - 90.0) / 25.0).tanh(),
                )
            };
            let mut pts: Vec<RetinalPoint> = Vec::new();
            for k in 0..8001 {
                let rho = 4.0 + 41.0 * k as f64 / 8000.0;
                let phi = (phi0 + b * (rho - 4.0).powf(c)).to_radians();
                let x = rho * phi.cos() + odx;
                let mut y = rho * phi.sin();
                if x > 0.0 {
                    y += ody * (x / odx).powi(2);
                }
                if let Some(prev) = pts.last() {
                    if x < 0.0 && prev.y * y < 0.0 {
                        break;
                    }
                }
                pts.push(RetinalPoint::new(x * umd, y * umd));
            }
            let keep = pts.iter().rposition(inside).map_or(0, |k| k + 1);
            pts.truncate(keep);
            pts
        })
        .collect()
}

/// Dense path from the bundle point nearest to `q` back toward the disc, up
/// to `max_arc` microns of arc length.
fn dense_reference_path(
    family: &[Vec<RetinalPoint>],
    q: RetinalPoint,
    max_arc: f64,
) -> Vec<RetinalPoint> {
    let mut best = (f64::MAX, 0, 0);
    for (b, pts) in family.iter().enumerate() {
        for (k, p) in pts.iter().enumerate() {
            let d = p.dist(q);
            if d < best.0 {
                best = (d, b, k);
            }
        }
    }
    let (_, b, k) = best;
    let pts = &family[b];
    let mut out = vec![pts[k]];
    let mut arc = 0.0;
    for j in (0..k).rev() {
        arc += pts[j].dist(pts[j + 1]);
        if arc > max_arc {
            break;
        }
        out.push(pts[j]);
    }
    out
}

#[test]
fn path_curvature_matches_dense_reference() {
    let m = model(64, 1, AxonMode::Spiral);
    let family = dense_family();
    let probe = |x: f64, y: f64| {
        let px = m.grid.pixel_at(RetinalPoint::new(x, y)).unwrap();
        let ours: Vec<_> = m.paths.pixel_path(px).collect();
        let reference = dense_reference_path(&family, m.grid.pixel_retina(px), 1486.77);
        (turning(&ours), turning(&reference))
    };
    // Temporal side of the fovea versus the optic-disc side, just above the meridian.
    let (temporal, temporal_ref) = probe(-1800.0, 100.0);
    let (nasal, nasal_ref) = probe(1800.0, 100.0);
    assert_eq!(temporal.signum(), temporal_ref.signum());
    assert_eq!(nasal.signum(), nasal_ref.signum());
    assert!(temporal.signum() != nasal.signum(), "{temporal} {nasal}");
    assert!((temporal - temporal_ref).abs() < 0.1);
    assert!((nasal - nasal_ref).abs() < 0.1);
    // Superior and inferior fibers arch around the fovea in opposite senses.
    let (sup, sup_ref) = probe(-1500.0, 800.0);
    let (inf, inf_ref) = probe(-1500.0, -800.0);
    assert_eq!(sup.signum(), sup_ref.signum());
    assert_eq!(inf.signum(), inf_ref.signum());
    assert!(sup < 0.0 && inf > 0.0);
}

fn activation_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..=1.0f64], 9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brightness_is_monotone_in_each_electrode(
        a in activation_strategy(),
        e in 0usize..9,
        bump in 0.0..1.0f64,
    ) {
        let m = model(12, 3, AxonMode::Spiral);
        let k = build_kernel(&m.array, &m.paths, &m.params);
        let lo = spatial_percept(&a, &k, &m.paths, &m.grid).unwrap();
        let mut b = a.clone();
        b[e] += bump;
        let hi = spatial_percept(&b, &k, &m.paths, &m.grid).unwrap();
        for (x, y) in lo.data.iter().zip(&hi.data) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn brightness_is_positively_homogeneous(a in activation_strategy(), c in 0.0..5.0f64) {
        let m = model(12, 3, AxonMode::Spiral);
        let k = build_kernel(&m.array, &m.paths, &m.params);
        let base = spatial_percept(&a, &k, &m.paths, &m.grid).unwrap();
        let scaled: Vec<f64> = a.iter().map(|v| v * c).collect();
        let out = spatial_percept(&scaled, &k, &m.paths, &m.grid).unwrap();
        for (x, y) in base.data.iter().zip(&out.data) {
            prop_assert!((c * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }
}
