//! Axon trajectories for every pixel of a [`VisualFieldGrid`].
//!
//! In `spiral` mode the retina is covered by a family of nerve-fiber bundles
//! that fan out of the optic disc following the modified-spiral description
//! of Jansonius et al. (2009), the family used by published axon-map model
//! implementations. Each bundle is resampled at fixed 50 um chord steps
//! starting at the optic-disc end, so consecutive samples are exactly one step
//! apart. A pixel's cell body snaps to the nearest bundle sample and its axon
//! is that sample plus the preceding samples back toward the disc, cut off
//! once the soma falloff drops below [`SOMA_WEIGHT_CUTOFF`].
//!
//! Neighbouring pixels share most of their axon samples, which keeps the
//! segment table (and with it the kernel matrix) small.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AxonMapParams, RetinaError, RetinalPoint, VisualFieldGrid};

/// Arc-length spacing between axon samples, microns.
pub const AXON_STEP_UM: f64 = 50.0;

/// Segments whose soma weight falls below this are dropped from a path.
pub const SOMA_WEIGHT_CUTOFF: f64 = 1e-3;

/// Optic disc center relative to the fovea, microns (nasal and superior).
pub const OPTIC_DISC_UM: RetinalPoint = RetinalPoint {
    x: 4000.0,
    y: 600.0,
};

const BUNDLE_COUNT: usize = 1000;
const BUNDLE_SAMPLES: usize = 801;
const BUNDLE_RHO_DEG: (f64, f64) = (4.0, 45.0);
const BETA_SUP: f64 = -1.9;
const BETA_INF: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxonMode {
    #[default]
    Spiral,
    /// Every pixel's axon is its own location; percepts become round blobs.
    Point,
}

/// One entry of a pixel's axon: which shared segment, and the soma falloff
/// `exp(-d_soma^2 / 2 lambda^2)` at that point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub segment: u32,
    pub weight: f64,
}

/// Shared axon segments plus, for every pixel, the ordered references that
/// make up its axon (cell body first, then toward the optic disc).
#[derive(Clone, Debug, PartialEq)]
pub struct AxonPathSet {
    mode: AxonMode,
    segments: Vec<RetinalPoint>,
    offsets: Vec<usize>,
    refs: Vec<SegmentRef>,
}

impl AxonPathSet {
    pub fn mode(&self) -> AxonMode {
        self.mode
    }

    pub fn segments(&self) -> &[RetinalPoint] {
        &self.segments
    }

    pub fn pixel_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn pixel_refs(&self, pixel: usize) -> &[SegmentRef] {
        &self.refs[self.offsets[pixel]..self.offsets[pixel + 1]]
    }

    pub fn total_refs(&self) -> usize {
        self.refs.len()
    }

    /// Retinal points of one pixel's axon in path order.
    pub fn pixel_path(&self, pixel: usize) -> impl Iterator<Item = RetinalPoint> + '_ {
        self.pixel_refs(pixel)
            .iter()
            .map(|r| self.segments[r.segment as usize])
    }
}

pub fn generate_axon_paths(
    grid: &VisualFieldGrid,
    params: &AxonMapParams,
    mode: AxonMode,
) -> Result<AxonPathSet, RetinaError> {
    params.validate()?;
    if grid.is_empty() {
        return Err(RetinaError::InvalidGrid);
    }
    Ok(match mode {
        AxonMode::Point => point_paths(grid),
        AxonMode::Spiral => spiral_paths(grid, params),
    })
}

fn point_paths(grid: &VisualFieldGrid) -> AxonPathSet {
    let segments: Vec<RetinalPoint> = grid.retina_points().collect();
    let refs = (0..segments.len())
        .map(|i| SegmentRef {
            segment: i as u32,
            weight: 1.0,
        })
        .collect();
    AxonPathSet {
        mode: AxonMode::Point,
        offsets: (0..=segments.len()).collect(),
        segments,
        refs,
    }
}

/// Soma falloff for a segment `d_soma` microns from the cell body.
pub(crate) fn soma_weight(d_soma: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if d_soma == 0.0 { 1.0 } else { 0.0 };
    }
    (-d_soma * d_soma / (2.0 * lambda * lambda)).exp()
}

/// Longest kept arc length: `lambda * sqrt(2 ln(1 / cutoff))`.
pub(crate) fn max_soma_distance(lambda: f64) -> f64 {
    lambda * (2.0 * (1.0 / SOMA_WEIGHT_CUTOFF).ln()).sqrt()
}

fn spiral_paths(grid: &VisualFieldGrid, params: &AxonMapParams) -> AxonPathSet {
    let bundles: Vec<Vec<RetinalPoint>> = bundle_angles()
        .map(|phi0| resample_chord(&bundle_curve(phi0, params.um_per_degree), AXON_STEP_UM))
        .collect();

    let half_w = grid.extent_deg() / 2.0 * params.um_per_degree + 4.0 * AXON_STEP_UM;
    let mut index = BucketGrid::new(half_w, 2.0 * AXON_STEP_UM);
    for (b, samples) in bundles.iter().enumerate() {
        for (s, p) in samples.iter().enumerate() {
            index.insert(*p, (b as u32, s as u32));
        }
    }

    let d_max = max_soma_distance(params.lambda);
    let keep = (d_max / AXON_STEP_UM).floor() as usize;

    let mut segment_ids: HashMap<(u32, u32), u32> = HashMap::new();
    let mut segments = Vec::new();
    let mut offsets = Vec::with_capacity(grid.len() + 1);
    let mut refs = Vec::new();
    offsets.push(0);
    for pixel in grid.retina_points() {
        match index.nearest(pixel) {
            Some((b, s)) => {
                let lo = (s as usize).saturating_sub(keep);
                for (steps, j) in (lo..=s as usize).rev().enumerate() {
                    let weight = soma_weight(steps as f64 * AXON_STEP_UM, params.lambda);
                    if weight < SOMA_WEIGHT_CUTOFF {
                        break;
                    }
                    let id = *segment_ids.entry((b, j as u32)).or_insert_with(|| {
                        segments.push(bundles[b as usize][j]);
                        (segments.len() - 1) as u32
                    });
                    refs.push(SegmentRef {
                        segment: id,
                        weight,
                    });
                }
            }
            None => {
                segments.push(pixel);
                refs.push(SegmentRef {
                    segment: (segments.len() - 1) as u32,
                    weight: 1.0,
                });
            }
        }
        offsets.push(refs.len());
    }
    AxonPathSet {
        mode: AxonMode::Spiral,
        segments,
        offsets,
        refs,
    }
}

/// Starting angles at the disc rim, degrees, avoiding exactly 0 and 180.
fn bundle_angles() -> impl Iterator<Item = f64> {
    let step = 360.0 / BUNDLE_COUNT as f64;
    (0..BUNDLE_COUNT).map(move |i| -180.0 + (i as f64 + 0.5) * step)
}

/// One nerve-fiber bundle leaving the disc at angle `phi0` (degrees), dense
/// samples in microns ordered from the disc outward.
pub(crate) fn bundle_curve(phi0: f64, um_per_degree: f64) -> Vec<RetinalPoint> {
    let (b, c) = if phi0 > 0.0 {
        let t = ((phi0 - 121.0) / 14.0).tanh();
        ((BETA_SUP - 3.9 * t).exp(), 1.9 + 1.4 * t)
    } else {
        let t = ((-phi0 - 90.0) / 25.0).tanh();
        (-(BETA_INF - 1.5 * t).exp(), 1.0 + 0.5 * t)
    };
    let od_x = OPTIC_DISC_UM.x / um_per_degree;
    let od_y = OPTIC_DISC_UM.y / um_per_degree;
    let (r0, r1) = BUNDLE_RHO_DEG;
    let mut out: Vec<RetinalPoint> = Vec::with_capacity(BUNDLE_SAMPLES);
    for i in 0..BUNDLE_SAMPLES {
        let rho = r0 + (r1 - r0) * i as f64 / (BUNDLE_SAMPLES - 1) as f64;
        let phi = (phi0 + b * (rho - r0).powf(c)).to_radians();
        let x = rho * phi.cos() + od_x;
        let mut y = rho * phi.sin();
        if x > 0.0 {
            y += od_y * (x / od_x).powi(2);
        }
        // Temporal fibers stop at the horizontal raphe.
        if let Some(prev) = out.last() {
            if x < 0.0 && prev.y * y < 0.0 {
                break;
            }
        }
        out.push(RetinalPoint::new(x * um_per_degree, y * um_per_degree));
    }
    out
}

/// Walks a polyline and emits points spaced exactly `step` apart in straight
/// line distance, starting with the first vertex.
pub(crate) fn resample_chord(curve: &[RetinalPoint], step: f64) -> Vec<RetinalPoint> {
    let Some(&first) = curve.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut cur = first;
    let mut i = 1;
    while i < curve.len() {
        if curve[i].dist(cur) >= step {
            // Solve |a + t (b - a) - cur| = step for the far root in [0, 1].
            let a = curve[i - 1];
            let (dx, dy) = (curve[i].x - a.x, curve[i].y - a.y);
            let (ox, oy) = (a.x - cur.x, a.y - cur.y);
            let qa = dx * dx + dy * dy;
            let qb = 2.0 * (dx * ox + dy * oy);
            let qc = ox * ox + oy * oy - step * step;
            let t = (-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa);
            cur = RetinalPoint::new(a.x + t * dx, a.y + t * dy);
            out.push(cur);
        } else {
            i += 1;
        }
    }
    out
}

/// Uniform hash grid over a square window for nearest-sample queries.
struct BucketGrid {
    half_width: f64,
    cell: f64,
    cells_per_side: usize,
    buckets: Vec<Vec<(RetinalPoint, (u32, u32))>>,
}

impl BucketGrid {
    fn new(half_width: f64, cell: f64) -> Self {
        let cells_per_side = ((2.0 * half_width) / cell).ceil() as usize;
        Self {
            half_width,
            cell,
            cells_per_side,
            buckets: vec![Vec::new(); cells_per_side * cells_per_side],
        }
    }

    fn cell_of(&self, p: RetinalPoint) -> Option<(usize, usize)> {
        let cx = ((p.x + self.half_width) / self.cell).floor();
        let cy = ((p.y + self.half_width) / self.cell).floor();
        let n = self.cells_per_side as f64;
        (cx >= 0.0 && cy >= 0.0 && cx < n && cy < n).then_some((cx as usize, cy as usize))
    }

    fn insert(&mut self, p: RetinalPoint, tag: (u32, u32)) {
        if let Some((cx, cy)) = self.cell_of(p) {
            self.buckets[cy * self.cells_per_side + cx].push((p, tag));
        }
    }

    fn nearest(&self, q: RetinalPoint) -> Option<(u32, u32)> {
        let (qx, qy) = self.cell_of(q)?;
        let n = self.cells_per_side as isize;
        let mut best: Option<(f64, (u32, u32))> = None;
        for ring in 0..n {
            for cy in (qy as isize - ring)..=(qy as isize + ring) {
                for cx in (qx as isize - ring)..=(qx as isize + ring) {
                    let on_ring =
                        (cy - qy as isize).abs() == ring || (cx - qx as isize).abs() == ring;
                    if !on_ring || cx < 0 || cy < 0 || cx >= n || cy >= n {
                        continue;
                    }
                    for (p, tag) in &self.buckets[cy as usize * self.cells_per_side + cx as usize] {
                        let d = p.dist_sq(q);
                        if best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, *tag));
                        }
                    }
                }
            }
            // Anything outside this ring is at least `ring * cell` away.
            if let Some((bd, tag)) = best {
                if bd.sqrt() <= ring as f64 * self.cell {
                    return Some(tag);
                }
            }
        }
        best.map(|(_, tag)| tag)
    }
}
