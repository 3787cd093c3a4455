//! Stimulation scheduling: which electrodes may fire on a frame, and at what
//! level.
//!
//! Electrodes alternate in a checkerboard: electrode `(r, c)` is eligible on
//! frame `k` iff `r + c + k` is even. No two 4-adjacent electrodes ever fire
//! together and every electrode fires at least once in any two frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::GrayImage;
use crate::retina::ElectrodeArray;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("raster layout `{0}` is reserved and not implemented")]
    Reserved(&'static str),
}

/// Electrode raster layouts. Only the checkerboard is implemented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RasterLayout {
    #[default]
    Checkerboard,
    Vertical,
    Horizontal,
    Random,
}

impl RasterLayout {
    pub fn mask(self, array: &ElectrodeArray, frame_index: u64) -> Result<RasterMask, RasterError> {
        match self {
            Self::Checkerboard => Ok(checkerboard_mask(array, frame_index)),
            Self::Vertical => Err(RasterError::Reserved("vertical")),
            Self::Horizontal => Err(RasterError::Reserved("horizontal")),
            Self::Random => Err(RasterError::Reserved("random")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterMask {
    pub frame_index: u64,
    pub eligible: Vec<bool>,
}

impl RasterMask {
    pub fn all(len: usize) -> Self {
        Self {
            frame_index: 0,
            eligible: vec![true; len],
        }
    }

    pub fn none(len: usize) -> Self {
        Self {
            frame_index: 0,
            eligible: vec![false; len],
        }
    }

    pub fn count(&self) -> usize {
        self.eligible.iter().filter(|e| **e).count()
    }
}

pub fn checkerboard_mask(array: &ElectrodeArray, frame_index: u64) -> RasterMask {
    let parity = (frame_index % 2) as usize;
    let eligible = (0..array.len())
        .map(|i| {
            let (r, c) = array.row_col(i);
            (r + c + parity).is_multiple_of(2)
        })
        .collect();
    RasterMask {
        frame_index,
        eligible,
    }
}

/// Per-electrode stimulation level in [0, 1].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActivationVector(pub Vec<f64>);

impl std::ops::Deref for ActivationVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Nearest,
    Bilinear,
}

/// How electrode positions map onto the processed camera frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingGeometry {
    /// Horizontal field of view of the processed frame, degrees.
    pub hfov_deg: f64,
    pub um_per_degree: f64,
    pub mode: SamplingMode,
}

impl SamplingGeometry {
    fn pixels_per_degree(&self, frame: &GrayImage) -> f64 {
        frame.width as f64 / self.hfov_deg
    }
}

/// Reads each eligible electrode's level from the processed frame.
///
/// An electrode at retinal position `p` looks at visual angle
/// `gaze + p / um_per_degree`; the level is the intensity of the frame pixel
/// containing that direction. Electrodes pointing outside the frame, or not
/// eligible under `mask`, get 0. Gaze is clamped to the camera field of view.
pub fn sample_electrodes(
    processed: &GrayImage,
    array: &ElectrodeArray,
    geometry: &SamplingGeometry,
    gaze_deg: (f64, f64),
    mask: &RasterMask,
) -> ActivationVector {
    let ppd = geometry.pixels_per_degree(processed);
    let half_h = processed.width as f64 / ppd / 2.0;
    let half_v = processed.height as f64 / ppd / 2.0;
    let yaw = gaze_deg.0.clamp(-half_h, half_h);
    let pitch = gaze_deg.1.clamp(-half_v, half_v);
    let levels = array
        .positions()
        .iter()
        .zip(&mask.eligible)
        .map(|(p, &on)| {
            if !on {
                return 0.0;
            }
            let x_deg = yaw + p.x / geometry.um_per_degree;
            let y_deg = pitch + p.y / geometry.um_per_degree;
            let fx = processed.width as f64 / 2.0 + x_deg * ppd;
            let fy = processed.height as f64 / 2.0 - y_deg * ppd;
            match geometry.mode {
                SamplingMode::Nearest => nearest(processed, fx, fy),
                SamplingMode::Bilinear => bilinear(processed, fx, fy),
            }
        })
        .collect();
    ActivationVector(levels)
}

fn nearest(img: &GrayImage, fx: f64, fy: f64) -> f64 {
    if fx < 0.0 || fy < 0.0 {
        return 0.0;
    }
    let (c, r) = (fx.floor() as usize, fy.floor() as usize);
    if c >= img.width || r >= img.height {
        return 0.0;
    }
    img.get(c, r)
}

fn bilinear(img: &GrayImage, fx: f64, fy: f64) -> f64 {
    if fx < 0.0 || fy < 0.0 || fx >= img.width as f64 || fy >= img.height as f64 {
        return 0.0;
    }
    let (x, y) = (fx - 0.5, fy - 0.5);
    let (x0, y0) = (x.floor(), y.floor());
    let (tx, ty) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let top = (1.0 - tx) * img.get_clamped(x0, y0) + tx * img.get_clamped(x0 + 1, y0);
    let bottom = (1.0 - tx) * img.get_clamped(x0, y0 + 1) + tx * img.get_clamped(x0 + 1, y0 + 1);
    (1.0 - ty) * top + ty * bottom
}
