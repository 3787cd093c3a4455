//! Gaze-contingent windowing and eye-tracking accuracy analysis.

mod dot;
mod stats;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dot::{DotSegment, DotTrajectory, SegmentKind, DOT_DWELL_S, DOT_RADIUS_DEG};
pub use stats::{gaze_accuracy_stats, ErrorSummary, GazeAccuracyStats, RESAMPLE_PERIOD_S};
pub use trace::{parse_trace, read_trace, synthesize_trace, write_trace};

/// One eye-tracker reading, degrees relative to head-forward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub yaw: f64,
    pub pitch: f64,
}

impl GazeSample {
    pub fn new(t: f64, yaw: f64, pitch: f64) -> Self {
        Self { t, yaw, pitch }
    }
}

#[derive(Debug, Error)]
pub enum GazeError {
    #[error("gaze trace and dot trajectory do not overlap in time")]
    NoOverlap,
    #[error("gaze timestamps must be strictly increasing (sample {index})")]
    NonMonotonic { index: usize },
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Geometry of the camera frame and the stimulated window inside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowGeometry {
    pub frame_px: usize,
    pub camera_fov_deg: f64,
    pub window_deg: f64,
}

impl Default for WindowGeometry {
    fn default() -> Self {
        Self {
            frame_px: 200,
            camera_fov_deg: 60.0,
            window_deg: 14.6,
        }
    }
}

impl WindowGeometry {
    pub fn pixels_per_degree(&self) -> f64 {
        self.frame_px as f64 / self.camera_fov_deg
    }

    /// Gaze offset, degrees, that a window center corresponds to.
    pub fn center_to_gaze(&self, center: (f64, f64)) -> (f64, f64) {
        let mid = self.frame_px as f64 / 2.0;
        let ppd = self.pixels_per_degree();
        ((center.0 - mid) / ppd, (mid - center.1) / ppd)
    }
}

/// Window center in frame pixel coordinates (x right, y down) for a gaze
/// direction, clamped so the whole window stays inside the frame.
pub fn gaze_window(gaze: &GazeSample, geometry: &WindowGeometry) -> (f64, f64) {
    let ppd = geometry.pixels_per_degree();
    let size = geometry.frame_px as f64;
    let half = (geometry.window_deg * ppd / 2.0).min(size / 2.0);
    let mid = size / 2.0;
    (
        (mid + gaze.yaw * ppd).clamp(half, size - half),
        (mid - gaze.pitch * ppd).clamp(half, size - half),
    )
}
