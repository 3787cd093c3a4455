use serde::{Deserialize, Serialize};

use super::{AxonPathSet, KernelMatrix, RetinaError, VisualFieldGrid};

/// Brightness raster aligned to a [`VisualFieldGrid`], row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
    /// Seconds since the start of the trial.
    pub timestamp: f64,
}

impl PerceptFrame {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
            timestamp: 0.0,
        }
    }

    pub fn for_grid(grid: &VisualFieldGrid) -> Self {
        Self::zeros(grid.width(), grid.height())
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// 8-bit quantization: `round(clamp(b * gain, 0, 1) * 255)`.
    pub fn to_gray8(&self, gain: f64) -> Vec<u8> {
        self.data
            .iter()
            .map(|b| ((b * gain).clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// Instantaneous brightness of every pixel for the given electrode levels.
///
/// Only electrodes with a nonzero level take part. For each pixel the result
/// is the largest `soma_weight * sum_e a_e K[s][e]` over that pixel's axon
/// segments `s`.
pub fn spatial_percept(
    activations: &[f64],
    kernel: &KernelMatrix,
    paths: &AxonPathSet,
    grid: &VisualFieldGrid,
) -> Result<PerceptFrame, RetinaError> {
    let mut out = PerceptFrame::for_grid(grid);
    let mut scratch = Vec::new();
    spatial_percept_into(activations, kernel, paths, &mut scratch, &mut out)?;
    Ok(out)
}

/// Allocation-free variant of [`spatial_percept`] for the frame loop.
pub fn spatial_percept_into(
    activations: &[f64],
    kernel: &KernelMatrix,
    paths: &AxonPathSet,
    segment_drive: &mut Vec<f64>,
    out: &mut PerceptFrame,
) -> Result<(), RetinaError> {
    if activations.len() != kernel.electrodes() {
        return Err(RetinaError::ActivationLength {
            expected: kernel.electrodes(),
            got: activations.len(),
        });
    }
    if kernel.segments() != paths.segments().len() {
        return Err(RetinaError::KernelMismatch {
            expected: kernel.segments(),
            got: paths.segments().len(),
        });
    }
    segment_drive.clear();
    segment_drive.resize(kernel.segments(), 0.0);
    for (e, &a) in activations.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (acc, k) in segment_drive.iter_mut().zip(kernel.electrode_column(e)) {
            *acc += a * k;
        }
    }

    out.data.resize(paths.pixel_count(), 0.0);
    for (px, b) in out.data.iter_mut().enumerate() {
        *b = paths
            .pixel_refs(px)
            .iter()
            .map(|r| r.weight * segment_drive[r.segment as usize])
            .fold(0.0, f64::max);
    }
    Ok(())
}
