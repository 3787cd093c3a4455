//! Retinal geometry and the spatial axon-map percept model.
//!
//! An electrode at retinal position `e` excites every axon segment `p` with
//! strength `exp(-|p - e|^2 / 2 rho^2)`. A pixel's ganglion cell sees the
//! segments along its own axon, attenuated by the arc length back to the cell
//! body, `exp(-d_soma^2 / 2 lambda^2)`; the pixel brightness is the strongest
//! such segment response.
//!
//! The electrode-dependent factor never changes between frames, so it is
//! precomputed once into a [`KernelMatrix`] and a frame only costs one
//! weighted column sum per active electrode plus a max over each pixel's
//! segment references.

mod array;
mod axon;
mod grid;
mod kernel;
mod percept;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use array::{build_array, ElectrodeArray};
pub use axon::{
    generate_axon_paths, AxonMode, AxonPathSet, SegmentRef, AXON_STEP_UM, SOMA_WEIGHT_CUTOFF,
};
pub use grid::VisualFieldGrid;
pub use kernel::{build_kernel, KernelMatrix};
pub use percept::{spatial_percept, spatial_percept_into, PerceptFrame};

/// Retinal location in microns, fovea at the origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RetinalPoint {
    pub x: f64,
    pub y: f64,
}

impl RetinalPoint {
    pub const ORIGIN: RetinalPoint = RetinalPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: RetinalPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: RetinalPoint) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Spatial model constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxonMapParams {
    /// Gaussian current spread around an electrode, microns.
    pub rho: f64,
    /// Brightness falloff length along the axon, microns.
    pub lambda: f64,
    /// Retinal magnification, microns per degree of visual angle.
    pub um_per_degree: f64,
}

impl Default for AxonMapParams {
    fn default() -> Self {
        Self {
            rho: 200.0,
            lambda: 400.0,
            um_per_degree: 280.0,
        }
    }
}

impl AxonMapParams {
    pub fn validate(&self) -> Result<(), RetinaError> {
        if !(self.rho > 0.0) {
            return Err(RetinaError::InvalidParam("rho must be > 0"));
        }
        if !(self.lambda >= 0.0) {
            return Err(RetinaError::InvalidParam("lambda must be >= 0"));
        }
        if !(self.um_per_degree > 0.0) {
            return Err(RetinaError::InvalidParam("um_per_degree must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RetinaError {
    #[error("electrode array must have at least one row and column (got {rows}x{cols})")]
    EmptyArray { rows: usize, cols: usize },
    #[error("electrode spacing must be positive (got {0})")]
    InvalidSpacing(f64),
    #[error("invalid axon-map parameter: {0}")]
    InvalidParam(&'static str),
    #[error("visual field grid must be non-empty with positive extent")]
    InvalidGrid,
    #[error("activation vector has {got} entries, array has {expected} electrodes")]
    ActivationLength { expected: usize, got: usize },
    #[error("kernel was built for {expected} segments, path set has {got}")]
    KernelMismatch { expected: usize, got: usize },
}
