use serde::{Deserialize, Serialize};

use super::{RetinaError, RetinalPoint};

/// Square window of the visual field, centered on the fovea, sampled on a
/// regular pixel grid.
///
/// Pixel `(col, row)` covers the cell whose center sits at
/// `((col + 0.5) / width - 0.5) * extent` degrees horizontally and the
/// mirrored expression vertically (row 0 is the top of the window).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualFieldGrid {
    width: usize,
    height: usize,
    extent_deg: f64,
    um_per_degree: f64,
}

impl VisualFieldGrid {
    pub fn new(
        width: usize,
        height: usize,
        extent_deg: f64,
        um_per_degree: f64,
    ) -> Result<Self, RetinaError> {
        if width == 0 || height == 0 || !(extent_deg > 0.0) || !(um_per_degree > 0.0) {
            return Err(RetinaError::InvalidGrid);
        }
        Ok(Self {
            width,
            height,
            extent_deg,
            um_per_degree,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent_deg(&self) -> f64 {
        self.extent_deg
    }

    pub fn um_per_degree(&self) -> f64 {
        self.um_per_degree
    }

    /// Visual-field position of a pixel center in degrees.
    pub fn pixel_degrees(&self, col: usize, row: usize) -> (f64, f64) {
        let x = ((col as f64 + 0.5) / self.width as f64 - 0.5) * self.extent_deg;
        let y = (0.5 - (row as f64 + 0.5) / self.height as f64) * self.extent_deg;
        (x, y)
    }

    /// Retinal position of a pixel center in microns.
    pub fn pixel_retina(&self, index: usize) -> RetinalPoint {
        let (x, y) = self.pixel_degrees(index % self.width, index / self.width);
        RetinalPoint::new(x * self.um_per_degree, y * self.um_per_degree)
    }

    /// Polar retinal coordinates `(r, theta)` of a pixel: microns and radians.
    pub fn pixel_polar(&self, index: usize) -> (f64, f64) {
        let p = self.pixel_retina(index);
        (p.x.hypot(p.y), p.y.atan2(p.x))
    }

    /// Inverse of [`pixel_retina`](Self::pixel_retina): the pixel whose cell
    /// contains a retinal point, if any.
    pub fn pixel_at(&self, p: RetinalPoint) -> Option<usize> {
        let fx = (p.x / self.um_per_degree / self.extent_deg + 0.5) * self.width as f64;
        let fy = (0.5 - p.y / self.um_per_degree / self.extent_deg) * self.height as f64;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (col, row) = (fx.floor() as usize, fy.floor() as usize);
        (col < self.width && row < self.height).then_some(row * self.width + col)
    }

    pub fn retina_points(&self) -> impl Iterator<Item = RetinalPoint> + '_ {
        (0..self.len()).map(|i| self.pixel_retina(i))
    }
}
