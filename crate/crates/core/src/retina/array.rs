use serde::{Deserialize, Serialize};

use super::{RetinaError, RetinalPoint};

/// A rectangular grid of point-source electrodes on the retinal surface.
///
/// Positions are in microns with the fovea at the origin, `x` growing to the
/// right and `y` growing upward in visual-field orientation. Electrodes are
/// stored row-major with row 0 at the top of the array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeArray {
    rows: usize,
    cols: usize,
    spacing_um: f64,
    center: RetinalPoint,
    positions: Vec<RetinalPoint>,
}

impl ElectrodeArray {
    pub fn new(
        rows: usize,
        cols: usize,
        spacing_um: f64,
        center: RetinalPoint,
    ) -> Result<Self, RetinaError> {
        if rows == 0 || cols == 0 {
            return Err(RetinaError::EmptyArray { rows, cols });
        }
        if !(spacing_um > 0.0) || !spacing_um.is_finite() {
            return Err(RetinaError::InvalidSpacing(spacing_um));
        }
        let row_mid = (rows as f64 - 1.0) / 2.0;
        let col_mid = (cols as f64 - 1.0) / 2.0;
        let positions = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| RetinalPoint {
                x: center.x + (c as f64 - col_mid) * spacing_um,
                y: center.y + (row_mid - r as f64) * spacing_um,
            })
            .collect();
        Ok(Self {
            rows,
            cols,
            spacing_um,
            center,
            positions,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn spacing_um(&self) -> f64 {
        self.spacing_um
    }

    pub fn center(&self) -> RetinalPoint {
        self.center
    }

    pub fn positions(&self) -> &[RetinalPoint] {
        &self.positions
    }

    /// Row and column of the electrode at a row-major index.
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }
}

/// Convenience wrapper matching the array-construction operation.
pub fn build_array(
    rows: usize,
    cols: usize,
    spacing_um: f64,
    center: RetinalPoint,
) -> Result<ElectrodeArray, RetinaError> {
    ElectrodeArray::new(rows, cols, spacing_um, center)
}
