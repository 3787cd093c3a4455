//! Camera-frame preprocessing and the three scene simplification strategies.
//!
//! ```text
//! LabeledFrame --downscale/smooth--> 200x200 --strategy(t)--> edge intensity
//! ```
//!
//! * `Control` takes 3x3 Sobel edges of the whole frame.
//! * `SemanticEdges` keeps only the selected class groups and takes 7x7 edges
//!   of each, merged with a per-pixel max.
//! * `SemanticRaster` shows one class group at a time, cycling through them in
//!   priority order with a fixed dwell.

mod filter;
mod strategy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{downscale_gray_smooth, gaussian_smooth_3x3, sobel_magnitude, PROCESSED_SIZE};
pub use strategy::{
    active_group_index, apply_strategy, semantic_mask, StrategyConfig, StrategyKind,
};

/// Semantic class of a pixel.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "String", into = "String")]
pub struct ClassId(pub u8);

impl ClassId {
    pub const BACKGROUND: ClassId = ClassId(0);
    pub const STRUCTURE: ClassId = ClassId(1);
    pub const PEDESTRIAN: ClassId = ClassId(2);
    pub const BICYCLE: ClassId = ClassId(3);
    pub const GROUND: ClassId = ClassId(4);
    pub const GOAL: ClassId = ClassId(5);

    pub const ALL: [ClassId; 6] = [
        Self::BACKGROUND,
        Self::STRUCTURE,
        Self::PEDESTRIAN,
        Self::BICYCLE,
        Self::GROUND,
        Self::GOAL,
    ];

    pub fn name(self) -> &'static str {
        CLASS_NAMES
            .get(self.0 as usize)
            .copied()
            .unwrap_or("unknown")
    }
}

const CLASS_NAMES: [&str; 6] = [
    "background",
    "structure",
    "pedestrian",
    "bicycle",
    "ground",
    "goal",
];

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassId {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CLASS_NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| ClassId(i as u8))
            .ok_or_else(|| FrameError::UnknownClass(s.to_string()))
    }
}

impl TryFrom<String> for ClassId {
    type Error = FrameError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ClassId> for String {
    fn from(c: ClassId) -> String {
        c.name().to_string()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("frame is {width}x{height}, need at least {min}x{min}")]
    Undersized {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("unsupported Sobel kernel size {0} (supported: 3, 7)")]
    UnsupportedKernel(usize),
    #[error("unknown semantic class `{0}`")]
    UnknownClass(String),
    #[error("image buffers do not match {width}x{height}")]
    ShapeMismatch { width: usize, height: usize },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(&'static str),
}

/// Row-major single-channel image with values nominally in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Pixel with edge replication for out-of-range coordinates.
    pub fn get_clamped(&self, col: isize, row: isize) -> f64 {
        let c = col.clamp(0, self.width as isize - 1) as usize;
        let r = row.clamp(0, self.height as isize - 1) as usize;
        self.data[r * self.width + c]
    }
}

/// Camera image: grayscale intensity plus a ground-truth class per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFrame {
    pub width: usize,
    pub height: usize,
    pub intensity: Vec<f64>,
    pub labels: Vec<ClassId>,
    /// Horizontal field of view, degrees.
    pub hfov_deg: f64,
}

impl LabeledFrame {
    pub fn new(width: usize, height: usize, hfov_deg: f64) -> Self {
        Self {
            width,
            height,
            intensity: vec![0.0; width * height],
            labels: vec![ClassId::BACKGROUND; width * height],
            hfov_deg,
        }
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        let n = self.width * self.height;
        if self.intensity.len() != n || self.labels.len() != n {
            return Err(FrameError::ShapeMismatch {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    pub fn intensity_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.intensity.clone(),
        }
    }

    pub fn set(&mut self, col: usize, row: usize, intensity: f64, label: ClassId) {
        let i = row * self.width + col;
        self.intensity[i] = intensity;
        self.labels[i] = label;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_round_trip() {
        for c in ClassId::ALL {
            assert_eq!(c.name().parse::<ClassId>().unwrap(), c);
        }
        assert!("lamppost".parse::<ClassId>().is_err());
    }

    #[test]
    fn class_serde_uses_names() {
        let v: Vec<ClassId> = serde_json::from_str(r#"["bicycle","goal"]"#).unwrap();
        assert_eq!(v, vec![ClassId::BICYCLE, ClassId::GOAL]);
        assert_eq!(
            serde_json::to_string(&ClassId::PEDESTRIAN).unwrap(),
            r#""pedestrian""#
        );
    }
}
