use serde::{Deserialize, Serialize};

use super::{sobel_magnitude, ClassId, FrameError, GrayImage, LabeledFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Control,
    SemanticEdges,
    SemanticRaster,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [Self::Control, Self::SemanticEdges, Self::SemanticRaster];

    pub fn name(self) -> &'static str {
        match self {
            Self::Control => "control",
            Self::SemanticEdges => "semantic_edges",
            Self::SemanticRaster => "semantic_raster",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(FrameError::InvalidStrategy("unknown strategy kind"))
    }
}

/// Scene simplification settings.
///
/// `classes` lists class groups in priority order. The raster shows one group
/// per dwell slot; a group may hold several classes that belong together
/// (structures and the subway entrances, say).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub classes: Vec<Vec<ClassId>>,
    /// Seconds each group stays on.
    pub dwell: f64,
    pub control_kernel: usize,
    pub semantic_kernel: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: StrategyKind::Control,
            classes: vec![
                vec![ClassId::BICYCLE],
                vec![ClassId::PEDESTRIAN],
                vec![ClassId::STRUCTURE, ClassId::GOAL],
            ],
            dwell: 0.2,
            control_kernel: 3,
            semantic_kernel: 7,
        }
    }
}

impl StrategyConfig {
    pub fn with_kind(kind: StrategyKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !(self.dwell > 0.0) {
            return Err(FrameError::InvalidStrategy("dwell must be positive"));
        }
        if self.kind != StrategyKind::Control
            && (self.classes.is_empty() || self.classes.iter().any(Vec::is_empty))
        {
            return Err(FrameError::InvalidStrategy(
                "semantic strategies need at least one non-empty class group",
            ));
        }
        for k in [self.control_kernel, self.semantic_kernel] {
            if k % 2 == 0 {
                return Err(FrameError::InvalidStrategy("kernel sizes must be odd"));
            }
            if k != 3 && k != 7 {
                return Err(FrameError::UnsupportedKernel(k));
            }
        }
        Ok(())
    }
}

/// Raster slot index at time `t`: `floor(t / dwell) mod groups`.
///
/// A tiny tolerance keeps slot boundaries on exact frame multiples (18 frames
/// of 1/90 s make 0.2 s) from slipping back a slot through rounding.
pub fn active_group_index(t: f64, dwell: f64, groups: usize) -> usize {
    let slot = (t.max(0.0) / dwell + 1e-9).floor() as u64;
    (slot % groups as u64) as usize
}

/// Intensity where the label is one of `classes`, zero elsewhere.
pub fn semantic_mask(frame: &LabeledFrame, classes: &[ClassId]) -> GrayImage {
    let data = frame
        .intensity
        .iter()
        .zip(&frame.labels)
        .map(|(v, l)| if classes.contains(l) { *v } else { 0.0 })
        .collect();
    GrayImage {
        width: frame.width,
        height: frame.height,
        data,
    }
}

/// Processed edge intensity for one frame at time `t`.
pub fn apply_strategy(
    frame: &LabeledFrame,
    cfg: &StrategyConfig,
    t: f64,
) -> Result<GrayImage, FrameError> {
    match cfg.kind {
        StrategyKind::Control => sobel_magnitude(&frame.intensity_image(), cfg.control_kernel),
        StrategyKind::SemanticEdges => {
            let mut out = GrayImage::new(frame.width, frame.height);
            for group in &cfg.classes {
                let mask = semantic_mask(frame, group);
                // A group absent from view contributes no edges.
                if mask.data.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let edges = sobel_magnitude(&mask, cfg.semantic_kernel)?;
                for (o, e) in out.data.iter_mut().zip(&edges.data) {
                    *o = o.max(*e);
                }
            }
            Ok(out)
        }
        StrategyKind::SemanticRaster => {
            if cfg.classes.is_empty() {
                return Err(FrameError::InvalidStrategy("no class groups to raster"));
            }
            let group = &cfg.classes[active_group_index(t, cfg.dwell, cfg.classes.len())];
            sobel_magnitude(&semantic_mask(frame, group), cfg.semantic_kernel)
        }
    }
}
