use serde::{Deserialize, Serialize};

use super::{DotTrajectory, GazeError, GazeSample, SegmentKind};

/// Spacing of the error measurements, seconds.
pub const RESAMPLE_PERIOD_S: f64 = 0.1;

// Sample times within this of a segment boundary count as the later segment.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    /// Mean angular error, degrees.
    pub mean: f64,
    /// Sample standard deviation (n - 1), degrees; 0 for fewer than 2 samples.
    pub sd: f64,
}

impl ErrorSummary {
    fn of(errors: &[f64]) -> Self {
        let n = errors.len();
        if n == 0 {
            return Self::default();
        }
        let mean = errors.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count: n, mean, sd }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GazeAccuracyStats {
    pub overall: ErrorSummary,
    pub fixation: ErrorSummary,
    pub pursuit: ErrorSummary,
    pub fraction_below_5: f64,
    pub fraction_below_3: f64,
}

/// Angular error between gaze and target every 0.1 s over the time both
/// cover, split by whether the target was resting or moving.
///
/// Gaze is linearly interpolated between trace samples. Error is the planar
/// distance in degrees, a small-angle stand-in for the great-circle distance.
pub fn gaze_accuracy_stats(
    samples: &[GazeSample],
    dot: &DotTrajectory,
) -> Result<GazeAccuracyStats, GazeError> {
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(GazeError::NonMonotonic { index: i + 1 });
        }
    }
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Err(GazeError::NoOverlap);
    };
    let start = first.t.max(dot.start());
    let end = last.t.min(dot.end());
    if !(end > start) {
        return Err(GazeError::NoOverlap);
    }

    let mut fixation = Vec::new();
    let mut pursuit = Vec::new();
    let mut cursor = 0;
    for k in 0.. {
        let t = start + k as f64 * RESAMPLE_PERIOD_S;
        if t >= end - BOUNDARY_EPS {
            break;
        }
        while cursor + 1 < samples.len() && samples[cursor + 1].t <= t {
            cursor += 1;
        }
        let (yaw, pitch) = interpolate(samples, cursor, t);
        let Some(seg) = dot.segment_at(t + BOUNDARY_EPS) else {
            continue;
        };
        let u = ((t - seg.start) / (seg.end - seg.start)).clamp(0.0, 1.0);
        let target = (
            seg.from.0 + u * (seg.to.0 - seg.from.0),
            seg.from.1 + u * (seg.to.1 - seg.from.1),
        );
        let err = (yaw - target.0).hypot(pitch - target.1);
        match seg.kind {
            SegmentKind::Fixation => fixation.push(err),
            SegmentKind::Pursuit => pursuit.push(err),
        }
    }

    let all: Vec<f64> = fixation.iter().chain(&pursuit).copied().collect();
    if all.is_empty() {
        return Err(GazeError::NoOverlap);
    }
    let frac = |limit: f64| all.iter().filter(|e| **e < limit).count() as f64 / all.len() as f64;
    Ok(GazeAccuracyStats {
        overall: ErrorSummary::of(&all),
        fixation: ErrorSummary::of(&fixation),
        pursuit: ErrorSummary::of(&pursuit),
        fraction_below_5: frac(5.0),
        fraction_below_3: frac(3.0),
    })
}

fn interpolate(samples: &[GazeSample], i: usize, t: f64) -> (f64, f64) {
    let a = samples[i];
    let Some(b) = samples.get(i + 1) else {
        return (a.yaw, a.pitch);
    };
    let u = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    (
        a.yaw + u * (b.yaw - a.yaw),
        a.pitch + u * (b.pitch - a.pitch),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze::{DotSegment, DOT_RADIUS_DEG};

    fn one_dwell(len: f64) -> DotTrajectory {
        DotTrajectory {
            segments: vec![DotSegment {
                start: 0.0,
                end: len,
                from: (5.0, 5.0),
                to: (5.0, 5.0),
                kind: SegmentKind::Fixation,
            }],
            radius_deg: DOT_RADIUS_DEG,
        }
    }

    #[test]
    fn perfect_tracking() {
        let dot = one_dwell(3.0);
        let trace: Vec<_> = (0..=300)
            .map(|i| GazeSample::new(i as f64 / 100.0, 5.0, 5.0))
            .collect();
        let s = gaze_accuracy_stats(&trace, &dot).unwrap();
        assert_eq!(s.overall.mean, 0.0);
        assert_eq!((s.fraction_below_5, s.fraction_below_3), (1.0, 1.0));
        assert_eq!(s.overall.count, 30);
        assert_eq!(s.pursuit.count, 0);
    }

    #[test]
    fn rejects_disjoint_and_unordered() {
        let dot = one_dwell(1.0);
        let late = [
            GazeSample::new(5.0, 0.0, 0.0),
            GazeSample::new(6.0, 0.0, 0.0),
        ];
        assert!(matches!(
            gaze_accuracy_stats(&late, &dot),
            Err(GazeError::NoOverlap)
        ));
        assert!(matches!(
            gaze_accuracy_stats(&[], &dot),
            Err(GazeError::NoOverlap)
        ));
        let bad = [
            GazeSample::new(0.5, 0.0, 0.0),
            GazeSample::new(0.5, 0.0, 0.0),
        ];
        assert!(matches!(
            gaze_accuracy_stats(&bad, &dot),
            Err(GazeError::NonMonotonic { index: 1 })
        ));
    }

    #[test]
    fn interpolates_between_samples() {
        let dot = one_dwell(1.0);
        // Gaze sweeps linearly from (5,5) to (5,9) over one second.
        let trace = [
            GazeSample::new(0.0, 5.0, 5.0),
            GazeSample::new(1.0, 5.0, 9.0),
        ];
        let s = gaze_accuracy_stats(&trace, &dot).unwrap();
        // Errors 0.0, 0.4, ..., 3.6 over ten samples.
        assert_eq!(s.overall.count, 10);
        assert!((s.overall.mean - 1.8).abs() < 1e-9);
        assert!((s.fraction_below_3 - 0.8).abs() < 1e-12);
    }
}
