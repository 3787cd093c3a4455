use rand::Rng;
use serde::{Deserialize, Serialize};

/// Seconds the target rests at each corner.
pub const DOT_DWELL_S: f64 = 1.5;
/// Target radius, degrees (about 2.4 deg across).
pub const DOT_RADIUS_DEG: f64 = 1.2;

const TRAVEL_MEAN_S: f64 = 2.5;
const TRAVEL_JITTER_S: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    /// Target stationary.
    Fixation,
    /// Target moving between corners.
    Pursuit,
}

/// One piece of the target path, active on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotSegment {
    pub start: f64,
    pub end: f64,
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub kind: SegmentKind,
}

/// Fixation target that rests at a corner, glides to another corner, rests
/// again, and so on. Corners sit halfway between the screen center and its
/// edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotTrajectory {
    pub segments: Vec<DotSegment>,
    pub radius_deg: f64,
}

impl DotTrajectory {
    /// Random trajectory with `moves` corner-to-corner transitions on a screen
    /// spanning `+-screen_half_deg`.
    pub fn generate<R: Rng>(rng: &mut R, moves: usize, screen_half_deg: f64) -> Self {
        let e = screen_half_deg / 2.0;
        let corners = [(-e, e), (e, e), (e, -e), (-e, -e)];
        let mut at = rng.random_range(0..4);
        let mut t = 0.0;
        let mut segments = Vec::with_capacity(2 * moves + 1);
        let dwell = |t: f64, p| DotSegment {
            start: t,
            end: t + DOT_DWELL_S,
            from: p,
            to: p,
            kind: SegmentKind::Fixation,
        };
        segments.push(dwell(t, corners[at]));
        t += DOT_DWELL_S;
        for _ in 0..moves {
            let next = (at + rng.random_range(1..4)) % 4;
            let travel = TRAVEL_MEAN_S + rng.random_range(-TRAVEL_JITTER_S..=TRAVEL_JITTER_S);
            segments.push(DotSegment {
                start: t,
                end: t + travel,
                from: corners[at],
                to: corners[next],
                kind: SegmentKind::Pursuit,
            });
            t += travel;
            segments.push(dwell(t, corners[next]));
            t += DOT_DWELL_S;
            at = next;
        }
        Self {
            segments,
            radius_deg: DOT_RADIUS_DEG,
        }
    }

    pub fn start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.start)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn segment_at(&self, t: f64) -> Option<&DotSegment> {
        let i = self.segments.partition_point(|s| s.end <= t);
        self.segments.get(i).filter(|s| s.start <= t)
    }

    /// Target center at time `t`, if the trajectory covers `t`.
    pub fn position(&self, t: f64) -> Option<(f64, f64)> {
        self.segment_at(t).map(|s| {
            let u = ((t - s.start) / (s.end - s.start)).clamp(0.0, 1.0);
            (
                s.from.0 + u * (s.to.0 - s.from.0),
                s.from.1 + u * (s.to.1 - s.from.1),
            )
        })
    }

    pub fn shifted(&self, dt: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| DotSegment {
                start: s.start + dt,
                end: s.end + dt,
                ..*s
            })
            .collect();
        Self {
            segments,
            radius_deg: self.radius_deg,
        }
    }
}
