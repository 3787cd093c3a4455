//! Plain-text gaze traces: one `t yaw pitch` sample per line, seconds and
//! degrees. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{DotTrajectory, GazeError, GazeSample};

pub fn parse_trace(text: &str) -> Result<Vec<GazeSample>, GazeError> {
    let mut out: Vec<GazeSample> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GazeError::Parse {
                line: i + 1,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 3];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|e| GazeError::Parse {
                line: i + 1,
                reason: format!("`{f}`: {e}"),
            })?;
        }
        if let Some(prev) = out.last() {
            if !(v[0] > prev.t) {
                return Err(GazeError::NonMonotonic { index: out.len() });
            }
        }
        out.push(GazeSample::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<GazeSample>, GazeError> {
    parse_trace(&std::fs::read_to_string(path)?)
}

pub fn write_trace(samples: &[GazeSample]) -> String {
    let mut s = String::from("# t yaw pitch\n");
    for g in samples {
        let _ = writeln!(s, "{} {} {}", g.t, g.yaw, g.pitch);
    }
    s
}

/// Simulated tracker output following `dot` at `rate_hz`, with independent
/// Gaussian noise of `noise_sd` degrees on each axis.
pub fn synthesize_trace<R: Rng>(
    dot: &DotTrajectory,
    rate_hz: f64,
    noise_sd: f64,
    rng: &mut R,
) -> Vec<GazeSample> {
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("finite sd");
    let n = ((dot.end() - dot.start()) * rate_hz).floor() as usize;
    (0..n)
        .filter_map(|k| {
            let t = dot.start() + k as f64 / rate_hz;
            dot.position(t)
                .map(|(x, y)| GazeSample::new(t, x + noise.sample(rng), y + noise.sample(rng)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let samples = vec![
            GazeSample::new(0.0, 1.25, -0.5),
            GazeSample::new(0.011, 1.0 / 3.0, 2.0),
        ];
        assert_eq!(parse_trace(&write_trace(&samples)).unwrap(), samples);
    }

    #[test]
    fn reports_bad_lines() {
        assert!(matches!(
            parse_trace("0 1\n"),
            Err(GazeError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("# hdr\n0 1 x\n"),
            Err(GazeError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_trace("1 0 0\n0.5 0 0\n"),
            Err(GazeError::NonMonotonic { index: 1 })
        ));
    }

    #[test]
    fn synthetic_trace_tracks_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dot = DotTrajectory::generate(&mut rng, 4, 20.0);
        let trace = synthesize_trace(&dot, 90.0, 0.0, &mut rng);
        assert!(trace.len() > 90 * 10);
        for g in &trace {
            assert_eq!(dot.position(g.t), Some((g.yaw, g.pitch)));
        }
    }
}
