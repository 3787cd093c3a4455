//! Per-pixel phosphene fading and persistence.
//!
//! Two coupled leaky integrators run at every percept pixel:
//!
//! ```text
//! dn/dt = -tau_n * n + b_I
//! db/dt = -tau_b * b - alpha * n + b_I
//! ```
//!
//! `n` is neural desensitization and `b` the perceived brightness. The
//! coefficients are applied as rates (1/s). With `literal = false` they are
//! read as time constants instead (`dn/dt = (-n + b_I) / tau_n`, same for `b`).
//!
//! Integration is forward Euler. Each frame of length `dt` is split into
//! `substeps` equal Euler steps; `b` is rectified at zero after every step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retina::PerceptFrame;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalParams {
    pub tau_n: f64,
    pub tau_b: f64,
    pub alpha: f64,
    /// Frame period, seconds.
    pub dt: f64,
    /// Euler steps per frame.
    pub substeps: u32,
    /// Apply `tau_n`/`tau_b` as rates (true) or as time constants (false).
    pub literal: bool,
}

impl Default for TemporalParams {
    fn default() -> Self {
        Self {
            tau_n: 0.2,
            tau_b: 5.0,
            alpha: 0.2,
            dt: 1.0 / 90.0,
            substeps: 4,
            literal: true,
        }
    }
}

impl TemporalParams {
    /// Decay rates `(k_n, k_b)` and input gains `(g_n, g_b)` of the chosen
    /// reading of the equations.
    fn coefficients(&self) -> ((f64, f64), (f64, f64)) {
        if self.literal {
            ((self.tau_n, self.tau_b), (1.0, 1.0))
        } else {
            (
                (1.0 / self.tau_n, 1.0 / self.tau_b),
                (1.0 / self.tau_n, 1.0 / self.tau_b),
            )
        }
    }

    /// Length of one Euler step.
    pub fn step(&self) -> f64 {
        self.dt / self.substeps as f64
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(finite_nonneg(self.tau_n) && finite_nonneg(self.tau_b) && finite_nonneg(self.alpha)) {
            return Err(TemporalError::InvalidParams(
                "tau_n, tau_b and alpha must be non-negative",
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(TemporalError::InvalidParams("dt must be positive"));
        }
        if self.substeps == 0 {
            return Err(TemporalError::InvalidParams("substeps must be at least 1"));
        }
        if !self.literal && (self.tau_n == 0.0 || self.tau_b == 0.0) {
            return Err(TemporalError::InvalidParams(
                "time-constant reading needs tau_n and tau_b > 0",
            ));
        }
        let ((k_n, k_b), _) = self.coefficients();
        let h = self.step();
        if k_n * h >= 1.0 || k_b * h >= 1.0 {
            return Err(TemporalError::Unstable {
                rate: k_n.max(k_b),
                step: h,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TemporalError {
    #[error("invalid temporal parameters: {0}")]
    InvalidParams(&'static str),
    #[error("forward Euler unstable: rate {rate} * step {step} >= 1")]
    Unstable { rate: f64, step: f64 },
    #[error("input has {got} pixels, state has {expected}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Desensitization `n` and brightness `b` for every percept pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalState {
    pub width: usize,
    pub height: usize,
    pub n: Vec<f64>,
    pub b: Vec<f64>,
}

impl TemporalState {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            n: vec![0.0; width * height],
            b: vec![0.0; width * height],
        }
    }

    pub fn reset(&mut self) {
        self.n.fill(0.0);
        self.b.fill(0.0);
    }

    /// Current brightness as a percept frame.
    pub fn brightness(&self, timestamp: f64) -> PerceptFrame {
        PerceptFrame {
            width: self.width,
            height: self.height,
            data: self.b.clone(),
            timestamp,
        }
    }
}

/// Advances every pixel by one frame of instantaneous brightness `input`.
pub fn step_temporal(
    state: &mut TemporalState,
    input: &PerceptFrame,
    params: &TemporalParams,
) -> Result<(), TemporalError> {
    step_values(state, &input.data, params)
}

/// [`step_temporal`] on a raw brightness slice.
pub fn step_values(
    state: &mut TemporalState,
    input: &[f64],
    params: &TemporalParams,
) -> Result<(), TemporalError> {
    if input.len() != state.n.len() {
        return Err(TemporalError::ShapeMismatch {
            expected: state.n.len(),
            got: input.len(),
        });
    }
    let ((k_n, k_b), (g_n, g_b)) = params.coefficients();
    let h = params.step();
    let alpha = params.alpha;
    for ((n, b), &u) in state.n.iter_mut().zip(state.b.iter_mut()).zip(input) {
        let (mut n1, mut b1) = (*n, *b);
        for _ in 0..params.substeps {
            let dn = -k_n * n1 + g_n * u;
            let db = -k_b * b1 + g_b * (u - alpha * n1);
            n1 += h * dn;
            b1 = (b1 + h * db).max(0.0);
        }
        *n = n1;
        *b = b1;
    }
    Ok(())
}
