//! Shared machinery of the free-boundary trial iterations.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::ring::{RingField, Side};

/// Damp angular mode `n` of a periodic sequence by `1/(1 + strength·n)`.
pub(crate) fn smooth(values: &[f64], strength: f64) -> Vec<f64> {
    let m = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let n = i.min(m - i) as f64;
        *c /= 1.0 + strength * n;
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.re / m as f64).collect()
}

/// `max_j |g_j − τ| / τ`.
pub(crate) fn fp_residual(gradient: &[f64], tau: f64) -> f64 {
    gradient.iter().fold(0.0f64, |a, g| a.max((g - tau).abs() / tau))
}

/// Shift the free level of `field` to `new_free` and spread the change
/// linearly in `t`, keeping the fixed level in place. Used as a warm start
/// after each boundary update.
pub(crate) fn reshape_field(field: &RingField, side: Side, new_free: &[f64]) -> RingField {
    let l = field.levels();
    let free_k = match side {
        Side::Outer => 0,
        Side::Inner => l,
    };
    let delta: Vec<f64> = field
        .level_values(free_k)
        .iter()
        .zip(new_free)
        .map(|(old, new)| new - old)
        .collect();
    let mut out = field.clone();
    for k in 0..=l {
        let t = field.t(k);
        let w = match side {
            Side::Outer => 1.0 - t,
            Side::Inner => t,
        };
        for (h, d) in out.level_values_mut(k).iter_mut().zip(&delta) {
            *h += w * d;
        }
    }
    out
}

/// Step-size control with patience: the step is halved when the residual
/// grows and never drops below `floor`.
#[derive(Debug, Clone)]
pub(crate) struct StepControl {
    pub step: f64,
    pub floor: f64,
    pub best: f64,
    pub since_best: usize,
    last: f64,
}

impl StepControl {
    pub fn new(step: f64, floor: f64) -> Self {
        StepControl {
            step,
            floor,
            best: f64::INFINITY,
            since_best: 0,
            last: f64::INFINITY,
        }
    }

    /// Record a residual; `monotone` marks phases where growth of the
    /// residual is expected and must not damp the step.
    pub fn record(&mut self, residual: f64, monotone: bool) {
        if residual > self.last && !monotone {
            self.step = (0.5 * self.step).max(self.floor);
        }
        self.last = residual;
        if residual < self.best {
            self.best = residual;
            self.since_best = 0;
        } else if !monotone {
            self.since_best += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_keeps_constants_and_damps_modes() {
        let m = 64;
        let c = smooth(&vec![0.3; m], 1.0);
        assert!(c.iter().all(|v| (v - 0.3).abs() < 1e-14));
        let wave: Vec<f64> = (0..m).map(|j| (5.0 * 2.0 * std::f64::consts::PI * j as f64 / m as f64).cos()).collect();
        let s = smooth(&wave, 1.0);
        for (a, b) in s.iter().zip(&wave) {
            assert!((a - b / 6.0).abs() < 1e-13);
        }
    }

    #[test]
    fn step_control_halves_and_tracks_patience() {
        let mut sc = StepControl::new(0.5, 1e-3);
        sc.record(1.0, false);
        sc.record(0.5, false);
        assert_eq!(sc.step, 0.5);
        sc.record(0.7, false);
        assert_eq!(sc.step, 0.25);
        assert_eq!(sc.since_best, 1);
        sc.record(0.8, true);
        assert_eq!(sc.step, 0.25);
        for _ in 0..20 {
            sc.record(1.0, false);
        }
        // Only the first rise from 0.8 to 1.0 halves the step.
        assert_eq!(sc.step, 0.125);
        assert!(sc.since_best > 15);
    }
}
