//! Pulse field-amplitude envelopes.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EnvelopeShape {
    Square,
    /// `sin²` rise over each ramp.
    SinSquared,
    /// `sin⁴` rise over each ramp.
    SinQuartic,
    /// Linear interpolation through `(t, amplitude)` points.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: EnvelopeShape,
    pub duration: f64,
    /// Length of each edge ramp as a fraction of `duration`.
    pub ramp_fraction: f64,
    /// Beams the shape applies to; other beams get a square pulse of the
    /// same duration. Empty means every beam.
    pub applies_to: Vec<bool>,
}

/// Default edge ramp as a fraction of the total pulse length.
pub const DEFAULT_RAMP_FRACTION: f64 = 0.125;
/// Total ramped pulse length relative to the square π time.
pub const RAMPED_LENGTH_FACTOR: f64 = 1.25;

impl PulseEnvelope {
    pub fn square(duration: f64) -> Result<Self> {
        Self::new(EnvelopeShape::Square, duration, 0.0, Vec::new())
    }

    pub fn new(shape: EnvelopeShape, duration: f64, ramp_fraction: f64, applies_to: Vec<bool>) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::invalid(format!("pulse duration must be positive, got {duration}")));
        }
        if !(0.0..=0.5).contains(&ramp_fraction) {
            return Err(Error::invalid(format!("ramp fraction must lie in [0, 0.5], got {ramp_fraction}")));
        }
        if let EnvelopeShape::Tabulated(points) = &shape {
            if points.len() < 2 {
                return Err(Error::invalid("tabulated envelope needs at least two points"));
            }
            if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::invalid("tabulated envelope times must increase strictly"));
            }
            if points.iter().any(|&(t, a)| !(0.0..=1.0).contains(&a) || t < 0.0 || t > duration) {
                return Err(Error::invalid("tabulated envelope points must lie in [0, duration] × [0, 1]"));
            }
        }
        Ok(PulseEnvelope {
            shape,
            duration,
            ramp_fraction,
            applies_to,
        })
    }

    /// Ramped pulse on the selected beams with the default edge fraction.
    pub fn ramped(shape: EnvelopeShape, duration: f64, applies_to: Vec<bool>) -> Result<Self> {
        Self::new(shape, duration, DEFAULT_RAMP_FRACTION, applies_to)
    }

    fn ramp_time(&self) -> f64 {
        self.ramp_fraction * self.duration
    }

    /// Shape amplitude at `t`, in [0, 1]; zero outside [0, duration].
    pub fn amplitude(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        let edge = |p: u32| {
            let tr = self.ramp_time();
            if tr <= 0.0 {
                return 1.0;
            }
            let x = t.min(self.duration - t);
            if x >= tr {
                1.0
            } else {
                (FRAC_PI_2 * x / tr).sin().powi(p as i32)
            }
        };
        match &self.shape {
            EnvelopeShape::Square => 1.0,
            EnvelopeShape::SinSquared => edge(2),
            EnvelopeShape::SinQuartic => edge(4),
            EnvelopeShape::Tabulated(points) => {
                if t <= points[0].0 {
                    return points[0].1;
                }
                for w in points.windows(2) {
                    if t <= w[1].0 {
                        let f = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                points.last().unwrap().1
            }
        }
    }

    pub fn applies(&self, beam: usize) -> bool {
        self.applies_to.is_empty() || self.applies_to.get(beam).copied().unwrap_or(false)
    }

    pub fn beam_amplitude(&self, beam: usize, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            0.0
        } else if self.applies(beam) {
            self.amplitude(t)
        } else {
            1.0
        }
    }

    pub fn beam_amplitudes(&self, n_beams: usize, t: f64) -> Vec<f64> {
        (0..n_beams).map(|b| self.beam_amplitude(b, t)).collect()
    }

    /// Breakpoints splitting [0, duration] into pieces on which the envelope
    /// is either constant (`true`) or varying (`false`).
    pub fn segments(&self) -> Vec<(f64, f64, bool)> {
        let d = self.duration;
        let tr = self.ramp_time();
        match &self.shape {
            EnvelopeShape::Square => vec![(0.0, d, true)],
            EnvelopeShape::SinSquared | EnvelopeShape::SinQuartic if tr <= 0.0 => vec![(0.0, d, true)],
            EnvelopeShape::SinSquared | EnvelopeShape::SinQuartic => {
                let mut s = vec![(0.0, tr, false)];
                if d - 2.0 * tr > 0.0 {
                    s.push((tr, d - tr, true));
                }
                s.push((d - tr, d, false));
                s
            }
            EnvelopeShape::Tabulated(_) => vec![(0.0, d, false)],
        }
    }

    /// Time integral of `amplitude(t)^p` over the pulse.
    pub fn area(&self, p: i32) -> f64 {
        let n = 20_000;
        let h = self.duration / n as f64;
        // Simpson's rule
        let f = |k: usize| self.amplitude(k as f64 * h).powi(p);
        let mut s = f(0) + f(n);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
        }
        s * h / 3.0
    }
}
