//! Spontaneous Raman scattering from the far-detuned P manifold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Atom, Beam, CouplingSet};

/// Fraction of scattering events that leave the qudit manifold.
pub const DEFAULT_LEAVE_FRACTION: f64 = 0.94;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterModel {
    /// Total scattering rate out of each qudit level, 1/s.
    pub rates: Vec<f64>,
    pub leave_fraction: f64,
}

impl ScatterModel {
    pub fn new(rates: Vec<f64>, leave_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&leave_fraction) {
            return Err(Error::invalid(format!("leave fraction must lie in [0, 1], got {leave_fraction}")));
        }
        if rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::invalid("scattering rates must be non-negative"));
        }
        Ok(ScatterModel { rates, leave_fraction })
    }

    pub fn from_beams(atom: &Atom, beams: &[Beam]) -> Result<Self> {
        let rates = (0..atom.lower.dim())
            .map(|l| scattering_rate(atom, l, beams))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rates, DEFAULT_LEAVE_FRACTION)
    }

    pub fn pi_pulse_error(&self, initial: usize, target: usize, pi_time: f64) -> Result<ScatterError> {
        let (a, b) = (
            self.rates.get(initial).copied(),
            self.rates.get(target).copied(),
        );
        match (a, b) {
            (Some(a), Some(b)) => pi_pulse_scatter_error(a, b, pi_time, self.leave_fraction),
            _ => Err(Error::invalid("level index out of range")),
        }
    }
}

/// `Σ_beams Σ_e Γ_P |Ω_ie|²/(4Δ_ie²)` through the reference upper
/// manifold, 1/s.
pub fn scattering_rate(atom: &Atom, level: usize, beams: &[Beam]) -> Result<f64> {
    if level >= atom.lower.dim() {
        return Err(Error::invalid(format!("level {level} out of range")));
    }
    let upper = atom.upper(atom.reference)?;
    let gamma = upper
        .decay_rate()
        .ok_or_else(|| Error::invalid("reference upper manifold has no lifetime"))?;
    let couplings = CouplingSet::new(atom, beams, false)?;
    let mut rate = 0.0;
    for (b, beam) in beams.iter().enumerate() {
        let m = couplings
            .matrix(b, atom.reference)
            .ok_or_else(|| Error::invalid("reference coupling missing"))?;
        for e in 0..upper.dim() {
            let w = m.get(level, e).norm_sqr();
            if w > 0.0 {
                let d = atom.level_detuning(beam, upper, level, e);
                rate += gamma * w / (4.0 * d * d);
            }
        }
    }
    Ok(rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterError {
    /// Probability of any scattering event during the pulse.
    pub total: f64,
    /// Part that stays in the qudit manifold and cannot be flagged.
    pub non_erasure: f64,
}

/// `ε = (Γ_i + Γ_f) t_g / 2`, assuming equal time in both states.
pub fn pi_pulse_scatter_error(gamma_initial: f64, gamma_target: f64, pi_time: f64, leave_fraction: f64) -> Result<ScatterError> {
    if !(gamma_initial >= 0.0 && gamma_target >= 0.0 && pi_time >= 0.0) {
        return Err(Error::invalid("rates and pulse time must be non-negative"));
    }
    if !(0.0..=1.0).contains(&leave_fraction) {
        return Err(Error::invalid("leave fraction must lie in [0, 1]"));
    }
    let total = 0.5 * (gamma_initial + gamma_target) * pi_time;
    Ok(ScatterError {
        total,
        non_erasure: total * (1.0 - leave_fraction),
    })
}
