//! Rabi spectroscopy scans and pulse power spectra.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::envelope::PulseEnvelope;
use super::hamiltonian::EffectiveHamiltonian;
use super::propagate::{basis_state, final_state, PropagationSettings};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyPoint {
    /// Raman beat frequency, rad/s.
    pub omega_r: f64,
    /// Target population at the end of the pulse.
    pub population: f64,
}

/// Propagate `initial` for `duration` under `envelope` at every beat
/// frequency of `scan` and record the final `target` population. Points are
/// computed in parallel and returned in scan order.
pub fn rabi_spectroscopy(
    build: &(dyn Fn(f64) -> Result<EffectiveHamiltonian> + Sync),
    initial: usize,
    target: usize,
    scan: &[f64],
    envelope: &PulseEnvelope,
    settings: &PropagationSettings,
) -> Result<Vec<SpectroscopyPoint>> {
    scan.par_iter()
        .map(|&w| {
            let h = build(w)?;
            if initial >= h.dim || target >= h.dim {
                return Err(Error::invalid("level index out of range"));
            }
            let psi = final_state(&h, &basis_state(h.dim, initial), envelope.duration, envelope, settings)?;
            Ok(SpectroscopyPoint {
                omega_r: w,
                population: psi[target].norm_sqr(),
            })
        })
        .collect()
}

/// Periodogram of `a(t) cos(carrier·t)` sampled at `sample_rate` (Hz), as
/// (offset from the carrier in Hz, power in dB relative to the peak).
/// Positive frequencies only.
pub fn pulse_psd(envelope: &PulseEnvelope, carrier: f64, sample_rate: f64) -> Result<Vec<(f64, f64)>> {
    let carrier_hz = carrier / TAU;
    if !(envelope.duration > 0.0) {
        return Err(Error::invalid("pulse duration must be positive"));
    }
    if !(sample_rate > 4.0 * carrier_hz) {
        return Err(Error::invalid(format!(
            "sample rate {sample_rate:.4e} Hz must exceed four times the carrier {carrier_hz:.4e} Hz"
        )));
    }
    let n = (envelope.duration * sample_rate).ceil() as usize + 1;
    let m = (8 * n).next_power_of_two();
    let dt = 1.0 / sample_rate;
    let mut buf: Vec<C64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            C64::from(envelope.amplitude(t) * (carrier * t).cos())
        })
        .collect();
    buf.resize(m, C64::from(0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let power: Vec<f64> = buf[..m / 2].iter().map(|z| z.norm_sqr()).collect();
    let peak = power.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::invalid("pulse has no power"));
    }
    let df = sample_rate / m as f64;
    Ok(power
        .iter()
        .enumerate()
        .map(|(k, &p)| (k as f64 * df - carrier_hz, 10.0 * (p / peak).max(1e-30).log10()))
        .collect())
}

pub fn psd_to_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("offset_hz,psd_db\n");
    for (f, p) in points {
        s.push_str(&format!("{f:.6e},{p:.6}\n"));
    }
    s
}
