//! One-period propagators and quasienergy analysis of the periodically
//! driven qudit Hamiltonian.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::hamiltonian::EffectiveHamiltonian;
use super::propagate::{period_ladder, steps_per_period, PropagationSettings};
use crate::error::{Error, Result};
use crate::linalg::{unitary_eigen, unitary_log, CMat};
use crate::C64;

/// `U(T, 0)` at constant envelope `env`, with the period `T`.
pub fn period_propagator(h: &EffectiveHamiltonian, env: &[f64], settings: &PropagationSettings) -> Result<(CMat, f64)> {
    let base = h
        .base_frequency()?
        .ok_or_else(|| Error::invalid("Hamiltonian has no drive period"))?;
    let period = TAU / base;
    let n = steps_per_period(h, period, settings);
    let mut ladder = period_ladder(h, env, 0.0, period, n);
    Ok((ladder.pop().expect("ladder is never empty"), period))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetGap {
    /// Quasienergy splitting of the two Floquet states carrying the pair,
    /// rad/s. On resonance this is the effective Rabi frequency.
    pub gap: f64,
    /// Weight of each chosen Floquet state on {initial, target}.
    pub weights: [f64; 2],
    pub period: f64,
}

/// Quasienergy gap between the two Floquet states with the largest weight
/// on `initial` and `target`.
pub fn floquet_gap(
    h: &EffectiveHamiltonian,
    initial: usize,
    target: usize,
    settings: &PropagationSettings,
) -> Result<FloquetGap> {
    check_levels(h, initial, target)?;
    let (u, period) = period_propagator(h, &h.unit_envelope(), settings)?;
    let (values, vectors) = unitary_eigen(&u);
    let mut scored: Vec<(usize, f64)> = (0..values.len())
        .map(|k| {
            let c = vectors.column(k);
            (k, c[initial].norm_sqr() + c[target].norm_sqr())
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (a, b) = (scored[0], scored[1]);
    let mut d = values[a.0].arg() - values[b.0].arg();
    d = (d + PI).rem_euclid(TAU) - PI;
    Ok(FloquetGap {
        gap: d.abs() / period,
        weights: [a.1, b.1],
        period,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Raman beat frequency at which the gap is smallest, rad/s.
    pub omega_r: f64,
    /// Gap at that point (effective Rabi frequency), rad/s.
    pub rabi: f64,
    pub iterations: usize,
}

/// Locate the multi-photon resonance `initial → target` near `guess` by
/// minimizing the Floquet gap. `build` maps a Raman beat frequency to the
/// Hamiltonian. Near resonance the squared gap is a parabola in the beat
/// frequency, so three-point vertex steps converge quickly.
pub fn find_resonance(
    build: &dyn Fn(f64) -> Result<EffectiveHamiltonian>,
    initial: usize,
    target: usize,
    guess: f64,
    settings: &PropagationSettings,
) -> Result<Resonance> {
    let gap2 = |w: f64| -> Result<f64> {
        let g = floquet_gap(&build(w)?, initial, target, settings)?.gap;
        Ok(g * g)
    };
    let h0 = build(guess)?;
    let order = ((h0.static_diagonal[target] - h0.static_diagonal[initial]) / guess)
        .abs()
        .round()
        .max(1.0);
    let mut x = guess;
    let mut span = gap2(guess)?.sqrt() / order;
    if !(span > 0.0) {
        span = guess * 1e-6;
    }
    let tol = TAU * 1e-3;
    for it in 1..=40 {
        let (fm, f0, fp) = (gap2(x - span)?, gap2(x)?, gap2(x + span)?);
        let curv = fp + fm - 2.0 * f0;
        let step = if curv > 0.0 {
            (0.5 * span * (fm - fp) / curv).clamp(-4.0 * span, 4.0 * span)
        } else if fp < fm {
            2.0 * span
        } else {
            -2.0 * span
        };
        x += step;
        if step.abs() < tol {
            let g = gap2(x)?.max(0.0).sqrt();
            return Ok(Resonance {
                omega_r: x,
                rabi: g,
                iterations: it,
            });
        }
        if curv > 0.0 {
            span = (step.abs() * 2.0).clamp(tol, span);
        }
    }
    Err(Error::IterationFailed(format!(
        "resonance search for {initial} → {target} did not settle near {:.6e} rad/s",
        x
    )))
}

/// Effective (stroboscopic) Hamiltonian in the frame of the bare energies:
/// `H_F = i log(e^{iH₀T} U(T)) / T`, with the chosen envelope.
pub fn floquet_hamiltonian(h: &EffectiveHamiltonian, env: &[f64], settings: &PropagationSettings) -> Result<CMat> {
    let (u, period) = period_propagator(h, env, settings)?;
    let frame = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        h.dim,
        h.static_diagonal.iter().map(|&e| C64::from_polar(1.0, e * period)),
    ));
    Ok(unitary_log(&(frame * u)) / C64::from(period))
}

/// Rabi frequency `2|⟨target|H_F|initial⟩|` of a resonant coupling, rad/s.
pub fn two_photon_coupling(
    h: &EffectiveHamiltonian,
    initial: usize,
    target: usize,
    settings: &PropagationSettings,
) -> Result<f64> {
    check_levels(h, initial, target)?;
    let hf = floquet_hamiltonian(h, &h.unit_envelope(), settings)?;
    Ok(2.0 * hf[(target, initial)].norm())
}

fn check_levels(h: &EffectiveHamiltonian, initial: usize, target: usize) -> Result<()> {
    if initial >= h.dim || target >= h.dim || initial == target {
        return Err(Error::invalid(format!(
            "levels {initial} and {target} must be distinct and below {}",
            h.dim
        )));
    }
    Ok(())
}
