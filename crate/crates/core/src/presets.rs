//! Beam pairs used throughout: the calibrated configuration (fitted waists
//! and polarization fractions) and a nominal one (ideal polarizations,
//! 30 µm waists).

use crate::error::Result;
use crate::manifold::{Beam, BeamLabel, Polarization, CA40_DETUNING};

pub const CALIBRATED_PAR_WAIST: f64 = 30.60e-6;
pub const CALIBRATED_PERP_WAIST: f64 = 32.16e-6;
/// Parallel-beam intensity fractions (σ−, π, σ+).
pub const CALIBRATED_PAR_FRACTIONS: [f64; 3] = [0.872, 0.0, 0.128];
/// Perpendicular-beam intensity fractions (σ−, π, σ+).
pub const CALIBRATED_PERP_FRACTIONS: [f64; 3] = [0.3355, 0.329, 0.3355];
pub const NOMINAL_WAIST: f64 = 30e-6;
pub const MAX_PAR_POWER: f64 = 0.195;
pub const MAX_PERP_POWER: f64 = 0.180;

pub fn calibrated_parallel(power: f64) -> Result<Beam> {
    let [m, p, s] = CALIBRATED_PAR_FRACTIONS;
    Beam::new(
        BeamLabel::Parallel,
        CA40_DETUNING,
        power,
        CALIBRATED_PAR_WAIST,
        Polarization::from_fractions(m, p, s)?,
        0.0,
    )
}

pub fn calibrated_perpendicular(power: f64, omega_r: f64) -> Result<Beam> {
    let [m, p, s] = CALIBRATED_PERP_FRACTIONS;
    Beam::new(
        BeamLabel::Perpendicular,
        CA40_DETUNING,
        power,
        CALIBRATED_PERP_WAIST,
        Polarization::transverse(m, p, s)?,
        omega_r,
    )
}

/// Calibrated parallel and perpendicular beams.
pub fn calibrated_beams(par_power: f64, perp_power: f64, omega_r: f64) -> Result<Vec<Beam>> {
    Ok(vec![calibrated_parallel(par_power)?, calibrated_perpendicular(perp_power, omega_r)?])
}

/// Pure σ− parallel beam and equal-thirds perpendicular beam.
pub fn nominal_beams(par_power: f64, perp_power: f64, omega_r: f64) -> Result<Vec<Beam>> {
    Ok(vec![
        Beam::new(
            BeamLabel::Parallel,
            CA40_DETUNING,
            par_power,
            NOMINAL_WAIST,
            Polarization::sigma_minus(),
            0.0,
        )?,
        Beam::new(
            BeamLabel::Perpendicular,
            CA40_DETUNING,
            perp_power,
            NOMINAL_WAIST,
            Polarization::transverse(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)?,
            omega_r,
        )?,
    ])
}
