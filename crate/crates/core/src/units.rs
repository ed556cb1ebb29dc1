//! Physical constants (CODATA 2018) and unit helpers.

use std::f64::consts::TAU;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Atomic unit of electric dipole moment, e·a0, in C·m.
pub const ATOMIC_DIPOLE: f64 = 8.478_353_625_5e-30;

/// Hz to rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TAU * f
}

/// rad/s to Hz.
#[inline]
pub fn to_hz(w: f64) -> f64 {
    w / TAU
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    hz(f * 1e6)
}

#[inline]
pub fn thz(f: f64) -> f64 {
    hz(f * 1e12)
}
