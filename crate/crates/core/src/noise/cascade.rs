//! Analytic bounds on intermediate-level population for resonant
//! four-photon transfer, from the three-level cascade result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Atom, Beam, BeamLabel, CouplingSet};
use crate::pathways::Splittings;

/// Cascade bound `a / (a + b + 4Δ²δ²)`, where `a` and `b` are products of
/// squared single-photon Rabi frequencies of the first and second Raman
/// legs (rad⁴/s⁴), `Δ` the optical detuning and `δ` the detuning of the
/// intermediate level (both rad/s). Equal legs on resonance give 1/2.
pub fn cascade_population_bound(first: f64, second: f64, optical_detuning: f64, detuning: f64) -> f64 {
    let denom = first + second + 4.0 * optical_detuning.powi(2) * detuning.powi(2);
    if denom == 0.0 {
        0.0
    } else {
        first / denom
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeBounds {
    /// Bound on level 1 (second-highest sublevel).
    pub first_intermediate: f64,
    /// Bound on level 2.
    pub second_intermediate: f64,
}

/// Bounds on levels 1 and 2 during resonant `0 → 3` four-photon transfer.
/// Each Raman leg absorbs from the parallel beam and emits into the
/// perpendicular one through the reference upper manifold.
pub fn cascade_bounds(atom: &Atom, beams: &[Beam], splittings: &Splittings, omega_r: f64) -> Result<CascadeBounds> {
    let find = |label: BeamLabel, fallback: usize| {
        beams.iter().position(|b| b.label == label).unwrap_or(fallback)
    };
    let (par, perp) = (find(BeamLabel::Parallel, 0), find(BeamLabel::Perpendicular, 1));
    if beams.len() < 2 || par == perp {
        return Err(Error::invalid("cascade bounds need a parallel and a perpendicular beam"));
    }
    if atom.lower.dim() < 4 {
        return Err(Error::invalid("qudit manifold has fewer than four levels"));
    }
    let couplings = CouplingSet::new(atom, beams, false)?;
    let upper = atom.upper(atom.reference)?;
    let w = |beam: usize, lower: usize, up: usize| -> f64 {
        couplings.omega(beam, atom.reference, lower, up).norm_sqr()
    };
    let big_delta = atom.manifold_detuning(&beams[par], upper);
    let w01 = splittings.omega(0, 1);
    let w12 = splittings.omega(1, 2);
    let first = cascade_population_bound(
        w(par, 0, 0) * w(perp, 1, 0),
        w(par, 1, 1) * w(perp, 3, 1),
        big_delta,
        omega_r - w01,
    );
    let second = cascade_population_bound(
        w(par, 0, 0) * w(perp, 2, 0),
        w(par, 2, 2) * w(perp, 3, 2),
        big_delta,
        w01 + w12 - omega_r,
    );
    Ok(CascadeBounds {
        first_intermediate: first,
        second_intermediate: second,
    })
}
