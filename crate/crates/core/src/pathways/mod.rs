//! Resonant multi-photon pathways through the level graph and the effective
//! Rabi frequencies they generate.
//!
//! A pathway is a sequence of photon pairs. Each pair absorbs a photon from
//! one beam, reaching a sublevel of an upper manifold, and emits one into a
//! (possibly different) beam, returning to the qudit manifold. Beam drive
//! frequencies are integer multiples ("harmonics") of the smallest non-zero
//! frequency offset, so resonance is checked symbolically.

mod closed_form;
mod expression;

use serde::{Deserialize, Serialize};

pub use closed_form::{
    compare_six_photon, four_photon_rabi, six_photon_rabi, six_photon_terms, SixPhotonComparison, SixPhotonTermReport,
    SIX_PHOTON_CLOSED_FORM_PATHS, SIX_PHOTON_CLOSED_FORM_UPPERS,
};
pub use expression::{
    analytic_rabi, f_state_correction, generate_rabi_expression, DeltaMap, Denominator, Factor, RabiExpression, Term,
};

use crate::error::{Error, Result};
use crate::manifold::{Atom, Beam, CouplingSet, ManifoldTag};
use crate::C64;

/// Absolute floor on intermediate denominators, rad/s (2π × 1 kHz).
pub const DEGENERACY_TOLERANCE: f64 = 2.0 * std::f64::consts::PI * 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Photon {
    Absorb,
    Emit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UpperRef {
    pub manifold: ManifoldTag,
    pub index: usize,
}

/// One absorb/emit pair: `from` →(absorb) `upper` →(emit) `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotonPair {
    pub from: usize,
    pub upper: UpperRef,
    pub absorb: usize,
    pub emit: usize,
    pub to: usize,
}

/// One photon event, for display.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    /// Lower-manifold level the photon connects to the upper level.
    pub lower: usize,
    pub upper: UpperRef,
    pub beam: usize,
    pub photon: Photon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pathway {
    pub initial: usize,
    pub pairs: Vec<PhotonPair>,
    /// Accumulated photon energy after each pair, in units of the base
    /// drive frequency.
    pub harmonics: Vec<i32>,
    /// Intermediate lower-level detunings `E_m − E_i − W` with bare energies
    /// and the beams' actual offsets, rad/s.
    pub detunings: Vec<f64>,
}

impl Pathway {
    pub fn photons(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn final_level(&self) -> usize {
        self.pairs.last().map_or(self.initial, |p| p.to)
    }

    /// Intermediate lower levels (all but the final one).
    pub fn intermediates(&self) -> Vec<usize> {
        self.pairs[..self.pairs.len().saturating_sub(1)].iter().map(|p| p.to).collect()
    }

    pub fn steps(&self) -> Vec<PathStep> {
        self.pairs
            .iter()
            .flat_map(|p| {
                [
                    PathStep {
                        lower: p.from,
                        upper: p.upper,
                        beam: p.absorb,
                        photon: Photon::Absorb,
                    },
                    PathStep {
                        lower: p.to,
                        upper: p.upper,
                        beam: p.emit,
                        photon: Photon::Emit,
                    },
                ]
            })
            .collect()
    }

    pub fn visits(&self, tag: ManifoldTag) -> usize {
        self.pairs.iter().filter(|p| p.upper.manifold == tag).count()
    }

    pub fn f_visits(&self) -> usize {
        self.pairs.iter().filter(|p| p.upper.manifold.is_f()).count()
    }

    /// Beam supplying each photon, in path order.
    pub fn beams(&self) -> Vec<usize> {
        self.steps().iter().map(|s| s.beam).collect()
    }
}

/// Lower-manifold energies used in intermediate denominators, rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splittings {
    pub energies: Vec<f64>,
}

impl Splittings {
    pub fn bare(atom: &Atom) -> Self {
        Splittings {
            energies: atom.lower.energies(),
        }
    }

    /// `ω_ij = E_i − E_j`.
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.energies[i] - self.energies[j]
    }

    /// `ω_r` satisfying the resonance condition `n ω_r / 2 = |E_i − E_f|`.
    pub fn resonance(&self, initial: usize, target: usize, photons: usize) -> f64 {
        2.0 * self.omega(initial, target).abs() / photons as f64
    }
}

/// Harmonic number of each beam and the base drive frequency.
pub(crate) fn harmonics(beams: &[Beam]) -> Result<(Vec<i32>, f64)> {
    let unit = beams
        .iter()
        .map(|b| b.frequency_offset.abs())
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !unit.is_finite() {
        return Ok((vec![0; beams.len()], 0.0));
    }
    let h = beams
        .iter()
        .map(|b| {
            let r = b.frequency_offset / unit;
            if (r - r.round()).abs() > 1e-9 {
                Err(Error::invalid(format!(
                    "beam {} offset is not an integer multiple of the base drive frequency",
                    b.label
                )))
            } else {
                Ok(r.round() as i32)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((h, unit))
}

/// All selection-rule-allowed, resonant pathways with `photons` photons from
/// `initial` to `target` (lower-manifold indices).
///
/// Pathways pass through at most one F-manifold sublevel, and only when
/// `include_f`. Intermediate levels that are secular (the initial level with
/// no net photon energy, or the target level with the full resonant energy)
/// are excluded: those loops are light shifts, accounted for in the dressed
/// splittings.
pub fn enumerate_pathways(
    atom: &Atom,
    beams: &[Beam],
    initial: usize,
    target: usize,
    photons: usize,
    include_f: bool,
) -> Result<Vec<Pathway>> {
    if photons == 0 || photons % 2 != 0 {
        return Err(Error::invalid(format!("photon count must be even and positive, got {photons}")));
    }
    let dim = atom.lower.dim();
    if initial >= dim || target >= dim {
        return Err(Error::invalid("level index outside the qudit manifold"));
    }
    let couplings = CouplingSet::new(atom, beams, include_f)?;
    let (harm, unit) = harmonics(beams)?;
    let energies = atom.lower.energies();
    let gap = energies[target] - energies[initial];
    let k_target = if unit > 0.0 { (gap / unit).round() as i32 } else { 0 };
    if unit == 0.0 && gap != 0.0 {
        return Err(Error::invalid("no beam carries a frequency offset, so no transition between distinct levels is resonant"));
    }
    let max_step = harm.iter().max().copied().unwrap_or(0) - harm.iter().min().copied().unwrap_or(0);
    let pairs_total = photons / 2;

    // Candidate pairs from each lower level.
    let mut from_level: Vec<Vec<(PhotonPair, i32)>> = vec![Vec::new(); dim];
    for (i, slot) in from_level.iter_mut().enumerate() {
        for (u, &tag) in couplings.uppers.iter().enumerate() {
            let n_up = couplings.matrices[0][u].entries.ncols();
            for e in 0..n_up {
                for a in 0..beams.len() {
                    if couplings.matrices[a][u].get(i, e) == C64::from(0.0) {
                        continue;
                    }
                    for b in 0..beams.len() {
                        for m in 0..dim {
                            if couplings.matrices[b][u].get(m, e) == C64::from(0.0) {
                                continue;
                            }
                            slot.push((
                                PhotonPair {
                                    from: i,
                                    upper: UpperRef { manifold: tag, index: e },
                                    absorb: a,
                                    emit: b,
                                    to: m,
                                },
                                harm[a] - harm[b],
                            ));
                        }
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    let mut stack: Vec<(PhotonPair, i32)> = Vec::new();
    fn walk(
        level: usize,
        w: i32,
        f_count: usize,
        ctx: &Ctx<'_>,
        stack: &mut Vec<(PhotonPair, i32)>,
        out: &mut Vec<Pathway>,
    ) {
        let depth = stack.len();
        for &(pair, dw) in &ctx.from_level[level] {
            let f_new = f_count + usize::from(pair.upper.manifold.is_f());
            if f_new > 1 {
                continue;
            }
            let w_new = w + dw;
            let remaining = ctx.pairs_total - depth - 1;
            if (ctx.k_target - w_new).abs() > remaining as i32 * ctx.max_step {
                continue;
            }
            if remaining == 0 {
                if pair.to != ctx.target || w_new != ctx.k_target {
                    continue;
                }
            } else {
                let secular = (pair.to == ctx.initial && w_new == 0) || (pair.to == ctx.target && w_new == ctx.k_target);
                if secular {
                    continue;
                }
            }
            stack.push((pair, w_new));
            if remaining == 0 {
                let pairs: Vec<PhotonPair> = stack.iter().map(|s| s.0).collect();
                let harmonics: Vec<i32> = stack.iter().map(|s| s.1).collect();
                let detunings = stack[..stack.len() - 1]
                    .iter()
                    .map(|(p, w)| ctx.energies[p.to] - ctx.energies[ctx.initial] - *w as f64 * ctx.unit)
                    .collect();
                out.push(Pathway {
                    initial: ctx.initial,
                    pairs,
                    harmonics,
                    detunings,
                });
            } else {
                walk(pair.to, w_new, f_new, ctx, stack, out);
            }
            stack.pop();
        }
    }
    struct Ctx<'a> {
        from_level: &'a [Vec<(PhotonPair, i32)>],
        pairs_total: usize,
        k_target: i32,
        max_step: i32,
        initial: usize,
        target: usize,
        energies: &'a [f64],
        unit: f64,
    }
    let ctx = Ctx {
        from_level: &from_level,
        pairs_total,
        k_target,
        max_step,
        initial,
        target,
        energies: &energies,
        unit,
    };
    walk(initial, 0, 0, &ctx, &mut stack, &mut out);
    Ok(out)
}
