//! ac Stark shifts of the qudit sublevels and Stark-corrected resonance
//! conditions.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{build_effective_hamiltonian, find_resonance, EffectiveHamiltonian, PropagationSettings};
use crate::error::{Error, Result};
use crate::manifold::{retune, Atom, Beam, CouplingSet};
use crate::pathways::Splittings;

/// Ratio |Δ| / max|Ω| below which the second-order treatment is flagged.
pub const FAR_DETUNED_RATIO: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftMethod {
    SecondOrder,
    NumericDressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightShift {
    /// rad/s
    pub value: f64,
    /// Set when some coupling is not far detuned.
    pub near_resonant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftTable {
    pub method: ShiftMethod,
    /// `per_beam[b][level]`, rad/s.
    pub per_beam: Vec<Vec<f64>>,
    /// Shift of each level with all beams on, rad/s.
    pub total: Vec<f64>,
    pub near_resonant: bool,
}

impl ShiftTable {
    /// `shift_i − shift_j`.
    pub fn differential(&self, i: usize, j: usize) -> f64 {
        self.total[i] - self.total[j]
    }
}

/// Second-order shift `Σ_e |Ω_ie|²/(4Δ_ie)` of `level` from every beam.
pub fn light_shift_second_order(atom: &Atom, level: usize, beams: &[Beam], include_f: bool) -> Result<LightShift> {
    if level >= atom.lower.dim() {
        return Err(Error::invalid(format!("level {level} out of range")));
    }
    let per = per_beam_shifts(atom, beams, include_f)?;
    Ok(LightShift {
        value: per.0.iter().map(|row| row[level]).sum(),
        near_resonant: per.1,
    })
}

fn per_beam_shifts(atom: &Atom, beams: &[Beam], include_f: bool) -> Result<(Vec<Vec<f64>>, bool)> {
    let couplings = CouplingSet::new(atom, beams, include_f)?;
    let uppers = atom.coupled_uppers(include_f);
    let dim = atom.lower.dim();
    let mut flag = false;
    let mut out = vec![vec![0.0; dim]; beams.len()];
    for (b, beam) in beams.iter().enumerate() {
        for (u, upper) in uppers.iter().enumerate() {
            let m = &couplings.matrices[b][u];
            for i in 0..dim {
                for e in 0..upper.dim() {
                    let w = m.get(i, e).norm();
                    if w == 0.0 {
                        continue;
                    }
                    let d = atom.level_detuning(beam, upper, i, e);
                    if d.abs() < FAR_DETUNED_RATIO * w {
                        flag = true;
                    }
                    out[b][i] += w * w / (4.0 * d);
                }
            }
        }
    }
    Ok((out, flag))
}

/// Per-level shifts with every beam, by the chosen method.
pub fn shift_table(atom: &Atom, beams: &[Beam], include_f: bool, method: ShiftMethod) -> Result<ShiftTable> {
    match method {
        ShiftMethod::SecondOrder => {
            let (per_beam, near_resonant) = per_beam_shifts(atom, beams, include_f)?;
            let dim = atom.lower.dim();
            let total = (0..dim).map(|i| per_beam.iter().map(|r| r[i]).sum()).collect();
            Ok(ShiftTable {
                method,
                per_beam,
                total,
                near_resonant,
            })
        }
        ShiftMethod::NumericDressed => {
            let h = build_effective_hamiltonian(atom, beams, include_f)?;
            let bare = atom.lower.energies();
            let opts = DressedOptions::default();
            let shifted = |env: &[f64]| -> Result<Vec<f64>> {
                let e = numeric_dressed_energies_with(&h, env, &opts)?;
                Ok(e.iter().zip(&bare).map(|(a, b)| a - b).collect())
            };
            let mut per_beam = Vec::with_capacity(beams.len());
            for b in 0..beams.len() {
                let mut env = vec![0.0; beams.len()];
                env[b] = 1.0;
                per_beam.push(shifted(&env)?);
            }
            Ok(ShiftTable {
                method,
                per_beam,
                total: shifted(&h.unit_envelope())?,
                near_resonant: false,
            })
        }
    }
}

/// Bare Zeeman energies plus second-order shifts.
pub fn dressed_splittings(atom: &Atom, beams: &[Beam], include_f: bool) -> Result<Splittings> {
    let table = shift_table(atom, beams, include_f, ShiftMethod::SecondOrder)?;
    Ok(Splittings {
        energies: atom.lower.energies().iter().zip(&table.total).map(|(e, s)| e + s).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedOptions {
    /// Couplings whose energy mismatch falls below this (rad/s) are treated
    /// as resonant drives rather than shifts and skipped. `None` reports
    /// them as a labeling ambiguity instead.
    pub skip_below: Option<f64>,
    /// Largest |coupling / mismatch| accepted before perturbative labeling
    /// is declared ambiguous.
    pub max_mixing: f64,
}

impl Default for DressedOptions {
    fn default() -> Self {
        DressedOptions {
            skip_below: None,
            max_mixing: 0.5,
        }
    }
}

pub fn numeric_dressed_energies(h: &EffectiveHamiltonian) -> Result<Vec<f64>> {
    numeric_dressed_energies_with(h, &h.unit_envelope(), &DressedOptions::default())
}

/// Time-averaged diagonal of `h` plus second-order corrections from every
/// off-diagonal coupling `A |r⟩⟨c| e^{−iνt}`: level `c` moves by
/// `|A|²/(E_c + ν − E_r)`. Levels keep their bare labels.
pub fn numeric_dressed_energies_with(h: &EffectiveHamiltonian, env: &[f64], opts: &DressedOptions) -> Result<Vec<f64>> {
    let stat = h.static_part(env);
    let diag: Vec<f64> = (0..h.dim).map(|k| stat[(k, k)].re).collect();
    let mut elements: Vec<(usize, usize, f64, f64)> = Vec::new();
    for r in 0..h.dim {
        for c in 0..h.dim {
            if r != c && stat[(r, c)].norm() > 0.0 {
                elements.push((r, c, stat[(r, c)].norm(), 0.0));
            }
        }
    }
    for (r, c, a, beat) in h.oscillating_elements(env) {
        if r != c {
            elements.push((r, c, a.norm(), beat));
        }
    }
    let mut out = diag.clone();
    for (r, c, a, beat) in elements {
        let den = diag[c] + beat - diag[r];
        if let Some(t) = opts.skip_below {
            if den.abs() < t {
                continue;
            }
        }
        if a > opts.max_mixing * den.abs() {
            return Err(Error::LabelingAmbiguity(format!(
                "coupling {r}↔{c} of {a:.4e} rad/s against a mismatch of {den:.4e} rad/s"
            )));
        }
        out[c] += a * a / den;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSolution {
    /// rad/s
    pub omega_r: f64,
    pub iterations: usize,
    /// `|ω_r − 2|E_i − E_j|/n|`, rad/s.
    pub residual: f64,
}

/// Self-consistent `ω_r = 2|E_i − E_j|/n` with Stark-corrected energies
/// (damped fixed-point iteration).
pub fn resonance_frequency(
    atom: &Atom,
    beams: &[Beam],
    initial: usize,
    target: usize,
    photons: usize,
    include_f: bool,
    method: ShiftMethod,
) -> Result<ResonanceSolution> {
    if photons == 0 || photons % 2 != 0 {
        return Err(Error::invalid(format!("photon number must be even and positive, got {photons}")));
    }
    if initial == target || initial.max(target) >= atom.lower.dim() {
        return Err(Error::invalid("levels must be distinct and in range"));
    }
    let energies = |w: f64| -> Result<Vec<f64>> {
        let tuned = retune(beams, w);
        match method {
            ShiftMethod::SecondOrder => Ok(dressed_splittings(atom, &tuned, include_f)?.energies),
            ShiftMethod::NumericDressed => {
                let h = build_effective_hamiltonian(atom, &tuned, include_f)?;
                let opts = DressedOptions {
                    skip_below: Some(0.1 * w.abs()),
                    ..DressedOptions::default()
                };
                numeric_dressed_energies_with(&h, &h.unit_envelope(), &opts)
            }
        }
    };
    let condition = |e: &[f64]| 2.0 * (e[initial] - e[target]).abs() / photons as f64;
    let tol = TAU * 1.0;
    let mut w = condition(&atom.lower.energies());
    for it in 1..=50 {
        let goal = condition(&energies(w)?);
        let residual = (goal - w).abs();
        if residual < tol {
            return Ok(ResonanceSolution {
                omega_r: w,
                iterations: it,
                residual,
            });
        }
        w += 0.5 * (goal - w);
    }
    Err(Error::IterationFailed(format!(
        "resonance {initial} → {target} ({photons} photons) did not converge within 50 iterations"
    )))
}

/// A drive tuned onto a multi-photon resonance.
#[derive(Clone, Debug)]
pub struct LockedDrive {
    /// Beams with the perpendicular offset set to `omega_r`.
    pub beams: Vec<Beam>,
    pub hamiltonian: EffectiveHamiltonian,
    /// rad/s
    pub omega_r: f64,
    /// Effective Rabi frequency on resonance, rad/s.
    pub rabi: f64,
    /// Stark-corrected estimate the search started from, rad/s.
    pub stark_estimate: f64,
}

impl LockedDrive {
    pub fn pi_time(&self) -> f64 {
        PI / self.rabi
    }

    /// Dressed energies at the locked beat frequency.
    pub fn dressed_splittings(&self) -> Result<Splittings> {
        let opts = DressedOptions {
            skip_below: Some(0.1 * self.omega_r.abs()),
            ..DressedOptions::default()
        };
        Ok(Splittings {
            energies: numeric_dressed_energies_with(&self.hamiltonian, &self.hamiltonian.unit_envelope(), &opts)?,
        })
    }
}

/// Tune the perpendicular beams onto the `initial → target` resonance:
/// a dressed-energy estimate refined by a Floquet-gap search.
pub fn lock_resonance(
    atom: &Atom,
    beams: &[Beam],
    initial: usize,
    target: usize,
    photons: usize,
    include_f: bool,
    settings: &PropagationSettings,
) -> Result<LockedDrive> {
    let estimate = resonance_frequency(atom, beams, initial, target, photons, include_f, ShiftMethod::NumericDressed)?;
    let build = |w: f64| build_effective_hamiltonian(atom, &retune(beams, w), include_f);
    let res = find_resonance(&build, initial, target, estimate.omega_r, settings)?;
    let tuned = retune(beams, res.omega_r);
    Ok(LockedDrive {
        hamiltonian: build_effective_hamiltonian(atom, &tuned, include_f)?,
        beams: tuned,
        omega_r: res.omega_r,
        rabi: res.rabi,
        stark_estimate: estimate.omega_r,
    })
}
