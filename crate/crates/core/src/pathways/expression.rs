//! Term-by-term effective Rabi frequencies from pathways.
//!
//! A 2n-photon pathway contributes
//!
//! ```text
//!   Π_pairs [ Ω*_{absorb}(from, e) Ω_{emit}(to, e) ]
//!   ----------------------------------------------------
//!   2^(2n−1) Π_pairs Δ_e · Π_intermediates (E_m − E_i − W_m)
//! ```
//!
//! where `W_m` is the photon energy absorbed on the way to intermediate `m`.
//! Denominators are referenced to the initial level; at resonance this
//! equals the final-level reference.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{enumerate_pathways, harmonics, Pathway, Splittings, UpperRef, DEGENERACY_TOLERANCE};
use crate::error::{Error, Result};
use crate::manifold::{Atom, Beam, CouplingSet, ManifoldTag};
use crate::C64;

/// Optical detuning per upper manifold, rad/s.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaMap(pub Vec<(ManifoldTag, f64)>);

impl DeltaMap {
    pub fn get(&self, tag: ManifoldTag) -> Option<f64> {
        self.0.iter().find(|(t, _)| *t == tag).map(|(_, d)| *d)
    }

    /// Centroid detunings of the reference beam (index 0) from every
    /// coupled upper manifold.
    pub fn from_beam(atom: &Atom, beam: &Beam, include_f: bool) -> Self {
        DeltaMap(
            atom.coupled_uppers(include_f)
                .into_iter()
                .map(|m| (m.tag, atom.manifold_detuning(beam, m)))
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub beam: usize,
    pub lower: usize,
    pub upper: UpperRef,
    pub conjugated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Denominator {
    Optical { manifold: ManifoldTag, value: f64 },
    Intermediate { level: usize, harmonics: i32, value: f64 },
}

impl Denominator {
    pub fn value(&self) -> f64 {
        match *self {
            Denominator::Optical { value, .. } | Denominator::Intermediate { value, .. } => value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub pathway: usize,
    pub sign: f64,
    pub factors: Vec<Factor>,
    pub denominators: Vec<Denominator>,
}

impl Term {
    pub fn optical_count(&self) -> usize {
        self.denominators
            .iter()
            .filter(|d| matches!(d, Denominator::Optical { .. }))
            .count()
    }

    pub fn intermediate_count(&self) -> usize {
        self.denominators.len() - self.optical_count()
    }

    pub fn evaluate(&self, couplings: &CouplingSet, prefactor: f64) -> C64 {
        let mut num = C64::from(self.sign * prefactor);
        for f in &self.factors {
            let w = couplings.omega(f.beam, f.upper.manifold, f.lower, f.upper.index);
            num *= if f.conjugated { w.conj() } else { w };
        }
        let den: f64 = self.denominators.iter().map(Denominator::value).product();
        num / den
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiExpression {
    pub photons: usize,
    /// `1 / 2^(photons − 1)`.
    pub prefactor: f64,
    pub terms: Vec<Term>,
}

impl RabiExpression {
    pub fn evaluate(&self, couplings: &CouplingSet) -> C64 {
        self.terms.iter().map(|t| t.evaluate(couplings, self.prefactor)).sum()
    }

    pub fn term_values(&self, couplings: &CouplingSet) -> Vec<C64> {
        self.terms.iter().map(|t| t.evaluate(couplings, self.prefactor)).collect()
    }

    /// One line per term: sign, Ω factors, denominator factors. Lower levels
    /// are `|0>..|5>`, P3/2 levels `|6>..|9>`, F7/2 `|10>..|17>`, F5/2
    /// `|18>..|23>`; beams are named by label.
    pub fn pretty(&self, couplings: &CouplingSet) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}-photon expression, prefactor 1/{}", self.photons, 1.0 / self.prefactor);
        for (k, t) in self.terms.iter().enumerate() {
            let sign = if t.sign >= 0.0 { '+' } else { '-' };
            let factors: Vec<String> = t
                .factors
                .iter()
                .map(|f| {
                    format!(
                        "O{}({},{})[{}]",
                        if f.conjugated { "*" } else { "" },
                        f.lower,
                        upper_label(f.upper),
                        couplings.beams[f.beam].label
                    )
                })
                .collect();
            let dens: Vec<String> = t
                .denominators
                .iter()
                .map(|d| match *d {
                    Denominator::Optical { manifold, value } => format!("D({manifold}={:.6e})", value),
                    Denominator::Intermediate { level, harmonics, value } => {
                        format!("(E{level}-E0{:+}wr={:.6e})", -harmonics, value)
                    }
                })
                .collect();
            let _ = writeln!(
                s,
                "term {k} pathway {}: {sign} {} / {}",
                t.pathway,
                factors.join(" "),
                dens.join(" ")
            );
        }
        s
    }
}

pub(crate) fn upper_label(u: UpperRef) -> usize {
    let base = match u.manifold {
        ManifoldTag::P32 => 6,
        ManifoldTag::F72 => 10,
        ManifoldTag::F52 => 18,
        ManifoldTag::S12 | ManifoldTag::D52 => 100,
    };
    base + u.index
}

/// One term per pathway, with optical detunings from `delta` and
/// intermediate detunings `E_m − E_i − W_m ω_r` from `splittings`.
pub fn generate_rabi_expression(
    pathways: &[Pathway],
    delta: &DeltaMap,
    splittings: &Splittings,
    omega_r: f64,
) -> Result<RabiExpression> {
    let photons = pathways.first().map_or(0, Pathway::photons);
    if pathways.iter().any(|p| p.photons() != photons) {
        return Err(Error::invalid("pathways with different photon counts"));
    }
    let mut terms = Vec::with_capacity(pathways.len());
    for (k, p) in pathways.iter().enumerate() {
        let mut factors = Vec::with_capacity(p.photons());
        let mut denominators = Vec::with_capacity(2 * p.pairs.len());
        for pair in &p.pairs {
            factors.push(Factor {
                beam: pair.absorb,
                lower: pair.from,
                upper: pair.upper,
                conjugated: true,
            });
            factors.push(Factor {
                beam: pair.emit,
                lower: pair.to,
                upper: pair.upper,
                conjugated: false,
            });
            let d = delta
                .get(pair.upper.manifold)
                .ok_or_else(|| Error::invalid(format!("no detuning given for {}", pair.upper.manifold)))?;
            if d == 0.0 {
                return Err(Error::invalid(format!("zero optical detuning for {}", pair.upper.manifold)));
            }
            denominators.push(Denominator::Optical {
                manifold: pair.upper.manifold,
                value: d,
            });
        }
        for (pair, &w) in p.pairs.iter().zip(&p.harmonics).take(p.pairs.len() - 1) {
            let value = splittings.energies[pair.to] - splittings.energies[p.initial] - w as f64 * omega_r;
            if value.abs() < DEGENERACY_TOLERANCE {
                return Err(Error::DegenerateResonance {
                    context: format!("pathway {k}, intermediate level {}", pair.to),
                    value,
                    tolerance: DEGENERACY_TOLERANCE,
                });
            }
            denominators.push(Denominator::Intermediate {
                level: pair.to,
                harmonics: w,
                value,
            });
        }
        terms.push(Term {
            pathway: k,
            sign: 1.0,
            factors,
            denominators,
        });
    }
    Ok(RabiExpression {
        photons,
        prefactor: 1.0 / 2f64.powi(photons as i32 - 1),
        terms,
    })
}

/// Full generated `Ω^(n)` for `initial → target`: every P pathway plus, with
/// `include_f`, every pathway with exactly one F visit. The base drive
/// frequency is taken from the beams' offsets.
pub fn analytic_rabi(
    atom: &Atom,
    beams: &[Beam],
    initial: usize,
    target: usize,
    photons: usize,
    splittings: &Splittings,
    include_f: bool,
) -> Result<C64> {
    let (_, unit) = harmonics(beams)?;
    let paths = enumerate_pathways(atom, beams, initial, target, photons, include_f)?;
    if paths.is_empty() {
        return Ok(C64::from(0.0));
    }
    let delta = DeltaMap::from_beam(atom, &beams[0], include_f);
    let expr = generate_rabi_expression(&paths, &delta, splittings, unit)?;
    let couplings = CouplingSet::new(atom, beams, include_f)?;
    Ok(expr.evaluate(&couplings))
}

/// Sum over pathways with exactly one F-manifold visit.
#[allow(clippy::too_many_arguments)]
pub fn f_state_correction(
    atom: &Atom,
    beams: &[Beam],
    initial: usize,
    target: usize,
    photons: usize,
    delta_p: f64,
    delta_f: f64,
    splittings: &Splittings,
    omega_r: f64,
) -> Result<C64> {
    let paths: Vec<Pathway> = enumerate_pathways(atom, beams, initial, target, photons, true)?
        .into_iter()
        .filter(|p| p.f_visits() == 1)
        .collect();
    if paths.is_empty() || delta_f.is_infinite() {
        return Ok(C64::from(0.0));
    }
    let mut delta = DeltaMap(vec![(atom.reference, delta_p)]);
    for m in atom.coupled_uppers(true) {
        if m.tag.is_f() {
            delta.0.push((m.tag, delta_f));
        }
    }
    let expr = generate_rabi_expression(&paths, &delta, splittings, omega_r)?;
    let couplings = CouplingSet::new(atom, beams, true)?;
    Ok(expr.evaluate(&couplings))
}
