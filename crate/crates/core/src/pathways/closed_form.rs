//! Hand-written four- and six-photon Rabi frequencies for the
//! `|0> = +5/2 → |3> = −1/2` and `|0> → |4> = −3/2` transitions, with
//! absorbed photons from the parallel beam and emitted photons from the
//! perpendicular beam. Upper labels `6..9` are P3/2 `+3/2..−3/2`.

use serde::{Deserialize, Serialize};

use super::{Splittings, DEGENERACY_TOLERANCE};
use crate::error::{Error, Result};
use crate::manifold::RabiMatrix;
use crate::C64;

struct Labels<'a> {
    par: &'a RabiMatrix,
    perp: &'a RabiMatrix,
}

impl Labels<'_> {
    /// Emitted photon, `Ω_{i,j}` with `j` the upper-level label.
    fn w(&self, i: usize, j: usize) -> C64 {
        self.perp.get(i, j - 6)
    }

    /// Absorbed photon, `Ω*_{i,j}`.
    fn wc(&self, i: usize, j: usize) -> C64 {
        self.par.get(i, j - 6).conj()
    }
}

fn checked(value: f64, context: &str) -> Result<f64> {
    if value.abs() < DEGENERACY_TOLERANCE {
        Err(Error::DegenerateResonance {
            context: context.to_string(),
            value,
            tolerance: DEGENERACY_TOLERANCE,
        })
    } else {
        Ok(value)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta == 0.0 || !delta.is_finite() {
        Err(Error::invalid("optical detuning must be finite and non-zero"))
    } else {
        Ok(())
    }
}

/// `(Ω*₀₆ / 8Δ²) [Ω₁₆Ω*₁₇Ω₃₇/(ω_r−ω₀₁) − Ω₂₆Ω*₂₈Ω₃₈/(ω_r−ω₂₃)]`.
pub fn four_photon_rabi(par: &RabiMatrix, perp: &RabiMatrix, delta: f64, s: &Splittings, omega_r: f64) -> Result<C64> {
    check_delta(delta)?;
    let o = Labels { par, perp };
    let d1 = checked(omega_r - s.omega(0, 1), "ω_r − ω01")?;
    let d2 = checked(omega_r - s.omega(2, 3), "ω_r − ω23")?;
    let a = o.w(1, 6) * o.wc(1, 7) * o.w(3, 7) / d1;
    let b = o.w(2, 6) * o.wc(2, 8) * o.w(3, 8) / d2;
    Ok(o.wc(0, 6) / (8.0 * delta * delta) * (a - b))
}

/// The five six-photon terms individually, in closed-form order.
pub fn six_photon_terms(par: &RabiMatrix, perp: &RabiMatrix, delta: f64, s: &Splittings, omega_r: f64) -> Result<[C64; 5]> {
    check_delta(delta)?;
    let o = Labels { par, perp };
    let r01 = checked(omega_r - s.omega(0, 1), "ω_r − ω01")?;
    let r02 = checked(2.0 * omega_r - s.omega(0, 2), "2ω_r − ω02")?;
    let r03 = checked(s.omega(0, 3) - 2.0 * omega_r, "ω03 − 2ω_r")?;
    let q02 = checked(s.omega(0, 2) - omega_r, "ω02 − ω_r")?;
    let wr = checked(omega_r, "ω_r")?;
    let pre = o.wc(0, 6) / (32.0 * delta * delta * delta);
    Ok([
        pre * o.w(1, 6) * o.wc(1, 7) * o.w(2, 7) * o.wc(2, 8) * o.w(4, 8) / (r01 * r02),
        -pre * o.w(1, 6) * o.wc(1, 7) * o.w(3, 7) * o.wc(3, 9) * o.w(4, 9) / (r01 * r03),
        pre * o.w(2, 6) * o.wc(2, 8) * o.w(3, 8) * o.wc(3, 9) * o.w(4, 9) / (q02 * r03),
        -pre * o.w(2, 6) * o.wc(2, 8) * o.w(2, 8) * o.wc(2, 8) * o.w(4, 8) / (q02 * r02),
        pre * o.w(0, 6) * o.wc(0, 6) * o.w(2, 6) * o.wc(2, 8) * o.w(4, 8) / (wr * r02),
    ])
}

/// Five-term six-photon Rabi frequency `|0> → |4>`, term by term.
pub fn six_photon_rabi(par: &RabiMatrix, perp: &RabiMatrix, delta: f64, s: &Splittings, omega_r: f64) -> Result<C64> {
    Ok(six_photon_terms(par, perp, delta, s, omega_r)?.iter().sum())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SixPhotonTermReport {
    pub index: usize,
    pub closed_form: C64,
    /// Generator term with the same pathway, if one exists.
    pub generated: Option<C64>,
    pub relative_difference: Option<f64>,
}

/// Closed-form five-term six-photon expression against the generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SixPhotonComparison {
    pub closed_form_total: C64,
    pub generated_total: C64,
    pub terms: Vec<SixPhotonTermReport>,
    /// Generator pathways with no closed-form counterpart, as (pathway index, value).
    pub unmatched_generated: Vec<(usize, C64)>,
}

/// Lower-level sequence (initial, intermediates..., final) of each closed-form
/// six-photon term.
pub const SIX_PHOTON_CLOSED_FORM_PATHS: [[usize; 4]; 5] =
    [[0, 1, 2, 4], [0, 1, 3, 4], [0, 2, 3, 4], [0, 2, 2, 4], [0, 0, 2, 4]];

/// P3/2 sublevel index visited by each photon pair of the closed-form terms.
pub const SIX_PHOTON_CLOSED_FORM_UPPERS: [[usize; 3]; 5] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [0, 2, 2], [0, 0, 2]];

/// Term-by-term comparison of the closed-form six-photon expression with a
/// generated one. Closed-form terms are matched to generated pathways through
/// their sequence of lower and P3/2 levels and pure parallel-absorb /
/// perpendicular-emit beam assignment.
pub fn compare_six_photon(
    closed: [C64; 5],
    pathways: &[super::Pathway],
    generated_terms: &[C64],
    par_beam: usize,
    perp_beam: usize,
) -> SixPhotonComparison {
    let mut used = vec![false; pathways.len()];
    let mut terms = Vec::new();
    for (k, (seq, ups)) in SIX_PHOTON_CLOSED_FORM_PATHS.iter().zip(&SIX_PHOTON_CLOSED_FORM_UPPERS).enumerate() {
        let found = pathways.iter().enumerate().position(|(idx, p)| {
            !used[idx]
                && p.pairs.len() == 3
                && p.initial == seq[0]
                && p.pairs.iter().map(|q| q.to).eq(seq[1..].iter().copied())
                && p.pairs.iter().map(|q| q.upper.index).eq(ups.iter().copied())
                && p.pairs.iter().all(|q| {
                    q.absorb == par_beam && q.emit == perp_beam && q.upper.manifold == crate::manifold::ManifoldTag::P32
                })
        });
        let generated = found.map(|idx| {
            used[idx] = true;
            generated_terms[idx]
        });
        terms.push(SixPhotonTermReport {
            index: k + 1,
            closed_form: closed[k],
            generated,
            relative_difference: generated.map(|g| (g - closed[k]).norm() / closed[k].norm().max(f64::MIN_POSITIVE)),
        });
    }
    let unmatched_generated = used
        .iter()
        .enumerate()
        .filter(|(_, u)| !**u)
        .map(|(k, _)| (k, generated_terms[k]))
        .collect();
    SixPhotonComparison {
        closed_form_total: closed.iter().sum(),
        generated_total: generated_terms.iter().sum(),
        terms,
        unmatched_generated,
    }
}
