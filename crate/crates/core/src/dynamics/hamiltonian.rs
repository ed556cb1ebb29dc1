//! Effective Hamiltonian of the qudit manifold with the upper manifolds
//! adiabatically eliminated.
//!
//! Frame: the qudit levels keep their bare Zeeman energies on the diagonal
//! and every two-photon coupling carries the beat note of the two drive
//! frequencies, `H_ji(t) ⊃ A_ji e^{−iνt}` with `ν = ω_absorb − ω_emit`. With
//! drive offsets that are integer multiples of a base frequency the
//! Hamiltonian is exactly periodic, which the propagator exploits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{one_norm, CMat};
use crate::manifold::{Atom, Beam, CouplingSet};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTerm {
    pub row: usize,
    pub col: usize,
    pub amplitude: C64,
    /// Angular beat frequency, rad/s; the term is `amplitude·e^{−i·beat·t}`.
    pub beat: f64,
    /// (absorbed, emitted) beam indices; the term scales with both envelopes.
    pub beams: (usize, usize),
}

/// Terms sharing a beam pair, collected into one matrix.
#[derive(Clone, Debug)]
struct BeatGroup {
    beams: (usize, usize),
    beat: f64,
    matrix: CMat,
}

#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub dim: usize,
    /// Bare level energies, rad/s.
    pub static_diagonal: Vec<f64>,
    pub terms: Vec<CouplingTerm>,
    pub n_beams: usize,
    /// Beams the Hamiltonian was built from (empty for hand-made ones).
    pub beams: Vec<Beam>,
    groups: Vec<BeatGroup>,
}

impl EffectiveHamiltonian {
    /// Assemble from explicit parts. The term list must be Hermitian: every
    /// term `(r, c, A, ν, (a, b))` needs a partner `(c, r, A*, −ν, (b, a))`.
    pub fn from_parts(static_diagonal: Vec<f64>, terms: Vec<CouplingTerm>, n_beams: usize) -> Result<Self> {
        let dim = static_diagonal.len();
        if terms.iter().any(|t| t.row >= dim || t.col >= dim) {
            return Err(Error::invalid("coupling term index outside the Hamiltonian"));
        }
        if terms.iter().any(|t| t.beams.0 >= n_beams || t.beams.1 >= n_beams) {
            return Err(Error::invalid("coupling term references an unknown beam"));
        }
        let mut groups: Vec<BeatGroup> = Vec::new();
        for t in &terms {
            let g = match groups.iter_mut().position(|g| g.beams == t.beams && g.beat == t.beat) {
                Some(k) => &mut groups[k],
                None => {
                    groups.push(BeatGroup {
                        beams: t.beams,
                        beat: t.beat,
                        matrix: CMat::zeros(dim, dim),
                    });
                    groups.last_mut().unwrap()
                }
            };
            g.matrix[(t.row, t.col)] += t.amplitude;
        }
        for g in &groups {
            let partner = groups
                .iter()
                .find(|p| p.beams == (g.beams.1, g.beams.0) && p.beat == -g.beat)
                .ok_or_else(|| Error::invalid("coupling terms are not Hermitian: missing conjugate partner"))?;
            let defect = crate::linalg::max_abs(&(&g.matrix - partner.matrix.adjoint()));
            let scale = crate::linalg::max_abs(&g.matrix).max(1.0);
            if defect > 1e-12 * scale {
                return Err(Error::invalid("coupling terms are not Hermitian"));
            }
        }
        Ok(EffectiveHamiltonian {
            dim,
            static_diagonal,
            terms,
            n_beams,
            beams: Vec::new(),
            groups,
        })
    }

    /// `H(t)` with beam field-envelope amplitudes `env` (one per beam).
    pub fn at(&self, t: f64, env: &[f64]) -> CMat {
        let mut h = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim,
            self.static_diagonal.iter().map(|&e| C64::from(e)),
        ));
        for g in &self.groups {
            let s = env[g.beams.0] * env[g.beams.1];
            if s == 0.0 {
                continue;
            }
            let phase = C64::from_polar(s, -g.beat * t);
            h.zip_apply(&g.matrix, |x, m| *x += m * phase);
        }
        h
    }

    /// Base drive frequency: the smallest non-zero |beat|, or `None` for a
    /// static Hamiltonian. Errors if the beats are not commensurate.
    pub fn base_frequency(&self) -> Result<Option<f64>> {
        let unit = self
            .groups
            .iter()
            .map(|g| g.beat.abs())
            .filter(|&b| b > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !unit.is_finite() {
            return Ok(None);
        }
        for g in &self.groups {
            let r = g.beat / unit;
            if (r - r.round()).abs() > 1e-9 {
                return Err(Error::invalid("beat frequencies are not integer multiples of a common base"));
            }
        }
        Ok(Some(unit))
    }

    pub fn max_beat(&self) -> f64 {
        self.groups.iter().map(|g| g.beat.abs()).fold(0.0, f64::max)
    }

    /// Upper bound on ‖H(t)‖ for envelope amplitudes ≤ 1.
    pub fn norm_bound(&self) -> f64 {
        let d = self.static_diagonal.iter().map(|e| e.abs()).fold(0.0, f64::max);
        d + self.groups.iter().map(|g| one_norm(&g.matrix)).sum::<f64>()
    }

    /// Time-independent part for constant envelopes: bare energies plus all
    /// zero-beat terms.
    pub fn static_part(&self, env: &[f64]) -> CMat {
        let mut h = self.at(0.0, &vec![0.0; self.n_beams]);
        for g in self.groups.iter().filter(|g| g.beat == 0.0) {
            let s = env[g.beams.0] * env[g.beams.1];
            h += &g.matrix * C64::from(s);
        }
        h
    }

    /// Oscillating terms at unit envelope as (row, col, amplitude, beat),
    /// with same-(row, col, beat) contributions summed.
    pub fn oscillating_elements(&self, env: &[f64]) -> Vec<(usize, usize, C64, f64)> {
        let mut out: Vec<(usize, usize, C64, f64)> = Vec::new();
        for g in self.groups.iter().filter(|g| g.beat != 0.0) {
            let s = env[g.beams.0] * env[g.beams.1];
            for r in 0..self.dim {
                for c in 0..self.dim {
                    let a = g.matrix[(r, c)] * s;
                    if a == C64::from(0.0) {
                        continue;
                    }
                    match out.iter_mut().find(|(rr, cc, _, b)| *rr == r && *cc == c && *b == g.beat) {
                        Some(slot) => slot.2 += a,
                        None => out.push((r, c, a, g.beat)),
                    }
                }
            }
        }
        out
    }

    pub fn unit_envelope(&self) -> Vec<f64> {
        vec![1.0; self.n_beams]
    }
}

/// Second-order effective Hamiltonian of the qudit manifold.
///
/// For beams `k` (absorbed) and `l` (emitted), sublevels `i → j` through
/// upper sublevel `e`:
/// `H_ji += Ω*_{l,je} Ω_{k,ie} / (4Δ̄) · e^{−i(ω_k − ω_l)t}` with
/// `1/Δ̄ = (1/Δ_{k,ie} + 1/Δ_{l,je})/2`, which keeps `H` Hermitian. Same-beam
/// diagonal terms are the light shifts `|Ω|²/(4Δ)`.
pub fn build_effective_hamiltonian(atom: &Atom, beams: &[Beam], include_f: bool) -> Result<EffectiveHamiltonian> {
    let couplings = CouplingSet::new(atom, beams, include_f)?;
    let uppers = atom.coupled_uppers(include_f);
    let dim = atom.lower.dim();
    let mut terms = Vec::new();
    for (k, bk) in beams.iter().enumerate() {
        for (l, bl) in beams.iter().enumerate() {
            let beat = bk.frequency_offset - bl.frequency_offset;
            let mut acc = CMat::zeros(dim, dim);
            for (u, upper) in uppers.iter().enumerate() {
                let mk = &couplings.matrices[k][u];
                let ml = &couplings.matrices[l][u];
                for e in 0..upper.dim() {
                    for i in 0..dim {
                        let wk = mk.get(i, e);
                        if wk == C64::from(0.0) {
                            continue;
                        }
                        let dk = atom.level_detuning(bk, upper, i, e);
                        for j in 0..dim {
                            let wl = ml.get(j, e);
                            if wl == C64::from(0.0) {
                                continue;
                            }
                            let dl = atom.level_detuning(bl, upper, j, e);
                            let inv = 0.5 * (1.0 / dk + 1.0 / dl);
                            acc[(j, i)] += wl.conj() * wk * (0.25 * inv);
                        }
                    }
                }
            }
            for r in 0..dim {
                for c in 0..dim {
                    if acc[(r, c)] != C64::from(0.0) {
                        terms.push(CouplingTerm {
                            row: r,
                            col: c,
                            amplitude: acc[(r, c)],
                            beat,
                            beams: (k, l),
                        });
                    }
                }
            }
        }
    }
    let mut h = EffectiveHamiltonian::from_parts(atom.lower.energies(), terms, beams.len())?;
    h.beams = beams.to_vec();
    Ok(h)
}
