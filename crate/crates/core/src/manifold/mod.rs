//! Atomic structure, Zeeman energies, laser beams and single-photon Rabi
//! couplings.
//!
//! Sublevels of a manifold with angular momentum `J` are indexed from the
//! top: index `k` has `mJ = J - k`. For the D5/2 qudit this gives
//! `|0> = +5/2 ... |5> = -5/2`, and for P3/2 `+3/2 ... -3/2`.
//!
//! Polarization amplitudes follow the spherical basis with the
//! Condon–Shortley phase, `e_q = ê_q^* · ε`, so that
//! `ê_{±1} = ∓(x̂ ± iŷ)/√2` and `ê_0 = ẑ` with the quantization axis along `ẑ`.

mod angular;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use angular::{clebsch_gordan, HalfInt};

use crate::error::{Error, Result};
use crate::kv::KvDoc;
use crate::units::{hz, thz, ATOMIC_DIPOLE, BOHR_MAGNETON, EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ManifoldTag {
    S12,
    D52,
    P32,
    F72,
    F52,
}

impl ManifoldTag {
    pub fn orbital(self) -> u32 {
        match self {
            ManifoldTag::S12 => 0,
            ManifoldTag::P32 => 1,
            ManifoldTag::D52 => 2,
            ManifoldTag::F72 | ManifoldTag::F52 => 3,
        }
    }

    pub fn j(self) -> HalfInt {
        HalfInt::from_twice(match self {
            ManifoldTag::S12 => 1,
            ManifoldTag::P32 => 3,
            ManifoldTag::D52 | ManifoldTag::F52 => 5,
            ManifoldTag::F72 => 7,
        })
    }

    pub fn is_f(self) -> bool {
        matches!(self, ManifoldTag::F72 | ManifoldTag::F52)
    }

    /// Electric-dipole connected: ΔL = ±1 and |ΔJ| ≤ 1.
    pub fn dipole_connected(self, other: ManifoldTag) -> bool {
        self.orbital().abs_diff(other.orbital()) == 1 && (self.j().twice() - other.j().twice()).abs() <= 2
    }

    pub fn key(self) -> &'static str {
        match self {
            ManifoldTag::S12 => "s12",
            ManifoldTag::D52 => "d52",
            ManifoldTag::P32 => "p32",
            ManifoldTag::F72 => "f72",
            ManifoldTag::F52 => "f52",
        }
    }
}

impl fmt::Display for ManifoldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ManifoldTag::S12 => "S1/2",
            ManifoldTag::D52 => "D5/2",
            ManifoldTag::P32 => "P3/2",
            ManifoldTag::F72 => "F7/2",
            ManifoldTag::F52 => "F5/2",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub manifold: ManifoldTag,
    pub j: HalfInt,
    pub mj: HalfInt,
    /// Zeeman energy relative to the manifold centroid, rad/s.
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifold {
    pub tag: ManifoldTag,
    pub j: HalfInt,
    pub g_j: f64,
    pub lifetime: Option<f64>,
    /// Centroid energy above the qudit manifold centroid, rad/s.
    pub transition: f64,
    /// Whether the manifold takes part in default pathway and coupling sets.
    pub enabled: bool,
    pub levels: Vec<Level>,
}

impl Manifold {
    pub fn new(tag: ManifoldTag, g_j: f64, lifetime: Option<f64>, transition: f64, b_field: f64) -> Self {
        let j = tag.j();
        let split = zeeman_splitting(b_field, g_j);
        let levels = (0..=j.twice())
            .map(|k| {
                let mj = HalfInt::from_twice(j.twice() - 2 * k);
                Level {
                    manifold: tag,
                    j,
                    mj,
                    energy: split * mj.value(),
                }
            })
            .collect();
        Manifold {
            tag,
            j,
            g_j,
            lifetime,
            transition,
            enabled: true,
            levels,
        }
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn index_of(&self, mj: HalfInt) -> Option<usize> {
        let k = self.j.twice() - mj.twice();
        if k < 0 || k % 2 != 0 || k / 2 >= self.levels.len() as i32 {
            None
        } else {
            Some((k / 2) as usize)
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn decay_rate(&self) -> Option<f64> {
        self.lifetime.map(|t| 1.0 / t)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedElement {
    pub a: ManifoldTag,
    pub b: ManifoldTag,
    /// Reduced dipole matrix element, atomic units.
    pub value: f64,
}

/// Atomic structure: the qudit manifold, the dipole-coupled manifolds above
/// it and the reduced matrix elements linking them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub b_field: f64,
    pub lower: Manifold,
    pub uppers: Vec<Manifold>,
    pub others: Vec<Manifold>,
    pub reduced: Vec<ReducedElement>,
    /// Beam detunings are quoted from this manifold's resonance.
    pub reference: ManifoldTag,
}

pub const CA40_OMEGA0: f64 = 2.0 * std::f64::consts::PI * 2.63e6;
pub const CA40_P32_WAVELENGTH: f64 = 854.209e-9;
/// Preset laser detuning from the D5/2 ↔ P3/2 resonance.
pub const CA40_DETUNING: f64 = -2.0 * std::f64::consts::PI * 44e12;
/// F-manifold resonance above P3/2 chosen so the preset laser sits 1322 THz
/// red of D5/2 ↔ F7/2.
const CA40_F_ABOVE_P: f64 = 2.0 * std::f64::consts::PI * 1278e12;

impl Atom {
    /// ⁴⁰Ca⁺ with the qudit in D5/2, ω0 = 2π × 2.63 MHz.
    pub fn ca40() -> Self {
        Self::ca40_with_splitting(CA40_OMEGA0)
    }

    /// ⁴⁰Ca⁺ with a chosen D5/2 Zeeman splitting (rad/s); the field is derived.
    pub fn ca40_with_splitting(omega0: f64) -> Self {
        let g_d = 6.0 / 5.0;
        let b = omega0 * HBAR / (g_d * BOHR_MAGNETON);
        let w_p = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / CA40_P32_WAVELENGTH;
        let lower = Manifold::new(ManifoldTag::D52, g_d, Some(1.168), 0.0, b);
        let p = Manifold::new(ManifoldTag::P32, 4.0 / 3.0, Some(6.64e-9), w_p, b);
        let f7 = Manifold::new(ManifoldTag::F72, 8.0 / 7.0, None, w_p + CA40_F_ABOVE_P, b);
        let mut f5 = Manifold::new(ManifoldTag::F52, 6.0 / 7.0, None, w_p + CA40_F_ABOVE_P, b);
        f5.enabled = false;
        let s = Manifold::new(ManifoldTag::S12, 2.0, None, -thz(411.042), b);
        Atom {
            b_field: b,
            lower,
            uppers: vec![p, f7, f5],
            others: vec![s],
            reduced: vec![
                ReducedElement { a: ManifoldTag::D52, b: ManifoldTag::P32, value: 3.283 },
                ReducedElement { a: ManifoldTag::D52, b: ManifoldTag::F72, value: 2.309 },
                ReducedElement { a: ManifoldTag::D52, b: ManifoldTag::F52, value: 0.5164 },
            ],
            reference: ManifoldTag::P32,
        }
    }

    /// The preset with every manifold rebuilt for field `b_field` (tesla).
    pub fn with_field(&self, b_field: f64) -> Self {
        let rebuild = |m: &Manifold| {
            let mut n = Manifold::new(m.tag, m.g_j, m.lifetime, m.transition, b_field);
            n.enabled = m.enabled;
            n
        };
        Atom {
            b_field,
            lower: rebuild(&self.lower),
            uppers: self.uppers.iter().map(rebuild).collect(),
            others: self.others.iter().map(rebuild).collect(),
            reduced: self.reduced.clone(),
            reference: self.reference,
        }
    }

    /// Zeeman splitting of the qudit manifold, rad/s.
    pub fn omega0(&self) -> f64 {
        zeeman_splitting(self.b_field, self.lower.g_j)
    }

    pub fn manifold(&self, tag: ManifoldTag) -> Option<&Manifold> {
        std::iter::once(&self.lower)
            .chain(&self.uppers)
            .chain(&self.others)
            .find(|m| m.tag == tag)
    }

    pub fn upper(&self, tag: ManifoldTag) -> Result<&Manifold> {
        self.uppers
            .iter()
            .find(|m| m.tag == tag)
            .ok_or_else(|| Error::invalid(format!("{tag} is not an upper manifold of this atom")))
    }

    pub fn reduced_element(&self, a: ManifoldTag, b: ManifoldTag) -> Option<f64> {
        self.reduced
            .iter()
            .find(|r| (r.a == a && r.b == b) || (r.a == b && r.b == a))
            .map(|r| r.value)
    }

    /// Upper manifolds coupled to the qudit manifold: the reference manifold
    /// always, enabled F manifolds when `include_f`.
    pub fn coupled_uppers(&self, include_f: bool) -> Vec<&Manifold> {
        self.uppers
            .iter()
            .filter(|m| self.reduced_element(self.lower.tag, m.tag).is_some())
            .filter(|m| m.tag == self.reference || (include_f && m.enabled && m.tag.is_f()))
            .collect()
    }

    fn reference_transition(&self) -> f64 {
        self.manifold(self.reference).map_or(0.0, |m| m.transition)
    }

    /// Centroid detuning of `beam` from the qudit ↔ `upper` resonance (no
    /// Zeeman or frequency-offset terms), rad/s.
    pub fn manifold_detuning(&self, beam: &Beam, upper: &Manifold) -> f64 {
        beam.detuning + self.reference_transition() - upper.transition
    }

    /// Detuning of `beam` from the specific `lower` → `upper` sublevel
    /// transition, including Zeeman energies and the beam's frequency offset.
    pub fn level_detuning(&self, beam: &Beam, upper: &Manifold, lower_index: usize, upper_index: usize) -> f64 {
        self.manifold_detuning(beam, upper) + beam.frequency_offset + self.lower.levels[lower_index].energy
            - upper.levels[upper_index].energy
    }

    /// Apply overrides from a key-value document on top of `self`.
    ///
    /// Recognized keys: `atom.omega0_hz`, `atom.b_gauss`, `<m>.g`,
    /// `<m>.lifetime_s`, `<m>.transition_thz`, `<m>.enabled` for
    /// `m ∈ {d52, p32, f72, f52, s12}`, and `reduced.<a>_<b>` in atomic units.
    pub fn apply_overrides(&self, doc: &KvDoc) -> Result<Self> {
        let mut atom = self.clone();
        let tags = [ManifoldTag::D52, ManifoldTag::P32, ManifoldTag::F72, ManifoldTag::F52, ManifoldTag::S12];
        for tag in tags {
            let key = tag.key();
            let apply = |m: &mut Manifold| -> Result<()> {
                if let Some(g) = doc.f64_opt(&format!("{key}.g"))? {
                    m.g_j = g;
                }
                if let Some(t) = doc.f64_opt(&format!("{key}.lifetime_s"))? {
                    if t <= 0.0 {
                        return Err(doc.config_error(&format!("{key}.lifetime_s"), "lifetime must be positive"));
                    }
                    m.lifetime = Some(t);
                }
                if let Some(f) = doc.f64_opt(&format!("{key}.transition_thz"))? {
                    m.transition = thz(f);
                }
                m.enabled = doc.bool_or(&format!("{key}.enabled"), m.enabled)?;
                Ok(())
            };
            if atom.lower.tag == tag {
                apply(&mut atom.lower)?;
            }
            for m in atom.uppers.iter_mut().chain(atom.others.iter_mut()) {
                if m.tag == tag {
                    apply(m)?;
                }
            }
        }
        for (key, _) in doc.entries() {
            if let Some(pair) = key.strip_prefix("reduced.") {
                let parse = |s: &str| tags.into_iter().find(|t| t.key() == s);
                let (a, b) = pair
                    .split_once('_')
                    .and_then(|(a, b)| Some((parse(a)?, parse(b)?)))
                    .ok_or_else(|| doc.config_error(key, "expected reduced.<manifold>_<manifold>"))?;
                if !a.dipole_connected(b) {
                    return Err(doc.config_error(key, format!("{a} and {b} are not dipole connected")));
                }
                let value = doc.f64_opt(key)?.unwrap_or_default();
                atom.reduced.retain(|r| !((r.a == a && r.b == b) || (r.a == b && r.b == a)));
                atom.reduced.push(ReducedElement { a, b, value });
            }
        }
        let b = if let Some(w) = doc.f64_opt("atom.omega0_hz")? {
            if w < 0.0 {
                return Err(doc.config_error("atom.omega0_hz", "must be non-negative"));
            }
            hz(w) * HBAR / (atom.lower.g_j * BOHR_MAGNETON)
        } else if let Some(g) = doc.f64_opt("atom.b_gauss")? {
            if g < 0.0 {
                return Err(doc.config_error("atom.b_gauss", "must be non-negative"));
            }
            g * 1e-4
        } else {
            atom.b_field
        };
        Ok(atom.with_field(b))
    }
}

/// Zeeman splitting between adjacent sublevels, `g_J μ_B B / ħ` in rad/s.
pub fn zeeman_splitting(b_field: f64, g_j: f64) -> f64 {
    g_j * BOHR_MAGNETON * b_field / HBAR
}

/// Peak electric field of a Gaussian beam with 1/e² intensity radius `waist`.
pub fn peak_field_amplitude(power: f64, waist: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::invalid(format!("waist must be positive, got {waist}")));
    }
    if !(power >= 0.0) {
        return Err(Error::invalid(format!("power must be non-negative, got {power}")));
    }
    Ok((4.0 * power / (std::f64::consts::PI * waist * waist * EPSILON_0 * SPEED_OF_LIGHT)).sqrt())
}

/// Angular factor `<J' mJ' | J mJ; 1 q>` for `lower` (J, mJ) → `upper` (J', mJ').
pub fn coupling_coefficient(lower: &Level, upper: &Level, q: i32) -> Result<f64> {
    if !lower.manifold.dipole_connected(upper.manifold) {
        return Err(Error::invalid(format!(
            "{} and {} are not dipole connected",
            lower.manifold, upper.manifold
        )));
    }
    if !(-1..=1).contains(&q) {
        return Err(Error::invalid(format!("q must be -1, 0 or +1, got {q}")));
    }
    if upper.mj.twice() != lower.mj.twice() + 2 * q {
        return Ok(0.0);
    }
    Ok(clebsch_gordan(
        lower.j,
        lower.mj,
        HalfInt::from_twice(2),
        HalfInt::from_twice(2 * q),
        upper.j,
        upper.mj,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamLabel {
    Parallel,
    Perpendicular,
    Custom(String),
}

impl fmt::Display for BeamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeamLabel::Parallel => f.write_str("par"),
            BeamLabel::Perpendicular => f.write_str("perp"),
            BeamLabel::Custom(s) => f.write_str(s),
        }
    }
}

/// Spherical polarization amplitudes `(e_σ−, e_π, e_σ+)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polarization([C64; 3]);

impl Polarization {
    pub fn new(sigma_minus: C64, pi: C64, sigma_plus: C64) -> Result<Self> {
        let norm: f64 = [sigma_minus, pi, sigma_plus].iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("polarization norm² is {norm}, expected 1")));
        }
        Ok(Polarization([sigma_minus, pi, sigma_plus]))
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(sigma_minus: C64, pi: C64, sigma_plus: C64) -> Result<Self> {
        let norm: f64 = [sigma_minus, pi, sigma_plus].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("polarization amplitudes are all zero"));
        }
        Ok(Polarization([sigma_minus / norm, pi / norm, sigma_plus / norm]))
    }

    /// Real non-negative amplitudes from intensity fractions (renormalized).
    pub fn from_fractions(f_minus: f64, f_pi: f64, f_plus: f64) -> Result<Self> {
        if [f_minus, f_pi, f_plus].iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::invalid("polarization fractions must be non-negative"));
        }
        Self::normalized(f_minus.sqrt().into(), f_pi.sqrt().into(), f_plus.sqrt().into())
    }

    /// A beam propagating perpendicular to the field axis, linearly polarized
    /// in the plane spanned by the field and the other transverse axis
    /// (propagation along ŷ): `e_σ+ = −e_σ−` real, `e_π` real.
    /// Unequal σ± fractions add the corresponding ellipticity.
    pub fn transverse(f_minus: f64, f_pi: f64, f_plus: f64) -> Result<Self> {
        let p = Self::from_fractions(f_minus, f_pi, f_plus)?;
        Ok(Polarization([p.0[0], p.0[1], -p.0[2]]))
    }

    pub fn sigma_minus() -> Self {
        Polarization([C64::from(1.0), C64::from(0.0), C64::from(0.0)])
    }

    pub fn pi() -> Self {
        Polarization([C64::from(0.0), C64::from(1.0), C64::from(0.0)])
    }

    pub fn sigma_plus() -> Self {
        Polarization([C64::from(0.0), C64::from(0.0), C64::from(1.0)])
    }

    /// Amplitude of spherical component `q ∈ {−1, 0, +1}`.
    pub fn component(&self, q: i32) -> C64 {
        self.0[(q + 1) as usize]
    }

    pub fn amplitudes(&self) -> [C64; 3] {
        self.0
    }

    /// Intensity fractions `(f_σ−, f_π, f_σ+)`.
    pub fn fractions(&self) -> [f64; 3] {
        [self.0[0].norm_sqr(), self.0[1].norm_sqr(), self.0[2].norm_sqr()]
    }
}

/// A classical laser field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub label: BeamLabel,
    /// Detuning from the reference manifold resonance, rad/s (signed).
    pub detuning: f64,
    pub power: f64,
    /// 1/e² intensity radius, m.
    pub waist: f64,
    pub polarization: Polarization,
    /// Drive frequency relative to the reference beam, rad/s.
    pub frequency_offset: f64,
}

impl Beam {
    pub fn new(
        label: BeamLabel,
        detuning: f64,
        power: f64,
        waist: f64,
        polarization: Polarization,
        frequency_offset: f64,
    ) -> Result<Self> {
        if !(waist > 0.0) {
            return Err(Error::invalid(format!("waist must be positive, got {waist}")));
        }
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::invalid(format!("power must be non-negative, got {power}")));
        }
        if !detuning.is_finite() || !frequency_offset.is_finite() {
            return Err(Error::invalid("detuning and frequency offset must be finite"));
        }
        Ok(Beam {
            label,
            detuning,
            power,
            waist,
            polarization,
            frequency_offset,
        })
    }

    pub fn with_power(&self, power: f64) -> Self {
        Beam { power, ..self.clone() }
    }

    pub fn with_offset(&self, frequency_offset: f64) -> Self {
        Beam {
            frequency_offset,
            ..self.clone()
        }
    }

    pub fn peak_field(&self) -> f64 {
        peak_field_amplitude(self.power, self.waist).expect("beam invariants checked at construction")
    }
}

/// Set the drive offset of every non-reference beam to `omega_r`. A beam is
/// non-reference if it already carries a non-zero offset or is labelled
/// perpendicular.
pub fn retune(beams: &[Beam], omega_r: f64) -> Vec<Beam> {
    beams
        .iter()
        .map(|b| {
            if b.frequency_offset != 0.0 || b.label == BeamLabel::Perpendicular {
                b.with_offset(omega_r)
            } else {
                b.clone()
            }
        })
        .collect()
}

/// Single-photon Rabi frequencies of one beam between two manifolds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiMatrix {
    pub beam: BeamLabel,
    pub lower: ManifoldTag,
    pub upper: ManifoldTag,
    lower_j: HalfInt,
    upper_j: HalfInt,
    /// Rows: lower sublevel index; columns: upper sublevel index.
    pub entries: DMatrix<C64>,
}

impl RabiMatrix {
    pub fn get(&self, lower_index: usize, upper_index: usize) -> C64 {
        self.entries[(lower_index, upper_index)]
    }

    pub fn get_mj(&self, lower_mj: HalfInt, upper_mj: HalfInt) -> C64 {
        let li = (self.lower_j.twice() - lower_mj.twice()) / 2;
        let ui = (self.upper_j.twice() - upper_mj.twice()) / 2;
        if li < 0 || ui < 0 || li as usize >= self.entries.nrows() || ui as usize >= self.entries.ncols() {
            return C64::from(0.0);
        }
        self.entries[(li as usize, ui as usize)]
    }

    pub fn scaled(&self, factor: C64) -> Self {
        RabiMatrix {
            entries: self.entries.map(|z| z * factor),
            ..self.clone()
        }
    }

    pub fn conj(&self) -> Self {
        RabiMatrix {
            entries: self.entries.map(|z| z.conj()),
            ..self.clone()
        }
    }
}

/// `Ω_ij = (E0/ħ) ⟨upper||d||lower⟩ <J' mJ'|J mJ; 1 q> e_q` with `q = mJ' − mJ`.
pub fn rabi_matrix(atom: &Atom, beam: &Beam, lower: &Manifold, upper: &Manifold) -> Result<RabiMatrix> {
    if !lower.tag.dipole_connected(upper.tag) {
        return Err(Error::invalid(format!("{} and {} are not dipole connected", lower.tag, upper.tag)));
    }
    let reduced = atom
        .reduced_element(lower.tag, upper.tag)
        .ok_or_else(|| Error::invalid(format!("no reduced element between {} and {}", lower.tag, upper.tag)))?;
    let scale = beam.peak_field() * reduced * ATOMIC_DIPOLE / HBAR;
    let mut entries = DMatrix::from_element(lower.dim(), upper.dim(), C64::from(0.0));
    for (i, l) in lower.levels.iter().enumerate() {
        for (e, u) in upper.levels.iter().enumerate() {
            let dq = u.mj.twice() - l.mj.twice();
            if dq.abs() > 2 {
                continue;
            }
            let q = dq / 2;
            let amp = beam.polarization.component(q);
            if amp == C64::from(0.0) {
                continue;
            }
            let cg = coupling_coefficient(l, u, q)?;
            entries[(i, e)] = amp * (scale * cg);
        }
    }
    Ok(RabiMatrix {
        beam: beam.label.clone(),
        lower: lower.tag,
        upper: upper.tag,
        lower_j: lower.j,
        upper_j: upper.j,
        entries,
    })
}

/// Rabi matrices of every beam to every coupled upper manifold.
#[derive(Clone, Debug)]
pub struct CouplingSet {
    pub beams: Vec<Beam>,
    /// `matrices[b][u]` couples beam `b` to `uppers[u]`.
    pub matrices: Vec<Vec<RabiMatrix>>,
    pub uppers: Vec<ManifoldTag>,
}

impl CouplingSet {
    pub fn new(atom: &Atom, beams: &[Beam], include_f: bool) -> Result<Self> {
        let uppers: Vec<&Manifold> = atom.coupled_uppers(include_f);
        let matrices = beams
            .iter()
            .map(|b| uppers.iter().map(|u| rabi_matrix(atom, b, &atom.lower, u)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(CouplingSet {
            beams: beams.to_vec(),
            matrices,
            uppers: uppers.iter().map(|u| u.tag).collect(),
        })
    }

    pub fn matrix(&self, beam: usize, upper: ManifoldTag) -> Option<&RabiMatrix> {
        let u = self.uppers.iter().position(|&t| t == upper)?;
        self.matrices.get(beam).map(|m| &m[u])
    }

    pub fn omega(&self, beam: usize, upper: ManifoldTag, lower_index: usize, upper_index: usize) -> C64 {
        self.matrix(beam, upper).map_or(C64::from(0.0), |m| m.get(lower_index, upper_index))
    }

    pub fn map(&self, f: impl Fn(usize, C64) -> C64) -> Self {
        let matrices = self
            .matrices
            .iter()
            .enumerate()
            .map(|(b, row)| {
                row.iter()
                    .map(|m| RabiMatrix {
                        entries: m.entries.map(|z| f(b, z)),
                        ..m.clone()
                    })
                    .collect()
            })
            .collect();
        CouplingSet {
            beams: self.beams.clone(),
            matrices,
            uppers: self.uppers.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_is_equally_spaced_and_ordered() {
        let atom = Atom::ca40();
        let e = atom.lower.energies();
        let w0 = atom.omega0();
        assert_eq!(e.len(), 6);
        for k in 0..5 {
            assert!(((e[k] - e[k + 1]) - w0).abs() < 1e-9 * w0);
        }
        assert_eq!(atom.lower.levels[0].mj, HalfInt::from_twice(5));
        assert_eq!(atom.lower.index_of(HalfInt::from_twice(-1)), Some(3));
        assert_eq!(atom.lower.index_of(HalfInt::from_twice(7)), None);
    }

    #[test]
    fn preset_field_and_detunings() {
        let atom = Atom::ca40();
        assert!((atom.b_field - 1.566e-4).abs() < 2e-7);
        let beam = Beam::new(BeamLabel::Parallel, CA40_DETUNING, 0.1, 30e-6, Polarization::sigma_minus(), 0.0).unwrap();
        let f = atom.upper(ManifoldTag::F72).unwrap();
        assert!((atom.manifold_detuning(&beam, f) - thz(-1322.0)).abs() < thz(1e-6));
        let p = atom.upper(ManifoldTag::P32).unwrap();
        assert!((atom.manifold_detuning(&beam, p) - CA40_DETUNING).abs() < 1.0);
        assert_eq!(atom.coupled_uppers(false).len(), 1);
        assert_eq!(atom.coupled_uppers(true).len(), 2);
    }

    #[test]
    fn dipole_connectivity() {
        use ManifoldTag::*;
        assert!(D52.dipole_connected(P32));
        assert!(D52.dipole_connected(F72));
        assert!(D52.dipole_connected(F52));
        assert!(!D52.dipole_connected(S12));
        assert!(!P32.dipole_connected(F72));
        assert!(!D52.dipole_connected(D52));
    }

    #[test]
    fn overrides() {
        let doc = KvDoc::parse("atom.omega0_hz = 1e6\np32.lifetime_s = 7e-9\nreduced.d52_p32 = 3.0\nf52.enabled = true").unwrap();
        let atom = Atom::ca40().apply_overrides(&doc).unwrap();
        assert!((atom.omega0() - hz(1e6)).abs() < 1e-6);
        assert_eq!(atom.upper(ManifoldTag::P32).unwrap().lifetime, Some(7e-9));
        assert_eq!(atom.reduced_element(ManifoldTag::P32, ManifoldTag::D52), Some(3.0));
        assert_eq!(atom.coupled_uppers(true).len(), 3);
        let bad = KvDoc::parse("\nreduced.d52_s12 = 1").unwrap();
        assert!(matches!(Atom::ca40().apply_overrides(&bad), Err(Error::Config { line: 2, .. })));
    }
}
