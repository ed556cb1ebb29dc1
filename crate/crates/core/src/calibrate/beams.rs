//! Beam waist and polarization calibration from splitting and Rabi data.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetKind};
use super::lm::{levenberg_marquardt, FitResult, LmSettings, Problem};
use crate::dynamics::{build_effective_hamiltonian, two_photon_coupling, PropagationSettings};
use crate::error::{Error, Result};
use crate::manifold::{retune, Atom, Beam, BeamLabel, Polarization, CA40_DETUNING};
use crate::stark::{dressed_splittings, shift_table, ShiftMethod};
use crate::C64;

/// Parallel- and perpendicular-beam parameters fitted jointly. The parallel
/// polarization is held as real amplitudes; the σ⁻ amplitude follows from
/// normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub par_waist: f64,
    pub perp_waist: f64,
    pub par_sigma_plus: f64,
    /// Signed: the π amplitude interferes linearly in Raman couplings.
    pub par_pi: f64,
}

impl BeamParams {
    pub fn from_fractions(par_waist: f64, perp_waist: f64, f_pi: f64, f_plus: f64) -> Self {
        BeamParams {
            par_waist,
            perp_waist,
            par_sigma_plus: f_plus.sqrt(),
            par_pi: f_pi.sqrt(),
        }
    }

    /// Parallel-beam intensity fractions (σ⁻, π, σ⁺).
    pub fn par_fractions(&self) -> [f64; 3] {
        let p = self.par_pi.powi(2);
        let s = self.par_sigma_plus.powi(2);
        [1.0 - p - s, p, s]
    }

    pub fn par_polarization(&self) -> Result<Polarization> {
        let f_minus = 1.0 - self.par_pi.powi(2) - self.par_sigma_plus.powi(2);
        if f_minus < 0.0 {
            return Err(Error::invalid("polarization amplitudes exceed unit norm"));
        }
        Polarization::new(C64::from(f_minus.sqrt()), C64::from(self.par_pi), C64::from(self.par_sigma_plus))
    }

    pub fn parallel_beam(&self, power: f64, detuning: f64) -> Result<Beam> {
        Beam::new(BeamLabel::Parallel, detuning, power, self.par_waist, self.par_polarization()?, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamFitSetup {
    /// Parallel-beam power held fixed during the Rabi series, W.
    pub par_power: f64,
    /// Perpendicular-beam polarization, constrained separately.
    pub perp_polarization: Polarization,
    pub detuning: f64,
    pub include_f: bool,
    pub propagation: PropagationSettings,
    pub initial: BeamParams,
    pub lm: LmSettings,
}

impl BeamFitSetup {
    pub fn new(perp_polarization: Polarization) -> Self {
        BeamFitSetup {
            par_power: 0.195,
            perp_polarization,
            detuning: CA40_DETUNING,
            include_f: true,
            // A fixed step count per period keeps the model smooth for
            // finite-difference Jacobians.
            propagation: PropagationSettings {
                min_steps_per_period: 2048,
                ..PropagationSettings::default()
            },
            initial: BeamParams {
                par_waist: 30e-6,
                perp_waist: 30e-6,
                par_sigma_plus: 0.1f64.sqrt(),
                par_pi: 0.0,
            },
            lm: LmSettings::default(),
        }
    }

    pub fn perpendicular_beam(&self, params: &BeamParams, power: f64, omega_r: f64) -> Result<Beam> {
        Beam::new(
            BeamLabel::Perpendicular,
            self.detuning,
            power,
            params.perp_waist,
            self.perp_polarization,
            omega_r,
        )
    }
}

/// Splitting `E_upper − E_lower` (rad/s) with only the parallel beam on,
/// from second-order shifts.
pub fn model_splitting(
    atom: &Atom,
    params: &BeamParams,
    setup: &BeamFitSetup,
    par_power: f64,
    upper: usize,
    lower: usize,
) -> Result<f64> {
    let beam = params.parallel_beam(par_power, setup.detuning)?;
    let s = dressed_splittings(atom, &[beam], setup.include_f)?;
    Ok(s.omega(upper, lower))
}

/// Two-photon `0 ↔ 1` Rabi frequency (rad/s) at the Stark-shifted
/// resonance, from the one-period Floquet Hamiltonian. Resonant four-photon
/// corrections are included automatically.
pub fn model_two_photon_rabi(atom: &Atom, params: &BeamParams, setup: &BeamFitSetup, perp_power: f64) -> Result<f64> {
    let beams = vec![
        params.parallel_beam(setup.par_power, setup.detuning)?,
        setup.perpendicular_beam(params, perp_power, atom.omega0())?,
    ];
    // Second-order shifts barely depend on the beat frequency, so one
    // evaluation gives the resonance; this keeps the model smooth in the
    // parameters.
    let omega_r = dressed_splittings(atom, &beams, setup.include_f)?.omega(0, 1);
    let h = build_effective_hamiltonian(atom, &retune(&beams, omega_r), setup.include_f)?;
    two_photon_coupling(&h, 0, 1, &setup.propagation)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamFit {
    pub fit: FitResult,
    pub params: BeamParams,
}

/// Joint inverse-variance-weighted fit of splitting series (parallel beam
/// only) and the two-photon Rabi series. Without a Rabi series only the
/// parallel-beam parameters are fitted, which the splittings cannot fix.
pub fn joint_fit_beams(atom: &Atom, splittings: &[Dataset], rabi: Option<&Dataset>, setup: &BeamFitSetup) -> Result<BeamFit> {
    for d in splittings {
        if !matches!(d.kind, DatasetKind::Splitting { .. }) {
            return Err(Error::invalid(format!("expected splitting datasets, got {:?}", d.kind)));
        }
    }
    if let Some(r) = rabi {
        if r.kind != DatasetKind::RabiVsPower {
            return Err(Error::invalid(format!("expected a Rabi-vs-power dataset, got {:?}", r.kind)));
        }
    }
    let with_rabi = rabi.is_some();
    let init = setup.initial;
    let fixed_perp = init.perp_waist;
    let unpack = move |p: &[f64]| -> Result<BeamParams> {
        let (vector, tensor, perp_waist, par_pi) = if with_rabi {
            (p[0], p[1], p[2].exp(), p[3])
        } else {
            (p[0], p[1], fixed_perp, p[2])
        };
        ParallelCombos { vector, tensor, par_pi }.to_params(perp_waist)
    };
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        let params = unpack(p)?;
        params.par_polarization()?;
        let mut out = Vec::new();
        for d in splittings {
            let DatasetKind::Splitting { upper, lower } = d.kind else { unreachable!() };
            for q in &d.points {
                out.push((q.y - model_splitting(atom, &params, setup, q.x, upper, lower)?) / q.sigma);
            }
        }
        if let Some(r) = rabi {
            let model: Vec<f64> = r
                .points
                .par_iter()
                .map(|q| model_two_photon_rabi(atom, &params, setup, q.x))
                .collect::<Result<_>>()?;
            out.extend(r.points.iter().zip(model).map(|(q, m)| (q.y - m) / q.sigma));
        }
        Ok(out)
    };
    if !(init.par_waist > 0.0 && init.perp_waist > 0.0) {
        return Err(Error::invalid("initial waists must be positive"));
    }
    let c0 = ParallelCombos::from_params(&init);
    let (names, x0, scales) = if with_rabi {
        (
            vec!["par_waist_m", "perp_waist_m", "par_sigma_plus_amplitude", "par_pi_amplitude"],
            vec![c0.vector, c0.tensor, init.perp_waist.ln(), c0.par_pi],
            vec![COMBO_SCALE, COMBO_SCALE, 1.0, 1.0],
        )
    } else {
        (
            vec!["par_waist_m", "par_sigma_plus_amplitude", "par_pi_amplitude"],
            vec![c0.vector, c0.tensor, c0.par_pi],
            vec![COMBO_SCALE, COMBO_SCALE, 1.0],
        )
    };
    let names: Vec<String> = names.into_iter().map(String::from).collect();
    let problem = Problem {
        names: names.clone(),
        scales,
        residuals: &residuals,
    };
    let internal = levenberg_marquardt(&problem, &x0, &setup.lm)?;
    let params = unpack(&internal.values)?;
    let physical = |p: &BeamParams| -> Vec<f64> {
        if with_rabi {
            vec![p.par_waist, p.perp_waist, p.par_sigma_plus, p.par_pi]
        } else {
            vec![p.par_waist, p.par_sigma_plus, p.par_pi]
        }
    };
    // Propagate the covariance through the change of variables.
    let n = x0.len();
    let values = physical(&params);
    let mut jac = vec![vec![0.0; n]; n];
    for k in 0..n {
        let h = 1e-6 * problem.scales[k].max(internal.values[k].abs());
        let mut up = internal.values.clone();
        up[k] += h;
        let mut dn = internal.values.clone();
        dn[k] -= h;
        let (a, b) = (physical(&unpack(&up)?), physical(&unpack(&dn)?));
        for i in 0..n {
            jac[i][k] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    let covariance: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .flat_map(|a| (0..n).map(move |b| (a, b)))
                        .map(|(a, b)| jac[i][a] * internal.covariance[a][b] * jac[j][b])
                        .sum()
                })
                .collect()
        })
        .collect();
    let fit = FitResult {
        names,
        uncertainties: (0..n).map(|k| covariance[k][k].max(0.0).sqrt()).collect(),
        values,
        covariance,
        ..internal
    };
    Ok(BeamFit { fit, params })
}

/// Scale of the intensity-weighted combinations, µm⁻².
const COMBO_SCALE: f64 = 1e-3;

/// Fit coordinates for the parallel beam. The splittings respond to the
/// rank-1 and rank-2 parts of the intensity, `(f₊ − f₋)/w²` and
/// `(1 − 3f_π)/w²` with `w` in µm, so fitting these directly keeps the
/// residuals close to linear.
#[derive(Clone, Copy, Debug)]
struct ParallelCombos {
    vector: f64,
    tensor: f64,
    par_pi: f64,
}

impl ParallelCombos {
    fn from_params(p: &BeamParams) -> Self {
        let [minus, pi, plus] = p.par_fractions();
        let w2 = (p.par_waist * 1e6).powi(2);
        ParallelCombos {
            vector: (plus - minus) / w2,
            tensor: (1.0 - 3.0 * pi) / w2,
            par_pi: p.par_pi,
        }
    }

    fn to_params(self, perp_waist: f64) -> Result<BeamParams> {
        let pi = self.par_pi.powi(2);
        let w2 = (1.0 - 3.0 * pi) / self.tensor;
        if !(w2 > 0.0) || !w2.is_finite() {
            return Err(Error::invalid("parallel-beam combination has no positive waist"));
        }
        let plus = 0.5 * (1.0 - pi + self.vector * w2);
        let minus = 0.5 * (1.0 - pi - self.vector * w2);
        if plus < 0.0 || minus < 0.0 {
            return Err(Error::invalid("parallel-beam combination gives negative fractions"));
        }
        Ok(BeamParams {
            par_waist: w2.sqrt() * 1e-6,
            perp_waist,
            par_sigma_plus: plus.sqrt(),
            par_pi: self.par_pi,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerpConstraint {
    /// Intensity fractions (σ⁻, π, σ⁺) with equal σ components.
    pub fractions: [f64; 3],
    pub pi_uncertainty: f64,
}

/// Second-order `0 ↔ 1` differential shift (Hz) of a lone perpendicular
/// beam with π fraction `f_pi` and equal σ fractions: the change in
/// `E_0 − E_1`.
pub fn perp_differential_shift(atom: &Atom, f_pi: f64, power: f64, waist: f64, include_f: bool) -> Result<f64> {
    let side = 0.5 * (1.0 - f_pi);
    let beam = Beam::new(
        BeamLabel::Perpendicular,
        CA40_DETUNING,
        power,
        waist,
        Polarization::transverse(side, f_pi, side)?,
        0.0,
    )?;
    let t = shift_table(atom, &[beam], include_f, ShiftMethod::SecondOrder)?;
    Ok(t.differential(0, 1) / TAU)
}

/// π fraction of the perpendicular beam reproducing a measured `0 ↔ 1`
/// differential shift, assuming equal σ⁺ and σ⁻ fractions. The shift is
/// linear in the π fraction along that line.
pub fn constrain_perp_polarization(
    atom: &Atom,
    shift_hz: f64,
    shift_uncertainty_hz: f64,
    power: f64,
    waist: f64,
) -> Result<PerpConstraint> {
    let a = perp_differential_shift(atom, 0.0, power, waist, true)?;
    let b = perp_differential_shift(atom, 1.0, power, waist, true)? - a;
    if b == 0.0 {
        return Err(Error::InconsistentMeasurement("differential shift does not depend on the π fraction".into()));
    }
    let f_pi = (shift_hz - a) / b;
    if !(0.0..=1.0).contains(&f_pi) {
        return Err(Error::InconsistentMeasurement(format!(
            "a {shift_hz:.4e} Hz shift requires a π fraction of {f_pi:.4}"
        )));
    }
    let side = 0.5 * (1.0 - f_pi);
    Ok(PerpConstraint {
        fractions: [side, f_pi, side],
        pi_uncertainty: (shift_uncertainty_hz / b).abs(),
    })
}
