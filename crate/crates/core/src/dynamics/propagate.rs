//! Time propagation with a fourth-order commutator-free Magnus integrator.
//!
//! On constant-envelope stretches the Hamiltonian is periodic with the base
//! drive period `T`; the one-period propagator is computed once and reused,
//! `U(a + nT + s) = U(s) U(T)^n`. Ramped stretches are stepped directly.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::envelope::PulseEnvelope;
use super::hamiltonian::EffectiveHamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{expi_hermitian, hermitian_eigen, CMat, CVec};
use crate::manifold::Beam;
use crate::C64;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const CF4_A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const CF4_C1: f64 = 0.5 - SQRT3 / 6.0;
const CF4_C2: f64 = 0.5 + SQRT3 / 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationSettings {
    /// Upper bound on (‖H‖ + max beat)·dt, rad.
    pub max_phase: f64,
    pub min_steps_per_period: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        PropagationSettings {
            max_phase: 0.05,
            min_steps_per_period: 256,
        }
    }
}

impl PropagationSettings {
    /// Same settings with every step halved.
    pub fn refined(&self) -> Self {
        PropagationSettings {
            max_phase: self.max_phase / 2.0,
            min_steps_per_period: self.min_steps_per_period * 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub beams: Vec<Beam>,
    pub envelope: PulseEnvelope,
    /// Base drive frequency, rad/s (absent for static Hamiltonians).
    pub base_frequency: Option<f64>,
    /// Integrator step on the finest stretch, s.
    pub step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Rows: samples; columns: levels.
    pub amplitudes: DMatrix<C64>,
    pub populations: DMatrix<f64>,
    pub metadata: TrajectoryMetadata,
}

impl Trajectory {
    pub fn levels(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn population(&self, level: usize) -> Vec<f64> {
        self.populations.column(level).iter().copied().collect()
    }

    pub fn final_populations(&self) -> Vec<f64> {
        let last = self.populations.nrows() - 1;
        self.populations.row(last).iter().copied().collect()
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.populations
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t_s,P0,...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_s");
        for k in 0..self.levels() {
            s.push_str(&format!(",P{k}"));
        }
        s.push('\n');
        for (r, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.9e}"));
            for k in 0..self.levels() {
                s.push_str(&format!(",{:.12e}", self.populations[(r, k)]));
            }
            s.push('\n');
        }
        s
    }
}

/// One CF4 step from `t` to `t + dt`; `env(t)` gives beam amplitudes.
pub(crate) fn cf4_step(h: &EffectiveHamiltonian, env: &dyn Fn(f64) -> Vec<f64>, t: f64, dt: f64) -> CMat {
    let t1 = t + CF4_C1 * dt;
    let t2 = t + CF4_C2 * dt;
    let h1 = h.at(t1, &env(t1));
    let h2 = h.at(t2, &env(t2));
    let first = expi_hermitian(&(&h1 * C64::from(CF4_A2) + &h2 * C64::from(CF4_A1)), dt);
    let second = expi_hermitian(&(&h1 * C64::from(CF4_A1) + &h2 * C64::from(CF4_A2)), dt);
    second * first
}

pub(crate) fn steps_per_period(h: &EffectiveHamiltonian, period: f64, settings: &PropagationSettings) -> usize {
    let rate = h.norm_bound() + h.max_beat();
    ((rate * period / settings.max_phase).ceil() as usize).max(settings.min_steps_per_period)
}

/// Cumulative propagators `U(t0 + r·T/N, t0)` for `r = 0..=N` at constant
/// envelope `env`.
pub(crate) fn period_ladder(h: &EffectiveHamiltonian, env: &[f64], t0: f64, period: f64, n: usize) -> Vec<CMat> {
    let dt = period / n as f64;
    let env_v = env.to_vec();
    let f = move |_t: f64| env_v.clone();
    let mut out = Vec::with_capacity(n + 1);
    let mut u = CMat::identity(h.dim, h.dim);
    out.push(u.clone());
    for r in 0..n {
        u = cf4_step(h, &f, t0 + r as f64 * dt, dt) * u;
        out.push(u.clone());
    }
    out
}

pub fn propagate(
    h: &EffectiveHamiltonian,
    psi0: &[C64],
    duration: f64,
    envelope: &PulseEnvelope,
    samples: usize,
) -> Result<Trajectory> {
    propagate_with(h, psi0, duration, envelope, samples, &PropagationSettings::default())
}

pub fn propagate_with(
    h: &EffectiveHamiltonian,
    psi0: &[C64],
    duration: f64,
    envelope: &PulseEnvelope,
    samples: usize,
    settings: &PropagationSettings,
) -> Result<Trajectory> {
    if psi0.len() != h.dim {
        return Err(Error::InvalidState(format!(
            "state has {} components, Hamiltonian has dimension {}",
            psi0.len(),
            h.dim
        )));
    }
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("initial state norm² is {norm}, expected 1")));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let base = h.base_frequency()?;
    let period = base.map(|w| TAU / w);
    let rate = h.norm_bound() + h.max_beat();
    let mut dt_max = if rate > 0.0 { settings.max_phase / rate } else { duration };
    if let Some(p) = period {
        dt_max = dt_max.min(p / settings.min_steps_per_period as f64);
    }

    let times: Vec<f64> = (0..samples)
        .map(|k| duration * k as f64 / (samples - 1) as f64)
        .collect();
    let mut amps = DMatrix::from_element(samples, h.dim, C64::from(0.0));

    let mut segments: Vec<(f64, f64, bool)> = envelope
        .segments()
        .into_iter()
        .filter(|s| s.0 < duration)
        .map(|(a, b, c)| (a, b.min(duration), c))
        .collect();
    if duration > envelope.duration {
        segments.push((envelope.duration, duration, true));
    }

    let nb = h.n_beams;
    let env_at = |t: f64| envelope.beam_amplitudes(nb, t);
    let mut psi = CVec::from_column_slice(psi0);
    let mut next = 0usize;
    let record = |k: usize, v: &CVec, amps: &mut DMatrix<C64>| {
        for (c, z) in v.iter().enumerate() {
            amps[(k, c)] = *z;
        }
    };

    for (si, &(a, b, constant)) in segments.iter().enumerate() {
        let last = si + 1 == segments.len();
        let in_seg = |t: f64| t <= b || last;
        if constant {
            let env = env_at(0.5 * (a + b));
            let periodic = period.filter(|_| {
                // Couplings may all be switched off on this stretch.
                let probe = h.at(0.123e-9, &env) - h.static_part(&env);
                crate::linalg::max_abs(&probe) > 0.0
            });
            match periodic {
                None => {
                    let (vals, vecs) = hermitian_eigen(&h.static_part(&env));
                    let coeff = vecs.adjoint() * &psi;
                    let evolve = |tau: f64| {
                        let c = CVec::from_iterator(
                            h.dim,
                            coeff.iter().zip(&vals).map(|(c, &l)| c * C64::from_polar(1.0, -l * tau)),
                        );
                        &vecs * c
                    };
                    while next < samples && in_seg(times[next]) {
                        record(next, &evolve(times[next] - a), &mut amps);
                        next += 1;
                    }
                    psi = evolve(b - a);
                }
                Some(p) => {
                    let n = steps_per_period(h, p, settings);
                    let dt = p / n as f64;
                    let ladder = period_ladder(h, &env, a, p, n);
                    let ut = &ladder[n];
                    let env_c = env.clone();
                    let f = move |_t: f64| env_c.clone();
                    let mut m_cur = 0usize;
                    let mut psi_m = psi.clone();
                    let eval = |t: f64, m_cur: &mut usize, psi_m: &mut CVec| {
                        let m = (((t - a) / p).floor().max(0.0)) as usize;
                        while *m_cur < m {
                            *psi_m = ut * &*psi_m;
                            *m_cur += 1;
                        }
                        let rem = t - a - m as f64 * p;
                        let r = ((rem / dt).floor().max(0.0) as usize).min(n);
                        let tg = a + m as f64 * p + r as f64 * dt;
                        let mut v = &ladder[r] * &*psi_m;
                        let partial = t - tg;
                        if partial > 0.0 {
                            v = cf4_step(h, &f, tg, partial) * v;
                        }
                        v
                    };
                    while next < samples && in_seg(times[next]) {
                        let v = eval(times[next], &mut m_cur, &mut psi_m);
                        record(next, &v, &mut amps);
                        next += 1;
                    }
                    psi = eval(b, &mut m_cur, &mut psi_m);
                }
            }
        } else {
            let steps = ((b - a) / dt_max).ceil().max(1.0) as usize;
            let dt = (b - a) / steps as f64;
            for s in 0..steps {
                let t0 = a + s as f64 * dt;
                let t1 = if s + 1 == steps { b } else { t0 + dt };
                while next < samples && times[next] < t1 {
                    let partial = times[next] - t0;
                    let v = if partial > 0.0 { cf4_step(h, &env_at, t0, partial) * &psi } else { psi.clone() };
                    record(next, &v, &mut amps);
                    next += 1;
                }
                psi = cf4_step(h, &env_at, t0, t1 - t0) * psi;
            }
            while next < samples && in_seg(times[next]) && times[next] <= b {
                record(next, &psi, &mut amps);
                next += 1;
            }
        }
    }
    while next < samples {
        record(next, &psi, &mut amps);
        next += 1;
    }

    let populations = amps.map(|z| z.norm_sqr());
    Ok(Trajectory {
        times,
        amplitudes: amps,
        populations,
        metadata: TrajectoryMetadata {
            beams: h.beams.clone(),
            envelope: envelope.clone(),
            base_frequency: base,
            step: dt_max,
        },
    })
}

/// Final state only, without sampling the path.
pub fn final_state(
    h: &EffectiveHamiltonian,
    psi0: &[C64],
    duration: f64,
    envelope: &PulseEnvelope,
    settings: &PropagationSettings,
) -> Result<Vec<C64>> {
    let tr = propagate_with(h, psi0, duration, envelope, 2, settings)?;
    Ok(tr.amplitudes.row(1).iter().copied().collect())
}

/// Basis vector `|k>` of dimension `dim`.
pub fn basis_state(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::from(0.0); dim];
    v[k] = C64::from(1.0);
    v
}
