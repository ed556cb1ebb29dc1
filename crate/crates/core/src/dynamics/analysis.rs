//! Figures of merit extracted from trajectories.

use std::f64::consts::TAU;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::propagate::Trajectory;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiPulseMetrics {
    pub initial: usize,
    pub target: usize,
    /// Target population at the first maximum.
    pub fidelity: f64,
    /// Time of the first maximum, s (parabolic refinement between samples).
    pub pi_time: f64,
    /// Largest total population outside {initial, target} over the whole
    /// trajectory.
    pub max_intermediate: f64,
    /// Total population outside {initial, target} at the first maximum.
    pub final_leakage: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    /// Half-width of the local-maximum test window, s. Defaults to three
    /// base drive periods so beat-note wiggles are not mistaken for the flop
    /// maximum; never shorter than a quarter of the time to the global
    /// maximum.
    pub window: Option<f64>,
    /// Accept a maximum at the last sample (pulse-shaped runs that stop at
    /// the π time).
    pub allow_endpoint: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            window: None,
            allow_endpoint: false,
        }
    }
}

pub fn pi_pulse_metrics(traj: &Trajectory, target: usize) -> Result<PiPulseMetrics> {
    pi_pulse_metrics_with(traj, target, &MetricsOptions::default())
}

pub fn pi_pulse_metrics_with(traj: &Trajectory, target: usize, opts: &MetricsOptions) -> Result<PiPulseMetrics> {
    let n = traj.times.len();
    let dim = traj.levels();
    if target >= dim {
        return Err(Error::invalid(format!("target level {target} out of range")));
    }
    if n < 3 {
        return Err(Error::InsufficientDuration("trajectory has fewer than three samples".into()));
    }
    let first = traj.populations.row(0);
    let initial = (0..dim).max_by(|&a, &b| first[a].total_cmp(&first[b])).unwrap();
    if initial == target {
        return Err(Error::invalid("target level is the initial level"));
    }
    let p = traj.population(target);
    let leak: Vec<f64> = (0..n)
        .map(|r| {
            (0..dim)
                .filter(|&k| k != initial && k != target)
                .map(|k| traj.populations[(r, k)])
                .sum()
        })
        .collect();
    let dt = traj.times[1] - traj.times[0];
    let window = opts.window.unwrap_or_else(|| match traj.metadata.base_frequency {
        Some(w) => 3.0 * TAU / w,
        None => 0.0,
    });
    let (k_peak, peak) = p
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    // Slow exchange with off-resonant levels also ripples the target; the
    // window never drops below a quarter of the time to the global maximum.
    let window = window.max(0.25 * (traj.times[k_peak] - traj.times[0]));
    let w = ((window / dt).round() as usize).max(1);
    let floor = p[0] + 0.5 * (peak - p[0]);
    let mut found = None;
    for k in 1..n {
        if p[k] < floor {
            continue;
        }
        let lo = k.saturating_sub(w);
        let hi = (k + w).min(n - 1);
        if hi < k + w && !opts.allow_endpoint {
            // Not enough trailing data to confirm a maximum.
            break;
        }
        if p[lo..=hi].iter().all(|&x| x <= p[k]) {
            let trailing_ok = hi > k && p[k + 1..=hi].iter().any(|&x| x < p[k]);
            if trailing_ok || (opts.allow_endpoint && k == n - 1) {
                found = Some(k);
                break;
            }
        }
    }
    let k = found.ok_or_else(|| {
        Error::InsufficientDuration(format!(
            "no population maximum of level {target} within {:.4e} s",
            traj.times[n - 1]
        ))
    })?;
    let pi_time = if k > 0 && k + 1 < n {
        let (a, b, c) = (p[k - 1], p[k], p[k + 1]);
        let curv = a - 2.0 * b + c;
        let shift = if curv < 0.0 { (0.5 * (a - c) / curv).clamp(-0.5, 0.5) } else { 0.0 };
        traj.times[k] + shift * dt
    } else {
        traj.times[k]
    };
    Ok(PiPulseMetrics {
        initial,
        target,
        fidelity: p[k],
        pi_time,
        max_intermediate: leak.iter().copied().fold(0.0, f64::max),
        final_leakage: leak[k],
    })
}

/// Dominant angular frequency of `signal` sampled every `dt`: periodogram
/// peak with parabolic interpolation, then a least-squares sinusoid fit
/// around it.
pub fn dominant_frequency(signal: &[f64], dt: f64) -> Result<f64> {
    let n = signal.len();
    if n < 8 {
        return Err(Error::ExtractionFailed("need at least eight samples".into()));
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = signal.iter().map(|x| x - mean).collect();
    let spread = centered.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if spread < 1e-12 {
        return Err(Error::ExtractionFailed("signal is constant".into()));
    }
    let m = (8 * n).next_power_of_two();
    let mut buf: Vec<C64> = centered.iter().map(|&x| C64::from(x)).collect();
    buf.resize(m, C64::from(0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let power: Vec<f64> = buf[..m / 2].iter().map(|z| z.norm_sqr()).collect();
    let (kmax, pmax) = power
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let mut sorted = power[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(pmax > 10.0 * median) {
        return Err(Error::ExtractionFailed("no spectral peak above the noise floor".into()));
    }
    let shift = if kmax + 1 < power.len() {
        let (a, b, c) = (power[kmax - 1].sqrt(), pmax.sqrt(), power[kmax + 1].sqrt());
        let curv = a - 2.0 * b + c;
        if curv < 0.0 { 0.5 * (a - c) / curv } else { 0.0 }
    } else {
        0.0
    };
    let bin = TAU / (m as f64 * dt);
    let coarse = (kmax as f64 + shift) * bin;
    if coarse * n as f64 * dt < TAU {
        return Err(Error::ExtractionFailed("fewer than one oscillation period in the record".into()));
    }
    Ok(refine_sinusoid(&centered, dt, coarse, 2.0 * bin))
}

/// Golden-section search for the frequency minimizing the residual of a
/// linear least-squares fit `a cos ωt + b sin ωt + c`.
fn refine_sinusoid(y: &[f64], dt: f64, centre: f64, half_width: f64) -> f64 {
    let residual = |w: f64| {
        let (mut s_cc, mut s_ss, mut s_cs, mut s_c, mut s_s) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut y_c, mut y_s, mut y_1, mut y_y) = (0.0, 0.0, 0.0, 0.0);
        for (k, &v) in y.iter().enumerate() {
            let (s, c) = (w * k as f64 * dt).sin_cos();
            s_cc += c * c;
            s_ss += s * s;
            s_cs += c * s;
            s_c += c;
            s_s += s;
            y_c += v * c;
            y_s += v * s;
            y_1 += v;
            y_y += v * v;
        }
        let a = nalgebra::Matrix3::new(s_cc, s_cs, s_c, s_cs, s_ss, s_s, s_c, s_s, y.len() as f64);
        let rhs = nalgebra::Vector3::new(y_c, y_s, y_1);
        match a.lu().solve(&rhs) {
            Some(x) => y_y - x.dot(&rhs),
            None => f64::INFINITY,
        }
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((centre - half_width).max(0.0), centre + half_width);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (residual(x1), residual(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = residual(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = residual(x2);
        }
        if hi - lo < 1e-10 * centre {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Flop angular frequency of the target population (`Ω` for `sin²(Ωt/2)`).
pub fn extract_rabi_frequency(traj: &Trajectory, target: usize) -> Result<f64> {
    if target >= traj.levels() {
        return Err(Error::invalid(format!("target level {target} out of range")));
    }
    if traj.times.len() < 2 {
        return Err(Error::ExtractionFailed("trajectory is too short".into()));
    }
    let dt = traj.times[1] - traj.times[0];
    dominant_frequency(&traj.population(target), dt)
}
