//! Flop and Ramsey fits.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetKind};
use super::lm::{levenberg_marquardt, FitResult, LmSettings, Problem};
use crate::dynamics::dominant_frequency;
use crate::error::{Error, Result};
use crate::noise::decohered_flop;

fn expect_kind(data: &Dataset, kind: DatasetKind) -> Result<()> {
    if data.kind != kind {
        return Err(Error::invalid(format!("expected a {kind:?} dataset, got {:?}", data.kind)));
    }
    Ok(())
}

/// Linear interpolation of `(x, y)` onto `n` uniform samples.
fn resample(x: &[f64], y: &[f64], n: usize) -> (Vec<f64>, f64) {
    let (a, b) = (x[0], x[x.len() - 1]);
    let dt = (b - a) / (n - 1) as f64;
    let mut j = 0;
    let out = (0..n)
        .map(|k| {
            let t = a + k as f64 * dt;
            while j + 2 < x.len() && x[j + 1] < t {
                j += 1;
            }
            let w = ((t - x[j]) / (x[j + 1] - x[j])).clamp(0.0, 1.0);
            y[j] * (1.0 - w) + y[j + 1] * w
        })
        .collect();
    (out, dt)
}

/// Fit `Ω` (rad/s) and `γ` (1/s) of a decohered flop with the detuning noise
/// width `sigma_f` (Hz) held fixed.
pub fn fit_flop(data: &Dataset, sigma_f: f64) -> Result<FitResult> {
    expect_kind(data, DatasetKind::Flop)?;
    if data.points.len() < 10 {
        return Err(Error::invalid("flop fit needs at least 10 points"));
    }
    let (x, y) = (data.xs(), data.ys());
    let (uniform, dt) = resample(&x, &y, x.len());
    let omega0 = dominant_frequency(&uniform, dt).map_err(|e| Error::FitFailed {
        reason: format!("no initial Rabi frequency: {e}"),
        iterations: 0,
    })?;
    let span = x[x.len() - 1] - x[0];
    if omega0 * span < TAU {
        return Err(Error::invalid("flop data span less than one period"));
    }
    let pts = data.points.clone();
    let residuals = move |p: &[f64]| -> Result<Vec<f64>> {
        if !(p[0] > 0.0) {
            return Err(Error::invalid("Rabi frequency must be positive"));
        }
        Ok(pts
            .iter()
            .map(|q| (q.y - decohered_flop(q.x, p[0], sigma_f, p[1])) / q.sigma)
            .collect())
    };
    let problem = Problem {
        names: vec!["omega".into(), "gamma".into()],
        scales: vec![omega0, omega0 / 100.0],
        residuals: &residuals,
    };
    levenberg_marquardt(&problem, &[omega0, 0.0], &LmSettings::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    /// Parameters `kappa = 1/σ_t²` (1/s²) and `amplitude`.
    pub fit: FitResult,
    pub amplitude: f64,
    /// Gaussian time width, s; `None` when the decay is unresolved.
    pub sigma_t: Option<f64>,
    pub sigma_t_uncertainty: Option<f64>,
    /// The data show no resolvable decay (σ_t unbounded above).
    pub unbounded: bool,
}

impl RamseyFit {
    /// 1/e contrast time `√2 σ_t`.
    pub fn coherence_time(&self) -> Option<f64> {
        self.sigma_t.map(|s| std::f64::consts::SQRT_2 * s)
    }
}

/// Fit `A exp(−T²/(2σ_t²))` to Ramsey contrast. The decay is fitted as
/// `κ = 1/σ_t²` so that vanishing decay stays a regular point.
pub fn fit_ramsey(data: &Dataset) -> Result<RamseyFit> {
    expect_kind(data, DatasetKind::Ramsey)?;
    if data.points.len() < 3 {
        return Err(Error::invalid("Ramsey fit needs at least 3 points"));
    }
    let (x, y) = (data.xs(), data.ys());
    let a0 = y.iter().copied().fold(f64::MIN, f64::max);
    if !(a0 > 0.0) {
        return Err(Error::FitFailed {
            reason: "contrast is never positive".into(),
            iterations: 0,
        });
    }
    let span = x[x.len() - 1].abs().max(x[0].abs());
    let (mut num, mut den) = (0.0, 0.0);
    for (t, v) in x.iter().zip(&y) {
        if *v > 0.05 * a0 {
            num += (v / a0).ln() * t * t;
            den += t.powi(4);
        }
    }
    let kappa_scale = 1.0 / (span * span);
    let kappa0 = if den > 0.0 { (-2.0 * num / den).max(1e-3 * kappa_scale) } else { kappa_scale };
    let pts = data.points.clone();
    let residuals = move |p: &[f64]| -> Result<Vec<f64>> {
        Ok(pts
            .iter()
            .map(|q| (q.y - p[1] * (-0.5 * p[0] * q.x * q.x).exp()) / q.sigma)
            .collect())
    };
    let problem = Problem {
        names: vec!["kappa".into(), "amplitude".into()],
        scales: vec![kappa_scale, 1.0],
        residuals: &residuals,
    };
    let fit = levenberg_marquardt(&problem, &[kappa0, a0], &LmSettings::default())?;
    let (kappa, dk) = (fit.values[0], fit.uncertainties[0]);
    let unbounded = kappa * span * span < 1e-6 || kappa <= 2.0 * dk;
    let (sigma_t, sigma_t_uncertainty) = if kappa > 0.0 && !unbounded {
        (Some(kappa.powf(-0.5)), Some(0.5 * dk * kappa.powf(-1.5)))
    } else {
        (None, None)
    };
    Ok(RamseyFit {
        amplitude: fit.values[1],
        fit,
        sigma_t,
        sigma_t_uncertainty,
        unbounded,
    })
}
