//! Shot-to-shot detuning noise: Gaussian-averaged Rabi flops and Ramsey
//! contrast.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Landé g ratio between the qudit and the ground-state qubit.
pub const D_TO_S_SENSITIVITY: f64 = 3.0 / 5.0;
/// Projected coherence improvement of the Δm = 3 transition in a shielded
/// permanent-magnet apparatus.
pub const SHIELDED_IMPROVEMENT: f64 = 966.0;
/// Measured Δm = 1 Ramsey Gaussian width, s.
pub const MEASURED_SIGMA_T: f64 = 0.61e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    /// Standard deviation of the static frequency offset, Hz.
    pub sigma_f: f64,
    /// Exponential contrast damping rate, 1/s.
    pub gamma: f64,
}

impl DephasingModel {
    pub fn new(sigma_f: f64, gamma: f64) -> Result<Self> {
        if !(sigma_f >= 0.0) || !(gamma >= 0.0) || !sigma_f.is_finite() || !gamma.is_finite() {
            return Err(Error::invalid(format!(
                "dephasing parameters must be finite and non-negative (σ_f = {sigma_f}, γ = {gamma})"
            )));
        }
        Ok(DephasingModel { sigma_f, gamma })
    }

    /// Model with Ramsey Gaussian time width `sigma_t` (s).
    pub fn from_sigma_t(sigma_t: f64, gamma: f64) -> Result<Self> {
        if !(sigma_t > 0.0) {
            return Err(Error::invalid(format!("σ_t must be positive, got {sigma_t}")));
        }
        Self::new(1.0 / (TAU * sigma_t), gamma)
    }

    /// Measured Δm = 1 qudit noise, no damping.
    pub fn measured() -> Self {
        Self::from_sigma_t(MEASURED_SIGMA_T, 0.0).expect("valid constant")
    }

    /// Ramsey Gaussian time width `1/(2π σ_f)`, s (infinite without noise).
    pub fn sigma_t(&self) -> f64 {
        1.0 / (TAU * self.sigma_f)
    }

    /// Standard deviation of the angular detuning, rad/s.
    pub fn sigma_omega(&self) -> f64 {
        TAU * self.sigma_f
    }

    /// 1/e Ramsey coherence time `√2 σ_t`, s.
    pub fn coherence_time(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.sigma_t()
    }

    /// Divide both noise width and damping by `factor` (apparatus
    /// improvement).
    pub fn improved(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::invalid(format!("improvement factor must be positive, got {factor}")));
        }
        Self::new(self.sigma_f / factor, self.gamma / factor)
    }

    /// Multiply the noise width by a magnetic sensitivity ratio.
    pub fn rescaled(&self, sensitivity: f64) -> Result<Self> {
        Self::new(self.sigma_f * sensitivity, self.gamma)
    }
}

/// Noise of a Δm-spanning transition: the frequency width grows by Δm.
pub fn scale_sensitivity(model: &DephasingModel, delta_m: u32) -> Result<DephasingModel> {
    if delta_m < 1 {
        return Err(Error::invalid("Δm must be at least 1"));
    }
    DephasingModel::new(model.sigma_f * delta_m as f64, model.gamma)
}

/// Gauss–Hermite nodes and weights for the weight `e^{−x²}`, computed by
/// the Golub–Welsch eigenvalue method and cached per order.
pub fn gauss_hermite(n: usize) -> std::sync::Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let out = std::sync::Arc::new(pairs.into_iter().unzip());
    cache.lock().unwrap().insert(n, out.clone());
    out
}

/// Expectation of `f(δ)` over `δ ~ N(0, σ²)`, doubling the quadrature order
/// from 64 until successive estimates agree to `1e−9` (capped at 512).
pub fn gaussian_average(sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    if sigma == 0.0 {
        return f(0.0);
    }
    let eval = |n: usize| {
        let rule = gauss_hermite(n);
        let (x, w) = (&rule.0, &rule.1);
        x.iter()
            .zip(w)
            .map(|(&xi, &wi)| wi * f(std::f64::consts::SQRT_2 * sigma * xi))
            .sum::<f64>()
            / PI.sqrt()
    };
    let mut n = 64;
    let mut prev = eval(n);
    while n < 512 {
        n *= 2;
        let next = eval(n);
        if (next - prev).abs() < 1e-9 {
            return next;
        }
        prev = next;
    }
    prev
}

/// Detuned Rabi flop `Ω²/(Ω²+δ²) sin²(√(Ω²+δ²) t / 2)`.
pub fn detuned_flop(t: f64, omega: f64, delta: f64) -> f64 {
    let g2 = omega * omega + delta * delta;
    if g2 == 0.0 {
        return 0.0;
    }
    omega * omega / g2 * (0.5 * g2.sqrt() * t).sin().powi(2)
}

/// Flop averaged over Gaussian detuning noise of width `sigma_f` (Hz) with
/// exponential damping `gamma` (1/s).
pub fn decohered_flop(t: f64, omega: f64, sigma_f: f64, gamma: f64) -> f64 {
    let mean = gaussian_average(TAU * sigma_f, |d| detuned_flop(t, omega, d));
    (mean * (-gamma * t).exp()).clamp(0.0, 1.0)
}

/// Ramsey contrast `exp(−(2π σ_f T)²/2)`.
pub fn ramsey_contrast(delay: f64, sigma_f: f64) -> f64 {
    (-(TAU * sigma_f * delay).powi(2) / 2.0).exp()
}
