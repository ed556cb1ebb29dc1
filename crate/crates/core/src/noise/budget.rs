//! Itemized π-pulse infidelity budget.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dephasing::{decohered_flop, DephasingModel};
use super::scatter::ScatterError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    /// s
    pub pi_time: f64,
    /// Intermediate-level population bound.
    pub leakage: f64,
    pub dephasing: f64,
    pub scatter: f64,
    pub total: f64,
}

/// Transfer error of a resonant π pulse of length `pi_time` under detuning
/// noise and damping.
pub fn dephasing_infidelity(model: &DephasingModel, pi_time: f64) -> f64 {
    if model.sigma_f == 0.0 && model.gamma == 0.0 {
        return 0.0;
    }
    1.0 - decohered_flop(pi_time, PI / pi_time, model.sigma_f, model.gamma)
}

/// Sum of leakage, dephasing and scattering contributions.
pub fn total_fidelity_budget(
    pi_time: f64,
    leakage: f64,
    dephasing: Option<&DephasingModel>,
    scatter: Option<&ScatterError>,
) -> BudgetReport {
    let dephasing = dephasing.map_or(0.0, |m| dephasing_infidelity(m, pi_time));
    let scatter = scatter.map_or(0.0, |s| s.total);
    BudgetReport {
        pi_time,
        leakage,
        dephasing,
        scatter,
        total: leakage + dephasing + scatter,
    }
}
