//! Error models: detuning noise, spontaneous scattering, intermediate-level
//! cascade bounds and the combined infidelity budget.

mod budget;
mod cascade;
mod dephasing;
mod scatter;

pub use budget::{dephasing_infidelity, total_fidelity_budget, BudgetReport};
pub use cascade::{cascade_bounds, cascade_population_bound, CascadeBounds};
pub use dephasing::{
    decohered_flop, detuned_flop, gauss_hermite, gaussian_average, ramsey_contrast, scale_sensitivity,
    DephasingModel, D_TO_S_SENSITIVITY, MEASURED_SIGMA_T, SHIELDED_IMPROVEMENT,
};
pub use scatter::{pi_pulse_scatter_error, scattering_rate, ScatterError, ScatterModel, DEFAULT_LEAVE_FRACTION};
