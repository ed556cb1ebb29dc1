//! Effective qudit-manifold dynamics: Hamiltonian construction,
//! propagation, Floquet analysis, pulse metrics, spectroscopy and pulse
//! spectra.

mod analysis;
mod envelope;
mod floquet;
mod hamiltonian;
mod propagate;
mod spectrum;

pub use analysis::{
    dominant_frequency, extract_rabi_frequency, pi_pulse_metrics, pi_pulse_metrics_with, MetricsOptions, PiPulseMetrics,
};
pub use envelope::{EnvelopeShape, PulseEnvelope, DEFAULT_RAMP_FRACTION, RAMPED_LENGTH_FACTOR};
pub use floquet::{
    find_resonance, floquet_gap, floquet_hamiltonian, period_propagator, two_photon_coupling, FloquetGap, Resonance,
};
pub use hamiltonian::{build_effective_hamiltonian, CouplingTerm, EffectiveHamiltonian};
pub use propagate::{
    basis_state, final_state, propagate, propagate_with, PropagationSettings, Trajectory, TrajectoryMetadata,
};
pub use spectrum::{psd_to_csv, pulse_psd, rabi_spectroscopy, SpectroscopyPoint};
