//! Least-squares calibration: flop and Ramsey fits, and the joint fit of
//! beam waists and polarization to splitting and Rabi series.

mod beams;
mod dataset;
mod fits;
mod lm;

pub use beams::{
    constrain_perp_polarization, joint_fit_beams, model_splitting, model_two_photon_rabi, perp_differential_shift,
    BeamFit, BeamFitSetup, BeamParams, PerpConstraint,
};
pub use dataset::{DataPoint, Dataset, DatasetKind};
pub use fits::{fit_flop, fit_ramsey, RamseyFit};
pub use lm::{levenberg_marquardt, FitResult, LmSettings, Problem, RANK_TOLERANCE};
