//! Values frozen from the first validated run. A change here means the
//! physics or numerics moved, not necessarily that something broke; update
//! deliberately.

use std::f64::consts::TAU;

use raman_core::dynamics::{basis_state, propagate, PropagationSettings, PulseEnvelope};
use raman_core::manifold::Atom;
use raman_core::noise::{scale_sensitivity, total_fidelity_budget, DephasingModel, ScatterModel};
use raman_core::presets::{calibrated_beams, calibrated_parallel};
use raman_core::stark::{lock_resonance, shift_table, ShiftMethod};

fn close(value: f64, frozen: f64, rel: f64) -> bool {
    (value - frozen).abs() <= rel * frozen.abs()
}

#[test]
fn locked_four_and_six_photon_drives() {
    let atom = Atom::ca40();
    let set = PropagationSettings::default();
    let beams = calibrated_beams(0.195, 0.152, 0.0).unwrap();
    // (target, photons, include_f, resonance offset from bare in Hz, Rabi in Hz)
    let cases = [
        (3, 4, false, -260_998.759, 17_617.0474),
        (3, 4, true, -258_142.222, 18_094.0430),
        (4, 6, false, -186_306.508, 2_002.53502),
    ];
    for (target, photons, include_f, offset, rabi) in cases {
        let d = lock_resonance(&atom, &beams, 0, target, photons, include_f, &set).unwrap();
        let bare = (atom.lower.energies()[0] - atom.lower.energies()[target]).abs() / (photons / 2) as f64;
        let got_offset = (d.omega_r - bare) / TAU;
        let got_rabi = d.rabi / TAU;
        assert!(close(got_offset, offset, 1e-6), "{target}/{photons}/{include_f}: offset {got_offset}");
        assert!(close(got_rabi, rabi, 1e-6), "{target}/{photons}/{include_f}: rabi {got_rabi}");
    }
}

#[test]
fn parallel_beam_neighbour_shifts() {
    let atom = Atom::ca40();
    // Differential shifts E_k − E_{k+1} (Hz), numeric dressed, F included.
    let frozen = [
        (0.05, [-59_570.996, -42_132.300, -24_773.318, -7_491.435, 9_715.862]),
        (0.195, [-232_914.320, -163_476.496, -95_410.771, -28_543.259, 37_274.129]),
    ];
    for (power, want) in frozen {
        let t = shift_table(&atom, &[calibrated_parallel(power).unwrap()], true, ShiftMethod::NumericDressed).unwrap();
        for (k, w) in want.iter().enumerate() {
            let got = t.differential(k, k + 1) / TAU;
            assert!(close(got, *w, 1e-6), "{power} W, pair {k}: {got}");
        }
    }
}

#[test]
fn infidelity_budget_minimum() {
    let atom = Atom::ca40();
    let set = PropagationSettings::default();
    let dephasing = scale_sensitivity(&DephasingModel::measured(), 3).unwrap();
    let rows: Vec<_> = (0..10)
        .map(|k| {
            let s = 2.0 * 0.05f64.powf(k as f64 / 9.0);
            let beams = calibrated_beams(0.195 * s, 0.152 * s, 0.0).unwrap();
            let d = lock_resonance(&atom, &beams, 0, 3, 4, false, &set).unwrap();
            let t = d.pi_time();
            let h = &d.hamiltonian;
            let traj = propagate(h, &basis_state(h.dim, 0), t, &PulseEnvelope::square(t).unwrap(), 1001).unwrap();
            let leak = (0..traj.times.len())
                .map(|r| [1, 2, 4, 5].iter().map(|&k| traj.populations[(r, k)]).sum::<f64>())
                .fold(0.0, f64::max);
            let scatter = ScatterModel::from_beams(&atom, &d.beams).unwrap().pi_pulse_error(0, 3, t).unwrap();
            total_fidelity_budget(t, leak, Some(&dephasing), Some(&scatter))
        })
        .collect();
    let best = rows.iter().min_by(|a, b| a.total.total_cmp(&b.total)).unwrap();
    assert!(close(best.pi_time, 9.758001e-5, 1e-4), "pi time {:.9e}", best.pi_time);
    assert!(close(best.total, 5.292887e-2, 1e-4), "total {:.9e}", best.total);
}
