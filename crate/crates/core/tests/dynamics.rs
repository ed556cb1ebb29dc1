use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raman_core::dynamics::{
    basis_state, build_effective_hamiltonian, extract_rabi_frequency, final_state, pi_pulse_metrics, propagate,
    propagate_with, pulse_psd, rabi_spectroscopy, CouplingTerm, EffectiveHamiltonian, EnvelopeShape,
    PropagationSettings, PulseEnvelope, Trajectory, TrajectoryMetadata,
};
use raman_core::manifold::{retune, Atom, Beam, BeamLabel, Polarization, CA40_DETUNING};
use raman_core::presets::calibrated_beams;
use raman_core::stark::{lock_resonance, LockedDrive};
use raman_core::{Error, C64};

fn two_level(rabi: f64, detuning: f64) -> EffectiveHamiltonian {
    let half = C64::from(rabi / 2.0);
    let term = |row, col| CouplingTerm {
        row,
        col,
        amplitude: half,
        beat: 0.0,
        beams: (0, 0),
    };
    EffectiveHamiltonian::from_parts(vec![0.0, -detuning], vec![term(0, 1), term(1, 0)], 1).unwrap()
}

/// Two levels split by `split`, driven at beat `drive`.
fn driven_two_level(rabi: f64, split: f64, drive: f64) -> EffectiveHamiltonian {
    let half = C64::from(rabi / 2.0);
    EffectiveHamiltonian::from_parts(
        vec![0.0, split],
        vec![
            CouplingTerm {
                row: 1,
                col: 0,
                amplitude: half,
                beat: drive,
                beams: (0, 1),
            },
            CouplingTerm {
                row: 0,
                col: 1,
                amplitude: half,
                beat: -drive,
                beams: (1, 0),
            },
        ],
        2,
    )
    .unwrap()
}

fn operating_drive() -> LockedDrive {
    let atom = Atom::ca40();
    let beams = calibrated_beams(0.195, 0.152, 0.0).unwrap();
    lock_resonance(&atom, &beams, 0, 3, 4, false, &PropagationSettings::default()).unwrap()
}

fn synthetic(times: &[f64], values: impl Fn(f64) -> f64) -> Trajectory {
    let n = times.len();
    let mut amplitudes = nalgebra::DMatrix::from_element(n, 2, C64::from(0.0));
    for (r, &t) in times.iter().enumerate() {
        let p = values(t);
        amplitudes[(r, 0)] = C64::from((1.0 - p).sqrt());
        amplitudes[(r, 1)] = C64::from(p.sqrt());
    }
    let populations = amplitudes.map(|z| z.norm_sqr());
    Trajectory {
        times: times.to_vec(),
        amplitudes,
        populations,
        metadata: TrajectoryMetadata {
            beams: Vec::new(),
            envelope: PulseEnvelope::square(*times.last().unwrap()).unwrap(),
            base_frequency: None,
            step: times[1] - times[0],
        },
    }
}

#[test]
fn zero_hamiltonian_is_identity() {
    let h = EffectiveHamiltonian::from_parts(vec![0.0; 6], Vec::new(), 1).unwrap();
    let psi0: Vec<C64> = (0..6).map(|k| C64::from_polar(1.0 / 6f64.sqrt(), k as f64)).collect();
    let tr = propagate(&h, &psi0, 1e-3, &PulseEnvelope::square(1e-3).unwrap(), 11).unwrap();
    for r in 0..11 {
        for k in 0..6 {
            assert!((tr.amplitudes[(r, k)] - psi0[k]).norm() < 1e-14);
        }
    }
}

#[test]
fn resonant_two_level_flop_is_sin_squared() {
    let rabi = TAU * 10e3;
    let h = two_level(rabi, 0.0);
    let dur = 4.0 * PI / rabi;
    let tr = propagate(&h, &basis_state(2, 0), dur, &PulseEnvelope::square(dur).unwrap(), 201).unwrap();
    for (r, &t) in tr.times.iter().enumerate() {
        let expected = (rabi * t / 2.0).sin().powi(2);
        assert!((tr.populations[(r, 1)] - expected).abs() < 1e-6);
    }
    assert!(tr.max_norm_defect() < 1e-9);
}

#[test]
fn detuned_two_level_flop_matches_textbook() {
    let (rabi, det) = (TAU * 10e3, TAU * 7e3);
    let h = two_level(rabi, det);
    let g = (rabi * rabi + det * det).sqrt();
    let dur = 3.0 * PI / g;
    let tr = propagate(&h, &basis_state(2, 0), dur, &PulseEnvelope::square(dur).unwrap(), 151).unwrap();
    for (r, &t) in tr.times.iter().enumerate() {
        let expected = (rabi / g).powi(2) * (g * t / 2.0).sin().powi(2);
        assert!((tr.populations[(r, 1)] - expected).abs() < 1e-6);
    }
}

#[test]
fn non_normalized_state_is_rejected() {
    let h = two_level(1.0, 0.0);
    let psi = vec![C64::from(1.0), C64::from(1.0)];
    let env = PulseEnvelope::square(1.0).unwrap();
    assert!(matches!(propagate(&h, &psi, 1.0, &env, 3), Err(Error::InvalidState(_))));
}

#[test]
fn hamiltonian_is_hermitian_at_random_times() {
    let atom = Atom::ca40();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w = 1.5 * atom.omega0();
    for include_f in [false, true] {
        let beams = calibrated_beams(0.195, 0.152, w).unwrap();
        let h = build_effective_hamiltonian(&atom, &beams, include_f).unwrap();
        for _ in 0..1000 {
            let t = rng.random_range(0.0..1e-3);
            let env = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let m = h.at(t, &env);
            let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let defect = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(defect <= 1e-12 * scale);
        }
    }
}

#[test]
fn beams_off_leave_the_bare_ladder() {
    let atom = Atom::ca40();
    let beams = calibrated_beams(0.195, 0.152, 1.5 * atom.omega0()).unwrap();
    let h = build_effective_hamiltonian(&atom, &beams, true).unwrap();
    let m = h.at(1.234e-6, &[0.0, 0.0]);
    let e = atom.lower.energies();
    for r in 0..6 {
        for c in 0..6 {
            let expected = if r == c { e[r] } else { 0.0 };
            assert!((m[(r, c)] - C64::from(expected)).norm() < 1e-6);
        }
    }
}

#[test]
fn single_polarization_beam_gives_diagonal_hamiltonian() {
    let atom = Atom::ca40();
    let beam = Beam::new(BeamLabel::Parallel, CA40_DETUNING, 0.2, 30e-6, Polarization::sigma_minus(), 0.0).unwrap();
    let h = build_effective_hamiltonian(&atom, &[beam], true).unwrap();
    assert!(h.terms.iter().all(|t| t.row == t.col));
}

#[test]
fn crossed_circular_beams_couple_two_sublevels_apart() {
    let atom = Atom::ca40();
    let w = atom.omega0();
    let par = Beam::new(BeamLabel::Parallel, CA40_DETUNING, 0.2, 30e-6, Polarization::sigma_minus(), 0.0).unwrap();
    let perp = Beam::new(BeamLabel::Perpendicular, CA40_DETUNING, 0.2, 30e-6, Polarization::sigma_plus(), w).unwrap();
    let h = build_effective_hamiltonian(&atom, &[par, perp], false).unwrap();
    let off: Vec<_> = h.terms.iter().filter(|t| t.row != t.col).collect();
    assert!(!off.is_empty());
    for t in off {
        assert_eq!((t.row as i64 - t.col as i64).abs(), 2);
        assert!((t.beat.abs() - w).abs() < 1e-6 * w);
    }
}

#[test]
fn time_reversal_recovers_the_initial_state() {
    let drive = operating_drive();
    let h = &drive.hamiltonian;
    let dur = 0.37 * drive.pi_time();
    let env = PulseEnvelope::square(dur).unwrap();
    let psi0 = basis_state(6, 0);
    let psi_t = final_state(h, &psi0, dur, &env, &PropagationSettings::default()).unwrap();
    // U(T)† is generated by −H(T − s).
    let terms = h
        .terms
        .iter()
        .map(|t| CouplingTerm {
            amplitude: -t.amplitude * C64::from_polar(1.0, -t.beat * dur),
            beat: -t.beat,
            ..*t
        })
        .collect();
    let back = EffectiveHamiltonian::from_parts(h.static_diagonal.iter().map(|e| -e).collect(), terms, h.n_beams).unwrap();
    let psi_back = final_state(&back, &psi_t, dur, &env, &PropagationSettings::default()).unwrap();
    for k in 0..6 {
        assert!((psi_back[k] - psi0[k]).norm() < 1e-8, "{k}: {}", (psi_back[k] - psi0[k]).norm());
    }
}

#[test]
fn operating_point_trajectory_conserves_norm_and_converges_in_step() {
    let drive = operating_drive();
    let dur = 1.2 * drive.pi_time();
    let settings = PropagationSettings::default();
    for env in [
        PulseEnvelope::square(dur).unwrap(),
        PulseEnvelope::ramped(EnvelopeShape::SinSquared, dur, vec![false, true]).unwrap(),
    ] {
        let a = propagate_with(&drive.hamiltonian, &basis_state(6, 0), dur, &env, 401, &settings).unwrap();
        let b = propagate_with(&drive.hamiltonian, &basis_state(6, 0), dur, &env, 401, &settings.refined()).unwrap();
        assert!(a.max_norm_defect() < 1e-9);
        assert!(b.max_norm_defect() < 1e-9);
        let diff = (&a.populations - &b.populations).abs().max();
        assert!(diff < 1e-8, "{diff:e}");
        for (x, y) in a.amplitudes.iter().zip(a.populations.iter()) {
            assert_eq!(x.norm_sqr(), *y);
        }
    }
}

#[test]
fn operating_point_pulse_metrics() {
    let drive = operating_drive();
    let dur = 1.5 * drive.pi_time();
    let tr = propagate(&drive.hamiltonian, &basis_state(6, 0), dur, &PulseEnvelope::square(dur).unwrap(), 3001).unwrap();
    let m = pi_pulse_metrics(&tr, 3).unwrap();
    assert!(m.fidelity > 0.9 && m.fidelity <= 1.0, "{m:?}");
    assert!((m.pi_time - drive.pi_time()).abs() < 0.05 * drive.pi_time());
    assert!(m.max_intermediate > 0.0 && m.max_intermediate < 0.2);
    // The dominant flop frequency is the locked effective Rabi frequency.
    let long = 4.0 * drive.pi_time();
    let tr = propagate(&drive.hamiltonian, &basis_state(6, 0), long, &PulseEnvelope::square(long).unwrap(), 4001).unwrap();
    let w = extract_rabi_frequency(&tr, 3).unwrap();
    assert!((w - drive.rabi).abs() < 0.05 * drive.rabi, "{w} vs {}", drive.rabi);
}

#[test]
fn ideal_two_level_metrics() {
    let rabi = TAU * 10e3;
    let h = two_level(rabi, 0.0);
    let dur = 2.0 * PI / rabi;
    let tr = propagate(&h, &basis_state(2, 0), dur, &PulseEnvelope::square(dur).unwrap(), 2001).unwrap();
    let m = pi_pulse_metrics(&tr, 1).unwrap();
    assert!((m.fidelity - 1.0).abs() < 1e-6);
    assert!(m.max_intermediate.abs() < 1e-12);
    assert!((m.pi_time - PI / rabi).abs() < 1e-3 * PI / rabi);

    // Stopping short of the π time leaves no maximum.
    let short = 0.4 * PI / rabi;
    let tr = propagate(&h, &basis_state(2, 0), short, &PulseEnvelope::square(short).unwrap(), 101).unwrap();
    assert!(matches!(pi_pulse_metrics(&tr, 1), Err(Error::InsufficientDuration(_))));
}

#[test]
fn rabi_frequency_extraction() {
    let omega = TAU * 10e3;
    let times: Vec<f64> = (0..4000).map(|k| k as f64 * 1e-6).collect();
    let clean = synthetic(&times, |t| (omega * t / 2.0).sin().powi(2));
    let w = extract_rabi_frequency(&clean, 1).unwrap();
    assert!((w - omega).abs() < 1e-3 * omega, "{w}");

    let gamma = omega / 20.0;
    let damped = synthetic(&times, |t| 0.5 * (1.0 - (-gamma * t).exp() * (omega * t).cos()));
    let w = extract_rabi_frequency(&damped, 1).unwrap();
    assert!((w - omega).abs() < 1e-2 * omega, "{w}");

    let flat = synthetic(&times, |_| 0.25);
    assert!(matches!(extract_rabi_frequency(&flat, 1), Err(Error::ExtractionFailed(_))));
}

#[test]
fn square_pulse_spectrum_has_nulls_at_inverse_duration() {
    let dur = 1e-3;
    let carrier = TAU * 1e6;
    let rate = 10e6;
    let psd = pulse_psd(&PulseEnvelope::square(dur).unwrap(), carrier, rate).unwrap();
    let df = psd[1].0 - psd[0].0;
    let peak = psd.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!(peak.0.abs() <= df);
    let (f_null, p_null) = psd
        .iter()
        .filter(|(f, _)| *f > 0.5 / dur && *f < 1.5 / dur)
        .map(|&(f, p)| (f, p))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((f_null - 1.0 / dur).abs() <= df, "{f_null}");
    assert!(p_null < -30.0);
}

#[test]
fn ramped_pulse_spectrum_is_suppressed_far_from_carrier() {
    let dur = 100e-6;
    let carrier = TAU * 1e6;
    let rate = 20e6;
    let sq = pulse_psd(&PulseEnvelope::square(dur).unwrap(), carrier, rate).unwrap();
    let s2 = pulse_psd(&PulseEnvelope::ramped(EnvelopeShape::SinSquared, dur, Vec::new()).unwrap(), carrier, rate).unwrap();
    // Compare local maxima in a band around 2.63 MHz / 4 away from the carrier.
    let band = |psd: &[(f64, f64)]| {
        psd.iter()
            .filter(|(f, _)| (f.abs() - 650e3).abs() < 20e3)
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    assert!(band(&sq) - band(&s2) >= 20.0, "{} {}", band(&sq), band(&s2));
}

#[test]
fn invalid_pulses_are_rejected() {
    assert!(PulseEnvelope::square(0.0).is_err());
    assert!(PulseEnvelope::new(EnvelopeShape::SinSquared, 1.0, 0.6, Vec::new()).is_err());
    let env = PulseEnvelope::square(1e-4).unwrap();
    assert!(matches!(pulse_psd(&env, TAU * 1e6, 3e6), Err(Error::InvalidParameter(_))));
}

#[test]
fn envelope_shapes() {
    for shape in [EnvelopeShape::Square, EnvelopeShape::SinSquared, EnvelopeShape::SinQuartic] {
        let env = PulseEnvelope::ramped(shape.clone(), 1.0, Vec::new()).unwrap();
        assert_eq!(env.amplitude(-1e-9), 0.0);
        assert_eq!(env.amplitude(1.0 + 1e-9), 0.0);
        let mut prev = env.amplitude(0.0);
        for k in 1..=1000 {
            let a = env.amplitude(k as f64 / 1000.0);
            assert!((0.0..=1.0).contains(&a));
            assert!((a - prev).abs() < 0.02, "{shape:?} jumps at {k}");
            prev = a;
        }
        assert_eq!(env.amplitude(0.5), 1.0);
    }
    let sq = PulseEnvelope::square(1.0).unwrap();
    assert_eq!(sq.amplitude(1e-9), 1.0);
    assert_eq!(sq.amplitude(1.0 - 1e-9), 1.0);
    let shaped = PulseEnvelope::ramped(EnvelopeShape::SinSquared, 1.0, vec![false, true]).unwrap();
    assert_eq!(shaped.beam_amplitude(0, 0.01), 1.0);
    assert!(shaped.beam_amplitude(1, 0.01) < 0.1);
}

#[test]
fn two_level_spectroscopy_is_a_rabi_lineshape() {
    let (rabi, split) = (TAU * 10e3, TAU * 1e6);
    let dur = PI / rabi;
    let scan: Vec<f64> = (-40..=40).map(|k| split + TAU * 1e3 * k as f64).collect();
    let build = |w: f64| Ok(driven_two_level(rabi, split, w));
    let env = PulseEnvelope::square(dur).unwrap();
    let pts = rabi_spectroscopy(&build, 0, 1, &scan, &env, &PropagationSettings::default()).unwrap();
    for p in &pts {
        let d = p.omega_r - split;
        let g = (rabi * rabi + d * d).sqrt();
        let expected = (rabi / g).powi(2) * (g * dur / 2.0).sin().powi(2);
        assert!((p.population - expected).abs() < 1e-6);
    }
    let best = pts.iter().max_by(|a, b| a.population.total_cmp(&b.population)).unwrap();
    assert_eq!(best.omega_r, split);
}

#[test]
fn four_photon_spectroscopy_peaks_at_the_locked_resonance() {
    let atom = Atom::ca40();
    let drive = operating_drive();
    let beams = drive.beams.clone();
    let step = TAU * 1e3;
    let scan: Vec<f64> = (-6..=6).map(|k| drive.omega_r + step * k as f64).collect();
    let build = |w: f64| build_effective_hamiltonian(&atom, &retune(&beams, w), false);
    let env = PulseEnvelope::square(drive.pi_time()).unwrap();
    let settings = PropagationSettings::default();
    let pts = rabi_spectroscopy(&build, 0, 3, &scan, &env, &settings).unwrap();
    let best = pts.iter().max_by(|a, b| a.population.total_cmp(&b.population)).unwrap();
    assert!((best.omega_r - drive.omega_r).abs() <= step, "{} vs {}", best.omega_r, drive.omega_r);
    // The peak sits at (3/2)ω0 plus the light-shift correction.
    assert!((drive.stark_estimate - drive.omega_r).abs() <= step);
    assert!((drive.omega_r - 1.5 * atom.omega0()).abs() > 100.0 * step);
    let centre = &pts[6];
    let direct = final_state(&drive.hamiltonian, &basis_state(6, 0), drive.pi_time(), &env, &settings).unwrap();
    assert_eq!(centre.population, direct[3].norm_sqr());
}
