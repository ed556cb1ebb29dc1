use std::f64::consts::{SQRT_2, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use raman_core::calibrate::{
    constrain_perp_polarization, fit_flop, fit_ramsey, joint_fit_beams, model_splitting, model_two_photon_rabi,
    BeamFitSetup, BeamParams, DataPoint, Dataset, DatasetKind, FitResult,
};
use raman_core::manifold::{Atom, Polarization};
use raman_core::noise::decohered_flop;
use raman_core::presets::{
    CALIBRATED_PAR_FRACTIONS, CALIBRATED_PAR_WAIST, CALIBRATED_PERP_FRACTIONS, CALIBRATED_PERP_WAIST,
};
use raman_core::Error;

fn series(kind: DatasetKind, xs: impl Iterator<Item = f64>, mut f: impl FnMut(f64) -> (f64, f64)) -> Dataset {
    let points = xs
        .map(|x| {
            let (y, sigma) = f(x);
            DataPoint { x, y, sigma }
        })
        .collect();
    Dataset::new(kind, points).unwrap()
}

fn times(n: usize, end: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| end * k as f64 / (n - 1) as f64)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn clean_flop_round_trip() {
    let omega = TAU * 5e3;
    let data = series(DatasetKind::Flop, times(120, 1e-3), |t| ((0.5 * omega * t).sin().powi(2), 0.01));
    let fit = fit_flop(&data, 0.0).unwrap();
    assert!(rel(fit.value("omega").unwrap(), omega) < 1e-3);
    assert!(fit.value("gamma").unwrap().abs() < 1.0);
    assert!(fit.chi_square < 1e-12);
}

fn noisy_flop(seed: u64) -> (Dataset, f64, f64, f64) {
    let (omega, sigma_f, gamma) = (TAU * 5e3, 150.0, 400.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let data = series(DatasetKind::Flop, times(240, 2e-3), |t| {
        (decohered_flop(t, omega, sigma_f, gamma) + noise.sample(&mut rng), 0.01)
    });
    (data, omega, sigma_f, gamma)
}

#[test]
fn noisy_flop_round_trip() {
    for seed in [1, 2, 3] {
        let (data, omega, sigma_f, gamma) = noisy_flop(seed);
        let fit = fit_flop(&data, sigma_f).unwrap();
        assert!(rel(fit.value("omega").unwrap(), omega) < 0.01);
        assert!(rel(fit.value("gamma").unwrap(), gamma) < 0.2, "{:?}", fit.values);
        let chi = fit.reduced_chi_square();
        assert!((chi - 1.0).abs() < 0.3, "{chi}");
        assert!(fit.uncertainty("omega").unwrap() > 0.0);
    }
}

#[test]
fn constant_flop_data_is_rejected() {
    let data = series(DatasetKind::Flop, times(50, 1e-3), |_| (0.4, 0.01));
    match fit_flop(&data, 0.0) {
        Err(_) => {}
        Ok(f) => assert!(f.uncertainty("omega").unwrap() > f.value("omega").unwrap()),
    }
    let short = series(DatasetKind::Flop, times(5, 1e-3), |t| (t, 0.01));
    assert!(fit_flop(&short, 0.0).is_err());
    let ramsey = series(DatasetKind::Ramsey, times(20, 1e-3), |_| (1.0, 0.01));
    assert!(fit_flop(&ramsey, 0.0).is_err());
}

#[test]
fn ramsey_round_trip() {
    let sigma_t = 0.61e-3;
    let data = series(DatasetKind::Ramsey, times(40, 2e-3), |t| (0.95 * (-t * t / (2.0 * sigma_t * sigma_t)).exp(), 0.01));
    let fit = fit_ramsey(&data).unwrap();
    assert!(rel(fit.sigma_t.unwrap(), sigma_t) < 0.01);
    assert!(rel(fit.amplitude, 0.95) < 1e-6);
    assert!(!fit.unbounded);
    // The fitted curve crosses 1/e of its amplitude at √2 σ_t.
    let tau = fit.coherence_time().unwrap();
    assert!(rel(tau, SQRT_2 * fit.sigma_t.unwrap()) < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let noisy = series(DatasetKind::Ramsey, times(60, 2e-3), |t| {
        ((-t * t / (2.0 * sigma_t * sigma_t)).exp() + noise.sample(&mut rng), 0.02)
    });
    let fit = fit_ramsey(&noisy).unwrap();
    let (s, ds) = (fit.sigma_t.unwrap(), fit.sigma_t_uncertainty.unwrap());
    assert!((s - sigma_t).abs() < 3.0 * ds, "{s} ± {ds}");
}

#[test]
fn flat_ramsey_is_unbounded() {
    let data = series(DatasetKind::Ramsey, times(30, 1e-3), |_| (0.9, 0.01));
    let fit = fit_ramsey(&data).unwrap();
    assert!(fit.unbounded);
    assert!(fit.sigma_t.is_none() && fit.coherence_time().is_none());
}

#[test]
fn dataset_csv_round_trip() {
    let kinds = [
        DatasetKind::Flop,
        DatasetKind::Ramsey,
        DatasetKind::RabiVsPower,
        DatasetKind::Splitting { upper: 2, lower: 3 },
    ];
    for kind in kinds {
        let d = series(kind, (1..6).map(|k| 0.01 * k as f64), |x| (TAU * 1e3 * x.sin(), 0.5 + x));
        let back = Dataset::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back.kind, kind);
        for (a, b) in d.points.iter().zip(&back.points) {
            assert!(rel(b.y, a.y) < 1e-11 && rel(b.sigma, a.sigma) < 1e-6);
        }
    }
    let err = Dataset::from_csv("t_s,population,sigma\n0.1,0.5,0.01\n0.2,x,0.01\n").unwrap_err();
    assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
    assert!(matches!(Dataset::from_csv("a,b,c\n1,2,3\n"), Err(Error::Config { line: 1, .. })));
    assert!(Dataset::new(DatasetKind::Flop, vec![DataPoint { x: 0.0, y: 0.0, sigma: 0.0 }]).is_err());
}

#[test]
fn perpendicular_polarization_constraint() {
    let atom = Atom::ca40();
    let null = constrain_perp_polarization(&atom, 0.0, 100.0, 0.18, 30e-6).unwrap();
    for f in null.fractions {
        assert!((f - 1.0 / 3.0).abs() < 1e-4);
    }
    // Shifts beyond what any π fraction can produce.
    assert!(matches!(
        constrain_perp_polarization(&atom, 1e7, 100.0, 0.18, 30e-6),
        Err(Error::InconsistentMeasurement(_))
    ));
    // A 0.1 kHz shift lands close to equal thirds; the quoted 32.9 % π is
    // about half a point lower than this model gives.
    let c = constrain_perp_polarization(&atom, 100.0, 400.0, 0.18, 30e-6).unwrap();
    assert!((c.fractions[1] - 0.329).abs() < 0.006, "{:?}", c.fractions);
    assert!(c.pi_uncertainty < 0.002);
    assert!((c.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

struct Synthetic {
    setup: BeamFitSetup,
    truth: BeamParams,
    splittings: Vec<Dataset>,
    rabi: Dataset,
}

fn synthetic() -> Synthetic {
    let atom = Atom::ca40();
    let [m, p, s] = CALIBRATED_PERP_FRACTIONS;
    let setup = BeamFitSetup::new(Polarization::transverse(m, p, s).unwrap());
    let [_, f_pi, f_plus] = CALIBRATED_PAR_FRACTIONS;
    let truth = BeamParams::from_fractions(CALIBRATED_PAR_WAIST, CALIBRATED_PERP_WAIST, f_pi, f_plus);
    let splittings = (0..5)
        .map(|k| {
            series(DatasetKind::Splitting { upper: k, lower: k + 1 }, (1..=4).map(|i| 0.05 * i as f64), |pw| {
                (model_splitting(&atom, &truth, &setup, pw, k, k + 1).unwrap(), TAU * 10.0)
            })
        })
        .collect();
    let rabi = series(DatasetKind::RabiVsPower, (1..=5).map(|i| 0.036 * i as f64), |pw| {
        let y = model_two_photon_rabi(&atom, &truth, &setup, pw).unwrap();
        (y, 0.01 * y)
    });
    Synthetic {
        setup,
        truth,
        splittings,
        rabi,
    }
}

fn check_recovery(fit: &FitResult, params: &BeamParams, truth: &BeamParams) {
    assert!(rel(params.par_waist, truth.par_waist) < 0.01);
    assert!(rel(params.perp_waist, truth.perp_waist) < 0.01);
    for (a, b) in params.par_fractions().iter().zip(truth.par_fractions()) {
        assert!((a - b).abs() < 0.01, "{:?}", params.par_fractions());
    }
    // Noise-free data fit to numerical precision.
    assert!(fit.chi_square < 1e-8 * fit.residuals.len() as f64, "{}", fit.chi_square);
}

#[test]
fn joint_fit_recovers_calibrated_beams_from_either_side() {
    let atom = Atom::ca40();
    let mut s = synthetic();
    for (a, b, c) in [(0.8, 0.8, 0.8), (1.2, 1.2, 0.8)] {
        s.setup.initial = BeamParams {
            par_waist: s.truth.par_waist * a,
            perp_waist: s.truth.perp_waist * b,
            par_sigma_plus: s.truth.par_sigma_plus * c,
            par_pi: 0.0,
        };
        let out = joint_fit_beams(&atom, &s.splittings, Some(&s.rabi), &s.setup).unwrap();
        check_recovery(&out.fit, &out.params, &s.truth);
        assert_eq!(out.fit.names.len(), 4);
        assert_eq!(out.fit.covariance.len(), 4);
    }
}

#[test]
fn splittings_alone_leave_the_fit_underconstrained() {
    let atom = Atom::ca40();
    let s = synthetic();
    match joint_fit_beams(&atom, &s.splittings, None, &s.setup) {
        Err(Error::Underconstrained { null_directions }) => {
            assert!(!null_directions.is_empty());
            let dir = &null_directions[0];
            let (name, weight) = dir.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
            assert_eq!(name, "par_pi_amplitude", "{dir:?}");
            assert!(weight.abs() > 0.9);
        }
        other => panic!("expected an underconstrained fit, got {other:?}"),
    }
    // Wrong dataset kinds are rejected up front.
    assert!(joint_fit_beams(&atom, &[s.rabi.clone()], None, &s.setup).is_err());
    assert!(joint_fit_beams(&atom, &s.splittings, Some(&s.splittings[0]), &s.setup).is_err());
}
