use proptest::prelude::*;
use raman_core::manifold::{
    clebsch_gordan, coupling_coefficient, peak_field_amplitude, rabi_matrix, zeeman_splitting, Atom, Beam, BeamLabel,
    HalfInt, Level, ManifoldTag, Polarization, CA40_DETUNING,
};
use raman_core::presets::calibrated_parallel;
use raman_core::{Error, C64};

/// Brute-force Racah sum in terms of plain (j, m) values, written out
/// separately from the library routine.
fn racah_oracle(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> f64 {
    if (m1 + m2 - m).abs() > 1e-9 || j < (j1 - j2).abs() - 1e-9 || j > j1 + j2 + 1e-9 {
        return 0.0;
    }
    let f = |x: f64| -> f64 {
        let n = x.round() as i64;
        assert!(n >= 0 && (x - n as f64).abs() < 1e-9);
        (1..=n).map(|k| k as f64).product()
    };
    let pre = ((2.0 * j + 1.0) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j) / f(j1 + j2 + j + 1.0)).sqrt()
        * (f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)).sqrt();
    let mut sum = 0.0;
    for k in 0..40 {
        let k = k as f64;
        let args = [k, j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k, j - j2 + m1 + k, j - j1 - m2 + k];
        if args.iter().any(|a| *a < -1e-9) {
            continue;
        }
        let sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / args.iter().map(|a| f(*a)).product::<f64>();
    }
    pre * sum
}

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn level(tag: ManifoldTag, twice_mj: i32) -> Level {
    Level {
        manifold: tag,
        j: tag.j(),
        mj: h(twice_mj),
        energy: 0.0,
    }
}

#[test]
fn stretched_coefficient_matches_oracle() {
    let lower = level(ManifoldTag::D52, 5);
    let upper = level(ManifoldTag::P32, 3);
    let got = coupling_coefficient(&lower, &upper, -1).unwrap();
    let expected = racah_oracle(2.5, 2.5, 1.0, -1.0, 1.5, 1.5);
    assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    // √(2/3) for ⟨3/2 3/2|5/2 5/2; 1 −1⟩.
    assert!((got - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
}

#[test]
fn all_library_coefficients_match_oracle() {
    for (tw1, tw2, tj) in [(5i32, 2i32, 3i32), (5, 2, 5), (5, 2, 7), (1, 1, 0), (1, 1, 2), (3, 2, 1), (4, 4, 4)] {
        for m1 in (-tw1..=tw1).step_by(2) {
            for m2 in (-tw2..=tw2).step_by(2) {
                let m = m1 + m2;
                if m.abs() > tj {
                    continue;
                }
                let got = clebsch_gordan(h(tw1), h(m1), h(tw2), h(m2), h(tj), h(m));
                let v = |t: i32| t as f64 / 2.0;
                let expected = racah_oracle(v(tw1), v(m1), v(tw2), v(m2), v(tj), v(m));
                assert!((got - expected).abs() < 1e-13, "({tw1} {m1} {tw2} {m2} | {tj} {m}): {got} vs {expected}");
            }
        }
    }
}

#[test]
fn selection_rule_mismatch_is_zero() {
    let lower = level(ManifoldTag::D52, 1);
    let upper = level(ManifoldTag::P32, 1);
    assert_eq!(coupling_coefficient(&lower, &upper, 1).unwrap(), 0.0);
    assert_eq!(coupling_coefficient(&lower, &upper, -1).unwrap(), 0.0);
    assert!(coupling_coefficient(&lower, &upper, 0).unwrap() != 0.0);
}

#[test]
fn non_dipole_pair_is_rejected() {
    let lower = level(ManifoldTag::D52, 1);
    let s = level(ManifoldTag::S12, 1);
    assert!(matches!(coupling_coefficient(&lower, &s, 0), Err(Error::InvalidParameter(_))));
    assert!(coupling_coefficient(&lower, &level(ManifoldTag::P32, 1), 2).is_err());
}

#[test]
fn completeness_over_upper_manifolds() {
    // For fixed mJ and q, the squares summed over J' = J−1, J, J+1 give 1.
    let j: i32 = 5;
    for mj in (-j..=j).step_by(2) {
        for q in -1..=1 {
            let total: f64 = [3, 5, 7]
                .iter()
                .map(|&jp| clebsch_gordan(h(j), h(mj), h(2), h(2 * q), h(jp), h(mj + 2 * q)).powi(2))
                .sum();
            assert!((total - 1.0).abs() < 1e-13, "mJ {mj}/2 q {q}: {total}");
        }
    }
    // Within one J', the squares summed over (mJ, q) for fixed mJ' give 1.
    for jp in [3, 5, 7] {
        for mp in (-jp..=jp).step_by(2) {
            let total: f64 = (-1..=1)
                .map(|q| {
                    let mj: i32 = mp - 2 * q;
                    if mj.abs() > j {
                        0.0
                    } else {
                        racah_oracle(2.5, mj as f64 / 2.0, 1.0, q as f64, jp as f64 / 2.0, mp as f64 / 2.0).powi(2)
                    }
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
    }
}

#[test]
fn zeeman_splitting_examples() {
    let w = zeeman_splitting(1.56e-4, 1.2);
    let f = w / std::f64::consts::TAU;
    assert!((f - 2.620097e6).abs() < 1.0, "{f}");
    assert!((f - 2.63e6).abs() / 2.63e6 < 0.01);
    assert_eq!(zeeman_splitting(0.0, 1.2), 0.0);
    assert!((zeeman_splitting(3.12e-4, 1.2) - 2.0 * w).abs() <= 1e-12 * w);
    assert!((zeeman_splitting(1.56e-4, 2.4) - 2.0 * w).abs() <= 1e-12 * w);
}

#[test]
fn preset_ladders_are_equally_spaced() {
    let atom = Atom::ca40();
    for m in std::iter::once(&atom.lower).chain(&atom.uppers) {
        assert_eq!(m.levels.len() as i32, m.j.twice() + 1);
        let step = zeeman_splitting(atom.b_field, m.g_j);
        for w in m.levels.windows(2) {
            assert!(((w[0].energy - w[1].energy) - step).abs() < 1e-9 * step);
        }
    }
    assert!((atom.omega0() / std::f64::consts::TAU - 2.63e6).abs() < 1e-3);
}

#[test]
fn peak_field_examples() {
    assert_eq!(peak_field_amplitude(0.0, 30e-6).unwrap(), 0.0);
    let a = peak_field_amplitude(0.1, 20e-6).unwrap();
    let b = peak_field_amplitude(0.4, 40e-6).unwrap();
    assert!((a - b).abs() <= 1e-12 * a);
    let e = peak_field_amplitude(0.195, 30.60e-6).unwrap();
    assert!((e - 316_057.588_477).abs() < 1e-3, "{e}");
    assert!(peak_field_amplitude(0.1, 0.0).is_err());
    assert!(peak_field_amplitude(0.1, -1e-6).is_err());
}

#[test]
fn pure_pi_beam_couples_only_equal_mj() {
    let atom = Atom::ca40();
    let beam = Beam::new(BeamLabel::Parallel, CA40_DETUNING, 0.1, 30e-6, Polarization::pi(), 0.0).unwrap();
    for upper in &atom.uppers {
        let m = rabi_matrix(&atom, &beam, &atom.lower, upper).unwrap();
        for (i, l) in atom.lower.levels.iter().enumerate() {
            for (e, u) in upper.levels.iter().enumerate() {
                let nonzero = m.get(i, e) != C64::from(0.0);
                assert_eq!(nonzero, l.mj == u.mj, "{} {i} {e}", upper.tag);
            }
        }
    }
}

#[test]
fn entries_scale_with_root_power() {
    let atom = Atom::ca40();
    let p = atom.upper(ManifoldTag::P32).unwrap();
    let a = rabi_matrix(&atom, &calibrated_parallel(0.1).unwrap(), &atom.lower, p).unwrap();
    let b = rabi_matrix(&atom, &calibrated_parallel(0.2).unwrap(), &atom.lower, p).unwrap();
    for (x, y) in a.entries.iter().zip(b.entries.iter()) {
        assert!((y - x * std::f64::consts::SQRT_2).norm() <= 1e-12 * y.norm().max(1e-300));
    }
}

#[test]
fn two_photon_rate_from_matrix_entries() {
    // Single-photon entries at 195 mW combine into a two-photon Rabi
    // frequency of order tens of kHz at 44 THz detuning.
    let atom = Atom::ca40();
    let p = atom.upper(ManifoldTag::P32).unwrap();
    let par = rabi_matrix(&atom, &calibrated_parallel(0.195).unwrap(), &atom.lower, p).unwrap();
    let perp_beam = raman_core::presets::calibrated_perpendicular(0.152, 0.0).unwrap();
    let perp = rabi_matrix(&atom, &perp_beam, &atom.lower, p).unwrap();
    // |+5/2> → |+3/2>_P by σ− (par), back to |+3/2> by π (perp).
    let w = (par.get(0, 0) * perp.get(1, 0).conj()).norm() / (2.0 * CA40_DETUNING.abs());
    let khz = w / std::f64::consts::TAU / 1e3;
    assert!(khz > 1.0 && khz < 1000.0, "{khz}");
}

fn polarization() -> impl Strategy<Value = Polarization> {
    // Each component is either exactly zero or a random complex number.
    let comp = prop_oneof![
        Just(C64::from(0.0)),
        (0.05f64..1.0, -3.2f64..3.2).prop_map(|(r, p)| C64::from_polar(r, p)),
    ];
    (comp.clone(), comp.clone(), comp)
        .prop_filter("not all zero", |(a, b, c)| a.norm() + b.norm() + c.norm() > 0.0)
        .prop_map(|(a, b, c)| Polarization::normalized(a, b, c).unwrap())
}

proptest! {
    #[test]
    fn sparsity_follows_selection_rules(pol in polarization(), power in 1e-3f64..0.5, waist in 5e-6f64..1e-4) {
        let atom = Atom::ca40();
        let beam = Beam::new(BeamLabel::Custom("x".into()), CA40_DETUNING, power, waist, pol, 0.0).unwrap();
        for upper in atom.uppers.iter() {
            let m = rabi_matrix(&atom, &beam, &atom.lower, upper).unwrap();
            for (i, l) in atom.lower.levels.iter().enumerate() {
                for (e, u) in upper.levels.iter().enumerate() {
                    let dq = u.mj.twice() - l.mj.twice();
                    let allowed = dq.abs() <= 2
                        && pol.component(dq / 2) != C64::from(0.0)
                        && clebsch_gordan(l.j, l.mj, h(2), h(dq), u.j, u.mj) != 0.0;
                    prop_assert_eq!(m.get(i, e) != C64::from(0.0), allowed);
                }
            }
        }
    }

    #[test]
    fn renormalizing_polarization_keeps_ratios(pol in polarization(), scale in 0.1f64..10.0) {
        let atom = Atom::ca40();
        let [a, b, c] = pol.amplitudes();
        let scaled = Polarization::normalized(a * scale, b * scale, c * scale).unwrap();
        let p = atom.upper(ManifoldTag::P32).unwrap();
        let mk = |pol| Beam::new(BeamLabel::Parallel, CA40_DETUNING, 0.1, 30e-6, pol, 0.0).unwrap();
        let x = rabi_matrix(&atom, &mk(pol), &atom.lower, p).unwrap();
        let y = rabi_matrix(&atom, &mk(scaled), &atom.lower, p).unwrap();
        for (u, v) in x.entries.iter().zip(y.entries.iter()) {
            prop_assert!((u - v).norm() <= 1e-12 * u.norm().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn splitting_is_linear(b in 0.0f64..1e-3, g in 0.1f64..3.0, k in 0.0f64..5.0) {
        let w = zeeman_splitting(b, g);
        prop_assert!((zeeman_splitting(k * b, g) - k * w).abs() <= 1e-12 * (k * w).abs() + 1e-300);
        prop_assert!((zeeman_splitting(b, k * g) - k * w).abs() <= 1e-12 * (k * w).abs() + 1e-300);
    }
}

#[test]
fn polarization_must_be_normalized() {
    assert!(Polarization::new(C64::from(1.0), C64::from(1.0), C64::from(0.0)).is_err());
    assert!(Polarization::normalized(C64::from(0.0), C64::from(0.0), C64::from(0.0)).is_err());
    let p = Polarization::from_fractions(0.872, 0.0, 0.128).unwrap();
    let f = p.fractions();
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(Beam::new(BeamLabel::Parallel, 0.0, -1.0, 30e-6, p, 0.0).is_err());
    assert!(Beam::new(BeamLabel::Parallel, 0.0, 1.0, 0.0, p, 0.0).is_err());
}
