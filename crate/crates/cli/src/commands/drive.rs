use std::f64::consts::TAU;
use std::fmt::Write;

use raman_core::dynamics::{
    basis_state, build_effective_hamiltonian, final_state, CouplingTerm, EffectiveHamiltonian, pi_pulse_metrics_with, propagate_with, rabi_spectroscopy,
    MetricsOptions,
};
use raman_core::manifold::retune;
use raman_core::noise::{scale_sensitivity, total_fidelity_budget, DephasingModel, ScatterModel, SHIELDED_IMPROVEMENT};
use raman_core::pathways::{analytic_rabi, Splittings};
use raman_core::stark::{resonance_frequency, ShiftMethod};
use raman_core::{Result, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{hz, lock, local_slopes, loglog_slope, pulse_length, to_value, Artifacts};
use crate::config::{ExperimentConfig, Scale, Shape, TwoLevelConfig};
use crate::svg::{Plot, Series};

pub(super) fn flop(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    if let Some(tl) = cfg.two_level {
        return two_level_flop(cfg, tl, svg, out);
    }
    let t = &cfg.transition;
    let drive = lock(cfg, &cfg.beams()?)?;
    let pi = drive.pi_time();
    let shape = cfg.pulse.shape;
    let duration = cfg.pulse.duration_s.unwrap_or(match shape {
        Shape::Square => 4.0 * pi,
        _ => pulse_length(shape, pi),
    });
    let env = cfg.envelope(shape, duration)?;
    let h = &drive.hamiltonian;
    let traj = propagate_with(h, &basis_state(h.dim, t.initial), duration, &env, cfg.pulse.samples, &cfg.propagation)?;
    let metrics = pi_pulse_metrics_with(
        &traj,
        t.target,
        &MetricsOptions {
            allow_endpoint: shape != Shape::Square,
            ..MetricsOptions::default()
        },
    )
    .ok();
    out.add("flop.csv", traj.to_csv());
    let mut plot = Plot::new("Population dynamics", "t (µs)", "population");
    for k in 0..traj.levels() {
        let pts = traj.times.iter().zip(traj.population(k)).map(|(&t, p)| (t * 1e6, p)).collect();
        plot = plot.with(Series::new(format!("P{k}"), pts));
    }
    out.plot(svg, "flop", plot);
    let bare = Splittings::bare(&cfg.atom).resonance(t.initial, t.target, t.photons);
    Ok(json!({
        "bare_resonance_hz": hz(bare),
        "stark_estimate_hz": hz(drive.stark_estimate),
        "omega_r_hz": hz(drive.omega_r),
        "rabi_hz": hz(drive.rabi),
        "pi_time_s": pi,
        "duration_s": duration,
        "max_norm_defect": traj.max_norm_defect(),
        "final_populations": traj.final_populations(),
        "pi_pulse": metrics.map(to_value),
    }))
}

fn two_level_flop(cfg: &ExperimentConfig, tl: TwoLevelConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let rabi = TAU * tl.rabi_hz;
    let detuning = TAU * tl.detuning_hz;
    let coupling = |row, col| CouplingTerm {
        row,
        col,
        amplitude: C64::from(rabi / 2.0),
        beat: 0.0,
        beams: (0, 0),
    };
    let h = EffectiveHamiltonian::from_parts(vec![0.0, -detuning], vec![coupling(0, 1), coupling(1, 0)], 1)?;
    let pi = std::f64::consts::PI / rabi;
    let duration = cfg.pulse.duration_s.unwrap_or(4.0 * pi);
    let env = cfg.envelope(Shape::Square, duration)?;
    let traj = propagate_with(&h, &basis_state(2, 0), duration, &env, cfg.pulse.samples, &cfg.propagation)?;
    out.add("flop.csv", traj.to_csv());
    out.plot(
        svg,
        "flop",
        Plot::new("Two-level Rabi flopping", "t (µs)", "population")
            .with(Series::new("P1", traj.times.iter().zip(traj.population(1)).map(|(&t, p)| (t * 1e6, p)).collect())),
    );
    let generalized = (rabi * rabi + detuning * detuning).sqrt();
    Ok(json!({
        "rabi_hz": tl.rabi_hz,
        "detuning_hz": tl.detuning_hz,
        "generalized_rabi_hz": hz(generalized),
        "pi_time_s": pi,
        "duration_s": duration,
        "max_norm_defect": traj.max_norm_defect(),
        "final_populations": traj.final_populations(),
        "max_textbook_deviation": traj
            .times
            .iter()
            .zip(traj.population(1))
            .map(|(&t, p)| (p - (rabi / generalized).powi(2) * (generalized * t / 2.0).sin().powi(2)).abs())
            .fold(0.0, f64::max),
    }))
}

pub(super) fn spectrum(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let beams = cfg.beams()?;
    let drive = lock(cfg, &beams)?;
    let second_order =
        resonance_frequency(&cfg.atom, &beams, t.initial, t.target, t.photons, cfg.include_f, ShiftMethod::SecondOrder)?;
    let shape = cfg.pulse.shape;
    let duration = cfg.pulse.duration_s.unwrap_or(pulse_length(shape, drive.pi_time()));
    let env = cfg.envelope(shape, duration)?;
    let span = 4.0 * hz(drive.rabi);
    let offsets = cfg.sweep_values(-span, span, 81, Scale::Linear)?;
    let scan: Vec<f64> = offsets.iter().map(|d| drive.omega_r + std::f64::consts::TAU * d).collect();
    let build = |w: f64| build_effective_hamiltonian(&cfg.atom, &retune(&beams, w), cfg.include_f);
    let points = rabi_spectroscopy(&build, t.initial, t.target, &scan, &env, &cfg.propagation)?;
    let mut csv = String::from("detuning_hz,omega_r_hz,population\n");
    for (d, p) in offsets.iter().zip(&points) {
        let _ = writeln!(csv, "{d:.6e},{:.9e},{:.12e}", hz(p.omega_r), p.population);
    }
    out.add("spectrum.csv", csv);
    let peak = points
        .iter()
        .zip(&offsets)
        .max_by(|a, b| a.0.population.total_cmp(&b.0.population))
        .map(|(p, d)| (*d, p.population));
    out.plot(
        svg,
        "spectrum",
        Plot::new("Rabi spectroscopy", "beat detuning from resonance (Hz)", "final target population").with(
            Series::new(format!("P{}", t.target), offsets.iter().zip(&points).map(|(d, p)| (*d, p.population)).collect()),
        ),
    );
    Ok(json!({
        "omega_r_hz": hz(drive.omega_r),
        "rabi_hz": hz(drive.rabi),
        "pulse_duration_s": duration,
        "stark_estimate_offset_hz": hz(drive.stark_estimate - drive.omega_r),
        "second_order_estimate_offset_hz": hz(second_order.omega_r - drive.omega_r),
        "peak_detuning_hz": peak.map(|p| p.0),
        "peak_population": peak.map(|p| p.1),
    }))
}

struct SweepRow {
    power: f64,
    analytic_bare: f64,
    analytic: f64,
    numeric: f64,
}

pub(super) fn power_sweep(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let powers_mw = cfg.sweep_values(20.0, 180.0, 9, Scale::Linear)?;
    if powers_mw.iter().any(|p| *p <= 0.0) {
        return Err(raman_core::Error::Config {
            line: cfg.sweep.line,
            message: "sweep: powers must be positive".into(),
        });
    }
    let bare = Splittings::bare(&cfg.atom);
    let bare_resonance = bare.resonance(t.initial, t.target, t.photons);
    let rows: Vec<SweepRow> = powers_mw
        .par_iter()
        .map(|&p| {
            let beams = cfg.beams_scaled(1.0, p * 1e-3 / cfg.perp.power_w)?;
            let drive = lock(cfg, &beams)?;
            let dressed = drive.dressed_splittings()?;
            let analytic = analytic_rabi(&cfg.atom, &drive.beams, t.initial, t.target, t.photons, &dressed, cfg.include_f)?;
            let analytic_bare = analytic_rabi(
                &cfg.atom,
                &retune(&beams, bare_resonance),
                t.initial,
                t.target,
                t.photons,
                &bare,
                cfg.include_f,
            )?;
            Ok(SweepRow {
                power: p * 1e-3,
                analytic_bare: analytic_bare.norm(),
                analytic: analytic.norm(),
                numeric: drive.rabi,
            })
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.power).collect();
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (bare_col, analytic_col, numeric_col) = (col(|r| r.analytic_bare), col(|r| r.analytic), col(|r| r.numeric));
    let (sb, sa, sn) = (
        local_slopes(&x, &bare_col),
        local_slopes(&x, &analytic_col),
        local_slopes(&x, &numeric_col),
    );
    let mut csv = String::from(
        "perp_power_w,omega_analytic_bare_hz,omega_analytic_hz,omega_numeric_hz,residual,slope_analytic_bare,slope_analytic,slope_numeric\n",
    );
    for (k, r) in rows.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{:.6e},{:.9e},{:.9e},{:.9e},{:.9e},{:.6},{:.6},{:.6}",
            r.power,
            hz(r.analytic_bare),
            hz(r.analytic),
            hz(r.numeric),
            (r.analytic - r.numeric) / r.numeric,
            sb[k],
            sa[k],
            sn[k]
        );
    }
    out.add("power_sweep.csv", csv);
    let pts = |c: &[f64]| x.iter().zip(c).map(|(p, w)| (p * 1e3, hz(*w))).collect();
    out.plot(
        svg,
        "power_sweep",
        Plot::new("Rabi frequency against perpendicular power", "P⊥ (mW)", "Ω/2π (Hz)")
            .log_x()
            .log_y()
            .with(Series::new("analytic (bare)", pts(&bare_col)))
            .with(Series::new("analytic (dressed)", pts(&analytic_col)))
            .with(Series::new("numeric", pts(&numeric_col))),
    );
    Ok(json!({
        "par_power_w": cfg.par.power_w,
        "slope_analytic_bare": loglog_slope(&x, &bare_col),
        "slope_analytic": loglog_slope(&x, &analytic_col),
        "slope_numeric": loglog_slope(&x, &numeric_col),
        "expected_slope": t.photons as f64 / 4.0,
    }))
}

pub(super) fn budget(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let scales = cfg.sweep_values(0.1, 2.0, 12, Scale::Log)?;
    if scales.iter().any(|s| *s <= 0.0) {
        return Err(raman_core::Error::Config {
            line: cfg.sweep.line,
            message: "sweep: power scale factors must be positive".into(),
        });
    }
    let mut model = DephasingModel::from_sigma_t(cfg.noise.sigma_t_s, cfg.noise.gamma_per_s)?;
    if cfg.noise.shielded {
        model = model.improved(SHIELDED_IMPROVEMENT)?;
    }
    let model = scale_sensitivity(&model, cfg.delta_m())?;
    let shape = cfg.pulse.shape;
    let rows: Vec<(f64, raman_core::noise::BudgetReport)> = scales
        .par_iter()
        .map(|&s| {
            let drive = lock(cfg, &cfg.beams_scaled(s, s)?)?;
            let duration = pulse_length(shape, drive.pi_time());
            let env = cfg.envelope(shape, duration)?;
            let h = &drive.hamiltonian;
            let psi = final_state(h, &basis_state(h.dim, t.initial), duration, &env, &cfg.propagation)?;
            let leakage: f64 = psi
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != t.initial && *k != t.target)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            let scatter = ScatterModel::from_beams(&cfg.atom, &drive.beams)?.pi_pulse_error(t.initial, t.target, duration)?;
            Ok((s, total_fidelity_budget(duration, leakage, Some(&model), Some(&scatter))))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("power_scale,pi_time_s,leakage,dephasing,scatter,total\n");
    for (s, r) in &rows {
        let _ = writeln!(
            csv,
            "{s:.6e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            r.pi_time, r.leakage, r.dephasing, r.scatter, r.total
        );
    }
    out.add("budget.csv", csv);
    let series = |name: &str, f: fn(&raman_core::noise::BudgetReport) -> f64| {
        Series::new(name, rows.iter().map(|(_, r)| (r.pi_time * 1e6, f(r))).collect())
    };
    out.plot(
        svg,
        "budget",
        Plot::new("Infidelity budget", "π time (µs)", "infidelity")
            .log_x()
            .log_y()
            .with(series("total", |r| r.total))
            .with(series("leakage", |r| r.leakage))
            .with(series("dephasing", |r| r.dephasing))
            .with(series("scatter", |r| r.scatter)),
    );
    let best = rows.iter().min_by(|a, b| a.1.total.total_cmp(&b.1.total)).map(|(s, r)| (*s, r.clone()));
    Ok(json!({
        "shape": shape.name(),
        "dephasing_model": to_value(model),
        "best_power_scale": best.as_ref().map(|b| b.0),
        "best": best.map(|b| to_value(b.1)),
    }))
}
