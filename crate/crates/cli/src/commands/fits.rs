use std::f64::consts::TAU;
use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use raman_core::calibrate::{
    constrain_perp_polarization, fit_ramsey, joint_fit_beams, model_splitting, model_two_photon_rabi, BeamFitSetup,
    BeamParams, DataPoint, Dataset, DatasetKind,
};
use raman_core::noise::ramsey_contrast;
use raman_core::{Error, Result};
use serde_json::{json, Value};

use super::{to_value, Artifacts};
use crate::config::{ExperimentConfig, Scale};
use crate::svg::{Plot, Series};

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("finite non-negative width")
}

pub(super) fn calibrate(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let atom = &cfg.atom;
    let [_, f_pi, f_plus] = cfg.par.fractions;
    let truth = BeamParams::from_fractions(cfg.par.waist_m, cfg.perp.waist_m, f_pi, f_plus);
    let mut setup = BeamFitSetup::new(cfg.perp_polarization()?);
    setup.par_power = cfg.par.power_w;
    setup.detuning = cfg.detuning();
    setup.include_f = cfg.include_f;
    let c = &cfg.calibrate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noisy = |rng: &mut ChaCha8Rng, y: f64, sigma: f64| if c.noise { y + normal(sigma).sample(rng) } else { y };

    let split_sigma = TAU * c.split_sigma_hz;
    let mut splittings = Vec::new();
    for k in 0..atom.lower.dim() - 1 {
        let mut pts = Vec::new();
        for i in 1..=8 {
            let power = 0.025 * i as f64;
            let y = model_splitting(atom, &truth, &setup, power, k, k + 1)?;
            pts.push(DataPoint {
                x: power,
                y: noisy(&mut rng, y, split_sigma),
                sigma: split_sigma,
            });
        }
        splittings.push(Dataset::new(DatasetKind::Splitting { upper: k, lower: k + 1 }, pts)?);
    }
    let perp_mw = cfg.sweep_values(20.0, 180.0, 9, Scale::Linear)?;
    if perp_mw.iter().any(|p| *p <= 0.0) {
        return Err(Error::Config {
            line: cfg.sweep.line,
            message: "sweep: powers must be positive".into(),
        });
    }
    let mut rabi_pts = Vec::new();
    for p in &perp_mw {
        let y = model_two_photon_rabi(atom, &truth, &setup, p * 1e-3)?;
        let sigma = c.rabi_relative_sigma * y;
        rabi_pts.push(DataPoint {
            x: p * 1e-3,
            y: noisy(&mut rng, y, sigma),
            sigma,
        });
    }
    let rabi = Dataset::new(DatasetKind::RabiVsPower, rabi_pts)?;

    let joint = joint_fit_beams(atom, &splittings, Some(&rabi), &setup)?;
    let split_only = match joint_fit_beams(atom, &splittings, None, &setup) {
        Ok(f) => json!({"outcome": "converged", "fit": to_value(f.fit)}),
        Err(e @ Error::Underconstrained { .. }) => json!({"outcome": "underconstrained", "message": e.to_string()}),
        Err(e) => json!({"outcome": "failed", "message": e.to_string()}),
    };
    let constraint = constrain_perp_polarization(atom, c.perp_shift_hz, c.perp_shift_sigma_hz, c.perp_power_w, cfg.perp.waist_m);

    for d in &splittings {
        let DatasetKind::Splitting { upper, lower } = d.kind else { unreachable!() };
        out.add(format!("splitting_{upper}_{lower}.csv"), d.to_csv());
    }
    out.add("rabi_vs_power.csv", rabi.to_csv());
    let fitted = joint.params.par_fractions();
    let truths = [truth.par_waist, truth.perp_waist, truth.par_sigma_plus, truth.par_pi];
    let mut csv = String::from("parameter,truth,fitted,uncertainty,deviation_sigma\n");
    for (k, name) in joint.fit.names.iter().enumerate() {
        let (t, f, u) = (truths[k], joint.fit.values[k], joint.fit.uncertainties[k]);
        let _ = writeln!(csv, "{name},{t:.9e},{f:.9e},{u:.3e},{:.3}", (f - t) / u);
    }
    out.add("calibrate.csv", csv);
    if svg {
        let model: Vec<(f64, f64)> = perp_mw
            .iter()
            .map(|p| Ok((*p, model_two_photon_rabi(atom, &joint.params, &setup, p * 1e-3)? / TAU)))
            .collect::<Result<_>>()?;
        out.plot(
            true,
            "calibrate",
            Plot::new("Two-photon Rabi frequency", "P⊥ (mW)", "Ω/2π (Hz)")
                .with(Series::new("data", rabi.points.iter().map(|q| (q.x * 1e3, q.y / TAU)).collect()))
                .with(Series::new("fit", model)),
        );
    }
    Ok(json!({
        "truth": to_value(truth),
        "joint_fit": to_value(&joint.fit),
        "fitted_params": to_value(joint.params),
        "fitted_par_fractions": fitted,
        "splittings_only": split_only,
        "perp_polarization": match constraint {
            Ok(p) => to_value(p),
            Err(e) => json!({"error": e.to_string()}),
        },
    }))
}

pub(super) fn ramsey(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let sigma_t = cfg.noise.sigma_t_s;
    let sigma_f = 1.0 / (TAU * sigma_t);
    let delays_ms = cfg.sweep_values(0.0, 3.0, 61, Scale::Linear)?;
    if delays_ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config {
            line: cfg.sweep.line,
            message: "sweep: delays must increase".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = cfg.noise.ramsey_sigma;
    let sigma = if noise > 0.0 { noise } else { 1e-3 };
    let detuning = normal(TAU * sigma_f);
    let n_mc = cfg.noise.monte_carlo_samples.max(1);
    // One shared set of frequency offsets, as in a run of repeated shots.
    let offsets: Vec<f64> = (0..n_mc).map(|_| detuning.sample(&mut rng)).collect();
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for d in &delays_ms {
        let t = d * 1e-3;
        let model = ramsey_contrast(t, sigma_f);
        let mc = offsets.iter().map(|w| (w * t).cos()).sum::<f64>() / n_mc as f64;
        let y = if noise > 0.0 { model + normal(noise).sample(&mut rng) } else { model };
        points.push(DataPoint { x: t, y, sigma });
        rows.push((t, y, model, mc));
    }
    let data = Dataset::new(DatasetKind::Ramsey, points)?;
    let fit = fit_ramsey(&data)?;
    let mut csv = String::from("delay_s,contrast,sigma,model_contrast,monte_carlo_contrast\n");
    for (t, y, m, mc) in &rows {
        let _ = writeln!(csv, "{t:.9e},{y:.9e},{sigma:.3e},{m:.9e},{mc:.9e}");
    }
    out.add("ramsey.csv", csv);
    out.plot(
        svg,
        "ramsey",
        Plot::new("Ramsey contrast", "delay (ms)", "contrast")
            .with(Series::new("data", rows.iter().map(|r| (r.0 * 1e3, r.1)).collect()))
            .with(Series::new("model", rows.iter().map(|r| (r.0 * 1e3, r.2)).collect()))
            .with(Series::new("Monte Carlo", rows.iter().map(|r| (r.0 * 1e3, r.3)).collect())),
    );
    Ok(json!({
        "sigma_t_s": sigma_t,
        "sigma_f_hz": sigma_f,
        "model_coherence_time_s": std::f64::consts::SQRT_2 * sigma_t,
        "fitted_sigma_t_s": fit.sigma_t,
        "fitted_sigma_t_uncertainty_s": fit.sigma_t_uncertainty,
        "fitted_coherence_time_s": fit.coherence_time(),
        "fitted_amplitude": fit.amplitude,
        "unbounded": fit.unbounded,
        "max_monte_carlo_deviation": rows.iter().map(|r| (r.3 - r.2).abs()).fold(0.0, f64::max),
    }))
}
