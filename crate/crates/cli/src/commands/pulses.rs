use std::fmt::Write;

use raman_core::dynamics::{basis_state, propagate_with, psd_to_csv, pulse_psd};
use raman_core::pathways::Splittings;
use raman_core::Result;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{hz, lock, pulse_length, Artifacts};
use crate::config::{ExperimentConfig, Shape};
use crate::svg::{Plot, Series};

struct ShapeRow {
    shape: Shape,
    duration: f64,
    target: f64,
    final_leakage: f64,
    max_intermediate: f64,
}

pub(super) fn shape_compare(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let drive = lock(cfg, &cfg.beams()?)?;
    let h = &drive.hamiltonian;
    let pi = drive.pi_time();
    let rows: Vec<ShapeRow> = [Shape::Square, Shape::Sin2, Shape::Sin4]
        .par_iter()
        .map(|&shape| {
            let duration = pulse_length(shape, pi);
            let env = cfg.envelope(shape, duration)?;
            let traj = propagate_with(h, &basis_state(h.dim, t.initial), duration, &env, cfg.pulse.samples, &cfg.propagation)?;
            let others: Vec<usize> = (0..h.dim).filter(|&k| k != t.initial && k != t.target).collect();
            let leak_at = |r: usize| others.iter().map(|&k| traj.populations[(r, k)]).sum::<f64>();
            let last = traj.times.len() - 1;
            Ok(ShapeRow {
                shape,
                duration,
                target: traj.populations[(last, t.target)],
                final_leakage: leak_at(last),
                max_intermediate: (0..=last).map(leak_at).fold(0.0, f64::max),
            })
        })
        .collect::<Result<_>>()?;
    let square = rows[0].final_leakage;
    let mut csv = String::from("shape,duration_s,target_population,final_leakage,max_intermediate,leakage_suppression\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{:.9e},{:.12e},{:.9e},{:.9e},{:.6e}",
            r.shape.name(),
            r.duration,
            r.target,
            r.final_leakage,
            r.max_intermediate,
            square / r.final_leakage
        );
    }
    out.add("shape_compare.csv", csv);
    if svg {
        // Trajectories are recomputed at plot resolution only when asked.
        let mut plot = Plot::new("Intermediate-level population", "t (µs)", "population outside {initial, target}");
        for r in &rows {
            let env = cfg.envelope(r.shape, r.duration)?;
            let traj = propagate_with(h, &basis_state(h.dim, t.initial), r.duration, &env, cfg.pulse.samples, &cfg.propagation)?;
            let pts = (0..traj.times.len())
                .map(|i| {
                    let leak: f64 = (0..h.dim)
                        .filter(|&k| k != t.initial && k != t.target)
                        .map(|k| traj.populations[(i, k)])
                        .sum();
                    (traj.times[i] * 1e6, leak)
                })
                .collect();
            plot = plot.with(Series::new(r.shape.name(), pts));
        }
        out.plot(true, "shape_compare", plot);
    }
    Ok(json!({
        "omega_r_hz": hz(drive.omega_r),
        "pi_time_s": pi,
        "shapes": rows.iter().map(|r| json!({
            "shape": r.shape.name(),
            "duration_s": r.duration,
            "target_population": r.target,
            "final_leakage": r.final_leakage,
            "max_intermediate": r.max_intermediate,
            "leakage_suppression": square / r.final_leakage,
        })).collect::<Vec<_>>(),
    }))
}

/// Largest PSD value within `half_width` of `offset` (Hz).
pub fn psd_near(psd: &[(f64, f64)], offset: f64, half_width: f64) -> Option<f64> {
    psd.iter()
        .filter(|(f, _)| (f - offset).abs() <= half_width)
        .map(|&(_, p)| p)
        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))))
}

pub(super) fn psd(cfg: &ExperimentConfig, svg: bool, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let drive = lock(cfg, &cfg.beams()?)?;
    let pi = drive.pi_time();
    let carrier_hz = hz(drive.omega_r);
    let rate = cfg.psd_sample_rate_hz.unwrap_or(8.0 * carrier_hz);
    let shaped = match cfg.pulse.shape {
        Shape::Square => Shape::Sin2,
        s => s,
    };
    let mut spectra = Vec::new();
    for shape in [Shape::Square, shaped] {
        let duration = pulse_length(shape, pi);
        let spectrum = pulse_psd(&cfg.envelope(shape, duration)?, drive.omega_r, rate)?;
        out.add(format!("psd_{}.csv", shape.name()), psd_to_csv(&spectrum));
        spectra.push((shape, duration, spectrum));
    }
    // Two-photon resonances of the initial level with every other level,
    // as offsets from the drive.
    let energies = Splittings::bare(&cfg.atom).energies;
    let mut offsets = Vec::new();
    for m in (0..energies.len()).filter(|&m| m != t.initial && m != t.target) {
        let offset = hz((energies[m] - energies[t.initial]).abs() - drive.omega_r);
        let half_width = (0.05 * offset.abs()).max(2.0 / pi);
        let level = |k: usize| psd_near(&spectra[k].2, offset, half_width);
        let (sq, sh) = (level(0), level(1));
        offsets.push(json!({
            "level": m,
            "offset_hz": offset,
            "square_db": sq,
            "shaped_db": sh,
            "suppression_db": sq.zip(sh).map(|(a, b)| a - b),
        }));
    }
    let span = 4.0 * hz(cfg.atom.omega0());
    let mut plot = Plot::new("Pulse power spectral density", "offset from drive (Hz)", "PSD (dB)");
    for (shape, _, s) in &spectra {
        let pts = s.iter().filter(|(f, _)| f.abs() <= span).copied().collect();
        plot = plot.with(Series::new(shape.name(), pts));
    }
    out.plot(svg, "psd", plot);
    Ok(json!({
        "carrier_hz": carrier_hz,
        "sample_rate_hz": rate,
        "pi_time_s": pi,
        "shaped": shaped.name(),
        "durations_s": spectra.iter().map(|(s, d, _)| json!({"shape": s.name(), "duration_s": d})).collect::<Vec<_>>(),
        "intermediate_offsets": offsets,
    }))
}
