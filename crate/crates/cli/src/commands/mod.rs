//! Subcommand implementations. Each returns its files in memory; they are
//! written only after the whole command has succeeded.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use raman_core::dynamics::RAMPED_LENGTH_FACTOR;
use raman_core::stark::{lock_resonance, LockedDrive};
use raman_core::Result;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Shape};
use crate::svg::Plot;
use crate::Command;

mod analysis;
mod drive;
mod fits;
mod pulses;

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn plot(&mut self, enabled: bool, name: &str, plot: Plot) {
        if enabled {
            self.add(format!("{name}.svg"), plot.render());
        }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::with_capacity(self.files.len());
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            out.push(path);
        }
        Ok(out)
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig, svg: bool) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    if cfg.two_level.is_some() && command != Command::Flop {
        return Err(raman_core::Error::Config {
            line: 0,
            message: format!("atom.preset = two_level supports only `flop`, not `{}`", command.name()),
        });
    }
    let results = match command {
        Command::Flop => drive::flop(cfg, svg, &mut out)?,
        Command::Spectrum => drive::spectrum(cfg, svg, &mut out)?,
        Command::PowerSweep => drive::power_sweep(cfg, svg, &mut out)?,
        Command::Budget => drive::budget(cfg, svg, &mut out)?,
        Command::ShapeCompare => pulses::shape_compare(cfg, svg, &mut out)?,
        Command::Psd => pulses::psd(cfg, svg, &mut out)?,
        Command::Shifts => analysis::shifts(cfg, &mut out)?,
        Command::RabiExpr => analysis::rabi_expr(cfg, &mut out)?,
        Command::Calibrate => fits::calibrate(cfg, svg, &mut out)?,
        Command::Ramsey => fits::ramsey(cfg, svg, &mut out)?,
    };
    out.add(format!("{}.json", command.name()), summary(command, cfg, results));
    Ok(out)
}

fn summary(command: Command, cfg: &ExperimentConfig, results: serde_json::Value) -> String {
    let doc = json!({
        "command": command.name(),
        "config": cfg,
        "results": results,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("config and results serialize");
    s.push('\n');
    s
}

fn to_value(v: impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("plain data serializes")
}

pub(crate) fn hz(w: f64) -> f64 {
    w / TAU
}

/// Lock the configured transition with the given beams.
fn lock(cfg: &ExperimentConfig, beams: &[raman_core::manifold::Beam]) -> Result<LockedDrive> {
    let t = &cfg.transition;
    lock_resonance(&cfg.atom, beams, t.initial, t.target, t.photons, cfg.include_f, &cfg.propagation)
}

/// Square pulses last one π time; ramped ones are stretched to keep the
/// pulse area.
fn pulse_length(shape: Shape, pi_time: f64) -> f64 {
    match shape {
        Shape::Square => pi_time,
        _ => RAMPED_LENGTH_FACTOR * pi_time,
    }
}

/// Local log–log slopes by finite differences.
fn local_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (y[b].ln() - y[a].ln()) / (x[b].ln() - x[a].ln())
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_a_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
        for s in local_slopes(&x, &y) {
            assert!((s - 1.5).abs() < 1e-12);
        }
    }
}
