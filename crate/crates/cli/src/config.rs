//! Experiment configuration.
//!
//! Values come from a flat `key = value` file, then `RAMAN_` environment
//! variables, then command-line flags. `RAMAN_PERP__POWER_MW=120` sets
//! `perp.power_mw`: the prefix is dropped, the rest is lowercased and `__`
//! becomes the section dot.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use raman_core::dynamics::{EnvelopeShape, PropagationSettings, PulseEnvelope, DEFAULT_RAMP_FRACTION};
use raman_core::kv::KvDoc;
use raman_core::manifold::{Atom, Beam, BeamLabel, HalfInt, Polarization};
use raman_core::noise::MEASURED_SIGMA_T;
use raman_core::presets::{
    CALIBRATED_PAR_FRACTIONS, CALIBRATED_PAR_WAIST, CALIBRATED_PERP_FRACTIONS, CALIBRATED_PERP_WAIST, MAX_PAR_POWER,
    NOMINAL_WAIST,
};
use raman_core::units::thz;
use raman_core::{Error, Result};
use serde::Serialize;

pub const ENV_PREFIX: &str = "RAMAN_";

const MANIFOLDS: [&str; 5] = ["d52", "p32", "f72", "f52", "s12"];
const MANIFOLD_FIELDS: [&str; 4] = ["g", "lifetime_s", "transition_thz", "enabled"];

const KEYS: &[&str] = &[
    "seed",
    "atom.preset",
    "atom.file",
    "atom.include_f",
    "atom.omega0_hz",
    "atom.b_gauss",
    "two_level.rabi_hz",
    "two_level.detuning_hz",
    "reduced.*",
    "beams.preset",
    "beams.detuning_thz",
    "par.power_mw",
    "par.waist_um",
    "par.fractions",
    "perp.power_mw",
    "perp.waist_um",
    "perp.fractions",
    "transition.initial_mj",
    "transition.final_mj",
    "transition.photons",
    "pulse.shape",
    "pulse.duration_us",
    "pulse.samples",
    "pulse.shaped_beams",
    "pulse.ramp_fraction",
    "sweep.start",
    "sweep.stop",
    "sweep.points",
    "sweep.scale",
    "propagation.max_phase",
    "propagation.min_steps_per_period",
    "noise.sigma_t_ms",
    "noise.gamma_per_s",
    "noise.delta_m",
    "noise.shielded",
    "noise.ramsey_sigma",
    "noise.monte_carlo_samples",
    "psd.sample_rate_mhz",
    "calibrate.noise",
    "calibrate.split_sigma_hz",
    "calibrate.rabi_relative_sigma",
    "calibrate.perp_shift_hz",
    "calibrate.perp_shift_sigma_hz",
    "calibrate.perp_power_mw",
];

fn known_keys() -> Vec<String> {
    let mut keys: Vec<String> = KEYS.iter().map(|k| k.to_string()).collect();
    for m in MANIFOLDS {
        for f in MANIFOLD_FIELDS {
            keys.push(format!("{m}.{f}"));
        }
    }
    keys
}

/// Keys read by `Atom::apply_overrides`, which a manifold file may set.
fn atom_keys() -> Vec<String> {
    let mut keys = vec!["atom.omega0_hz".to_string(), "atom.b_gauss".to_string(), "reduced.*".to_string()];
    for m in MANIFOLDS {
        for f in MANIFOLD_FIELDS {
            keys.push(format!("{m}.{f}"));
        }
    }
    keys
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Square,
    Sin2,
    Sin4,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::Sin2 => "sin2",
            Shape::Sin4 => "sin4",
        }
    }

    pub fn envelope_shape(self) -> EnvelopeShape {
        match self {
            Shape::Square => EnvelopeShape::Square,
            Shape::Sin2 => EnvelopeShape::SinSquared,
            Shape::Sin4 => EnvelopeShape::SinQuartic,
        }
    }
}

/// Resonantly driven two-level system, for textbook checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoLevelConfig {
    pub rabi_hz: f64,
    pub detuning_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapedBeams {
    Par,
    Perp,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Debug, Serialize)]
pub struct BeamConfig {
    pub power_w: f64,
    pub waist_m: f64,
    /// Intensity fractions (σ⁻, π, σ⁺).
    pub fractions: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionConfig {
    pub initial_mj: String,
    pub final_mj: String,
    pub initial: usize,
    pub target: usize,
    pub photons: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PulseConfig {
    pub shape: Shape,
    pub duration_s: Option<f64>,
    pub samples: usize,
    pub shaped_beams: ShapedBeams,
    pub ramp_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    /// Source line of the first sweep key, for error messages.
    #[serde(skip)]
    pub line: usize,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub scale: Option<Scale>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseConfig {
    pub sigma_t_s: f64,
    pub gamma_per_s: f64,
    /// Field sensitivity relative to the measured transition; defaults to
    /// the transition's |ΔmJ|.
    pub delta_m: Option<u32>,
    pub shielded: bool,
    /// Absolute 1σ noise on synthetic Ramsey contrasts.
    pub ramsey_sigma: f64,
    pub monte_carlo_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrateConfig {
    pub noise: bool,
    pub split_sigma_hz: f64,
    pub rabi_relative_sigma: f64,
    pub perp_shift_hz: f64,
    pub perp_shift_sigma_hz: f64,
    pub perp_power_w: f64,
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub atom_preset: String,
    pub two_level: Option<TwoLevelConfig>,
    pub atom_file: Option<PathBuf>,
    pub include_f: bool,
    pub atom: Atom,
    pub beams_preset: String,
    pub detuning_thz: f64,
    pub par: BeamConfig,
    pub perp: BeamConfig,
    pub transition: TransitionConfig,
    pub pulse: PulseConfig,
    pub sweep: SweepConfig,
    pub propagation: PropagationSettings,
    pub noise: NoiseConfig,
    pub psd_sample_rate_hz: Option<f64>,
    pub calibrate: CalibrateConfig,
    /// Every key as given, after overrides.
    pub entries: BTreeMap<String, String>,
}

/// Collect `RAMAN_` variables as config keys, sorted by key.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            Some((rest.to_ascii_lowercase().replace("__", "."), v))
        })
        .collect();
    out.sort();
    out
}

/// Read the config file (if any) and layer `overrides` on top.
pub fn load_doc(path: Option<&Path>, overrides: &[(String, String)]) -> Result<KvDoc> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", p.display()) })?;
            KvDoc::parse(&text)?
        }
        None => KvDoc::default(),
    };
    for (k, v) in overrides {
        doc.set(k, v);
    }
    Ok(doc)
}

fn parse_mj(doc: &KvDoc, key: &str, default: &str) -> Result<(String, HalfInt)> {
    let raw = doc.str_or(key, default).trim().to_string();
    let body = raw.strip_prefix('+').unwrap_or(&raw);
    let twice = if let Some((n, d)) = body.split_once('/') {
        match (n.trim().parse::<i32>(), d.trim()) {
            (Ok(n), "2") => Some(n),
            (Ok(n), "1") => Some(2 * n),
            _ => None,
        }
    } else {
        body.parse::<f64>().ok().filter(|v| (2.0 * v).fract() == 0.0).map(|v| (2.0 * v) as i32)
    };
    let twice = twice.ok_or_else(|| doc.config_error(key, format!("expected a half-integer such as 5/2, found `{raw}`")))?;
    Ok((raw, HalfInt::from_twice(twice)))
}

fn parse_fractions(doc: &KvDoc, key: &str, default: [f64; 3]) -> Result<[f64; 3]> {
    let Some(e) = doc.get(key) else { return Ok(default) };
    let parts: Vec<f64> = e
        .value
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| doc.config_error(key, format!("expected three comma-separated numbers, found `{}`", e.value)))?;
    let [m, p, s] = parts[..] else {
        return Err(doc.config_error(key, format!("expected three fractions, found {}", parts.len())));
    };
    if [m, p, s].iter().any(|f| !(0.0..=1.0).contains(f)) || ((m + p + s) - 1.0).abs() > 1e-6 {
        return Err(doc.config_error(key, "fractions must lie in [0, 1] and sum to 1"));
    }
    Ok([m, p, s])
}

fn positive(doc: &KvDoc, key: &str, default: f64) -> Result<f64> {
    let v = doc.f64_or(key, default)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(doc.config_error(key, "must be positive"))
    }
}

fn positive_opt(doc: &KvDoc, key: &str) -> Result<Option<f64>> {
    match doc.f64_opt(key)? {
        Some(v) if !(v > 0.0) => Err(doc.config_error(key, "must be positive")),
        other => Ok(other),
    }
}

fn choice<T: Copy>(doc: &KvDoc, key: &str, default: T, options: &[(&str, T)]) -> Result<T> {
    let Some(e) = doc.get(key) else { return Ok(default) };
    let v = e.value.to_ascii_lowercase();
    options.iter().find(|(n, _)| *n == v).map(|&(_, t)| t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        doc.config_error(key, format!("expected one of {}, found `{}`", names.join("/"), e.value))
    })
}

impl ExperimentConfig {
    /// Validate and resolve every key. `base_dir` anchors a relative
    /// `atom.file`.
    pub fn from_doc(doc: &KvDoc, base_dir: &Path) -> Result<Self> {
        let known = known_keys();
        let known: Vec<&str> = known.iter().map(String::as_str).collect();
        doc.reject_unknown(&known)?;

        let seed = doc.get("seed").map_or(Ok(0), |e| {
            e.value.parse::<u64>().map_err(|_| doc.config_error("seed", "expected a non-negative integer"))
        })?;

        let atom_preset = doc.str_or("atom.preset", "ca40").to_ascii_lowercase();
        let two_level = match atom_preset.as_str() {
            "ca40" => None,
            "two_level" => Some(TwoLevelConfig {
                rabi_hz: positive(doc, "two_level.rabi_hz", 10e3)?,
                detuning_hz: doc.f64_or("two_level.detuning_hz", 0.0)?,
            }),
            _ => {
                return Err(doc.config_error(
                    "atom.preset",
                    format!("unknown preset `{atom_preset}`; available: ca40, two_level"),
                ))
            }
        };
        let mut atom = Atom::ca40();
        let atom_file = doc.get("atom.file").map(|e| base_dir.join(&e.value));
        if let Some(path) = &atom_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| doc.config_error("atom.file", format!("cannot read {}: {e}", path.display())))?;
            let file_doc = KvDoc::parse(&text).map_err(|e| in_file(path, e))?;
            let keys = atom_keys();
            let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
            file_doc.reject_unknown(&keys).map_err(|e| in_file(path, e))?;
            atom = atom.apply_overrides(&file_doc).map_err(|e| in_file(path, e))?;
        }
        atom = atom.apply_overrides(doc)?;
        let include_f = doc.bool_or("atom.include_f", false)?;

        let beams_preset = doc.str_or("beams.preset", "calibrated").to_ascii_lowercase();
        let (par_default, perp_default) = match beams_preset.as_str() {
            "calibrated" => (
                (CALIBRATED_PAR_WAIST, CALIBRATED_PAR_FRACTIONS),
                (CALIBRATED_PERP_WAIST, CALIBRATED_PERP_FRACTIONS),
            ),
            "nominal" => ((NOMINAL_WAIST, [1.0, 0.0, 0.0]), (NOMINAL_WAIST, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])),
            other => {
                return Err(doc.config_error("beams.preset", format!("unknown preset `{other}`; available: calibrated, nominal")))
            }
        };
        let detuning_thz = doc.f64_or("beams.detuning_thz", -44.0)?;
        if detuning_thz == 0.0 {
            return Err(doc.config_error("beams.detuning_thz", "must be nonzero"));
        }
        let beam = |section: &str, power_mw: f64, (waist, fractions): (f64, [f64; 3])| -> Result<BeamConfig> {
            Ok(BeamConfig {
                power_w: positive(doc, &format!("{section}.power_mw"), power_mw)? * 1e-3,
                waist_m: positive(doc, &format!("{section}.waist_um"), waist * 1e6)? * 1e-6,
                fractions: parse_fractions(doc, &format!("{section}.fractions"), fractions)?,
            })
        };
        let par = beam("par", MAX_PAR_POWER * 1e3, par_default)?;
        let perp = beam("perp", 152.0, perp_default)?;

        let (initial_mj, mi) = parse_mj(doc, "transition.initial_mj", "5/2")?;
        let (final_mj, mf) = parse_mj(doc, "transition.final_mj", "-1/2")?;
        let level = |key: &str, mj: HalfInt| {
            atom.lower
                .index_of(mj)
                .ok_or_else(|| doc.config_error(key, format!("mJ = {}/2 is not a level of the qudit manifold", mj.twice())))
        };
        let initial = level("transition.initial_mj", mi)?;
        let target = level("transition.final_mj", mf)?;
        if initial == target {
            return Err(doc.config_error("transition.final_mj", "must differ from transition.initial_mj"));
        }
        let photons = doc.usize_or("transition.photons", 4)?;
        if photons == 0 || photons % 2 != 0 {
            return Err(doc.config_error("transition.photons", "must be even and positive"));
        }

        let shape = choice(
            doc,
            "pulse.shape",
            Shape::Square,
            &[("square", Shape::Square), ("sin2", Shape::Sin2), ("sin4", Shape::Sin4)],
        )?;
        let samples = doc.usize_or("pulse.samples", 2001)?;
        if samples < 2 {
            return Err(doc.config_error("pulse.samples", "need at least 2 samples"));
        }
        let ramp_fraction = doc.f64_or("pulse.ramp_fraction", DEFAULT_RAMP_FRACTION)?;
        if !(ramp_fraction > 0.0 && ramp_fraction <= 0.5) {
            return Err(doc.config_error("pulse.ramp_fraction", "must lie in (0, 0.5]"));
        }
        let pulse = PulseConfig {
            shape,
            duration_s: positive_opt(doc, "pulse.duration_us")?.map(|us| us * 1e-6),
            samples,
            shaped_beams: choice(
                doc,
                "pulse.shaped_beams",
                ShapedBeams::Perp,
                &[("par", ShapedBeams::Par), ("perp", ShapedBeams::Perp), ("both", ShapedBeams::Both)],
            )?,
            ramp_fraction,
        };

        let sweep = SweepConfig {
            line: ["sweep.start", "sweep.stop", "sweep.points", "sweep.scale"]
                .iter()
                .map(|k| doc.line_of(k))
                .filter(|&l| l > 0)
                .min()
                .unwrap_or(0),
            start: doc.f64_opt("sweep.start")?,
            stop: doc.f64_opt("sweep.stop")?,
            points: doc.get("sweep.points").map(|_| doc.usize_or("sweep.points", 0)).transpose()?,
            scale: doc
                .get("sweep.scale")
                .map(|_| choice(doc, "sweep.scale", Scale::Linear, &[("linear", Scale::Linear), ("log", Scale::Log)]))
                .transpose()?,
        };
        if sweep.points == Some(0) {
            return Err(doc.config_error("sweep.points", "must be at least 1"));
        }

        let defaults = PropagationSettings::default();
        let propagation = PropagationSettings {
            max_phase: positive(doc, "propagation.max_phase", defaults.max_phase)?,
            min_steps_per_period: doc.usize_or("propagation.min_steps_per_period", defaults.min_steps_per_period)?,
        };
        if propagation.min_steps_per_period == 0 {
            return Err(doc.config_error("propagation.min_steps_per_period", "must be at least 1"));
        }

        let noise = NoiseConfig {
            sigma_t_s: positive(doc, "noise.sigma_t_ms", MEASURED_SIGMA_T * 1e3)? * 1e-3,
            gamma_per_s: {
                let g = doc.f64_or("noise.gamma_per_s", 0.0)?;
                if g < 0.0 {
                    return Err(doc.config_error("noise.gamma_per_s", "must be non-negative"));
                }
                g
            },
            delta_m: doc
                .get("noise.delta_m")
                .map(|_| doc.usize_or("noise.delta_m", 0).map(|v| v as u32))
                .transpose()?,
            shielded: doc.bool_or("noise.shielded", false)?,
            ramsey_sigma: {
                let s = doc.f64_or("noise.ramsey_sigma", 0.01)?;
                if s < 0.0 {
                    return Err(doc.config_error("noise.ramsey_sigma", "must be non-negative"));
                }
                s
            },
            monte_carlo_samples: doc.usize_or("noise.monte_carlo_samples", 100_000)?,
        };
        if noise.delta_m == Some(0) {
            return Err(doc.config_error("noise.delta_m", "must be at least 1"));
        }

        let calibrate = CalibrateConfig {
            noise: doc.bool_or("calibrate.noise", true)?,
            split_sigma_hz: positive(doc, "calibrate.split_sigma_hz", 10.0)?,
            rabi_relative_sigma: positive(doc, "calibrate.rabi_relative_sigma", 0.01)?,
            perp_shift_hz: doc.f64_or("calibrate.perp_shift_hz", 100.0)?,
            perp_shift_sigma_hz: positive(doc, "calibrate.perp_shift_sigma_hz", 400.0)?,
            perp_power_w: positive(doc, "calibrate.perp_power_mw", 180.0)? * 1e-3,
        };

        Ok(ExperimentConfig {
            seed,
            atom_preset,
            two_level,
            atom_file,
            include_f,
            atom,
            beams_preset,
            detuning_thz,
            par,
            perp,
            transition: TransitionConfig {
                initial_mj,
                final_mj,
                initial,
                target,
                photons,
            },
            pulse,
            sweep,
            propagation,
            noise,
            psd_sample_rate_hz: positive_opt(doc, "psd.sample_rate_mhz")?.map(|m| m * 1e6),
            calibrate,
            entries: doc.to_map(),
        })
    }

    pub fn detuning(&self) -> f64 {
        thz(self.detuning_thz)
    }

    pub fn par_polarization(&self) -> Result<Polarization> {
        let [m, p, s] = self.par.fractions;
        Polarization::from_fractions(m, p, s)
    }

    /// The perpendicular beam's π light is transverse to its σ light.
    pub fn perp_polarization(&self) -> Result<Polarization> {
        let [m, p, s] = self.perp.fractions;
        Polarization::transverse(m, p, s)
    }

    /// Parallel and perpendicular beams at the configured powers scaled by
    /// `par_scale` and `perp_scale`, untuned.
    pub fn beams_scaled(&self, par_scale: f64, perp_scale: f64) -> Result<Vec<Beam>> {
        Ok(vec![
            Beam::new(
                BeamLabel::Parallel,
                self.detuning(),
                self.par.power_w * par_scale,
                self.par.waist_m,
                self.par_polarization()?,
                0.0,
            )?,
            Beam::new(
                BeamLabel::Perpendicular,
                self.detuning(),
                self.perp.power_w * perp_scale,
                self.perp.waist_m,
                self.perp_polarization()?,
                0.0,
            )?,
        ])
    }

    pub fn beams(&self) -> Result<Vec<Beam>> {
        self.beams_scaled(1.0, 1.0)
    }

    /// Beams carrying the shaped envelope, in beam order.
    pub fn shaped_mask(&self) -> Vec<bool> {
        match self.pulse.shaped_beams {
            ShapedBeams::Par => vec![true, false],
            ShapedBeams::Perp => vec![false, true],
            ShapedBeams::Both => vec![true, true],
        }
    }

    pub fn envelope(&self, shape: Shape, duration: f64) -> Result<PulseEnvelope> {
        match shape {
            Shape::Square => PulseEnvelope::square(duration),
            _ => PulseEnvelope::new(shape.envelope_shape(), duration, self.pulse.ramp_fraction, self.shaped_mask()),
        }
    }

    /// Sweep values with per-command defaults for unset fields.
    pub fn sweep_values(&self, start: f64, stop: f64, points: usize, scale: Scale) -> Result<Vec<f64>> {
        let start = self.sweep.start.unwrap_or(start);
        let stop = self.sweep.stop.unwrap_or(stop);
        let points = self.sweep.points.unwrap_or(points);
        let scale = self.sweep.scale.unwrap_or(scale);
        let err = |m: &str| Error::Config {
            line: self.sweep.line,
            message: format!("sweep: {m}"),
        };
        if !(start.is_finite() && stop.is_finite()) {
            return Err(err("range must be finite"));
        }
        if points > 1 && start == stop {
            return Err(err("range is empty"));
        }
        if scale == Scale::Log && !(start > 0.0 && stop > 0.0) {
            return Err(err("log scale needs a positive range"));
        }
        if points == 1 {
            return Ok(vec![start]);
        }
        let f = |k: usize| k as f64 / (points - 1) as f64;
        Ok(match scale {
            Scale::Linear => (0..points).map(|k| start + (stop - start) * f(k)).collect(),
            Scale::Log => (0..points).map(|k| (start.ln() + (stop.ln() - start.ln()) * f(k)).exp()).collect(),
        })
    }

    /// Field-sensitivity ratio of the driven transition to the measured one.
    pub fn delta_m(&self) -> u32 {
        self.noise
            .delta_m
            .unwrap_or_else(|| (self.transition.initial as i64 - self.transition.target as i64).unsigned_abs() as u32)
    }
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Config { line, message } => Error::Config {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}
