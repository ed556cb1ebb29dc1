//! Measurement series and their CSV form.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    /// Population vs pulse time (s).
    Flop,
    /// Contrast vs delay (s).
    Ramsey,
    /// Splitting `E_i − E_j` (rad/s) vs parallel-beam power (W).
    Splitting { upper: usize, lower: usize },
    /// Two-photon Rabi frequency (rad/s) vs perpendicular-beam power (W).
    RabiVsPower,
}

impl DatasetKind {
    fn header(&self) -> String {
        match self {
            DatasetKind::Flop => "t_s,population,sigma".into(),
            DatasetKind::Ramsey => "delay_s,contrast,sigma".into(),
            DatasetKind::Splitting { upper, lower } => format!("par_power_w,split_{upper}_{lower}_hz,sigma_hz"),
            DatasetKind::RabiVsPower => "perp_power_w,rabi_hz,sigma_hz".into(),
        }
    }

    /// Factor from stored (SI, rad/s) `y` values to CSV units.
    fn y_unit(&self) -> f64 {
        match self {
            DatasetKind::Flop | DatasetKind::Ramsey => 1.0,
            _ => 1.0 / TAU,
        }
    }

    fn from_header(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Config {
            line: 1,
            message: format!("unrecognized dataset header '{line}'"),
        };
        if cols.len() != 3 {
            return Err(bad());
        }
        match (cols[0], cols[1]) {
            ("t_s", "population") => Ok(DatasetKind::Flop),
            ("delay_s", "contrast") => Ok(DatasetKind::Ramsey),
            ("perp_power_w", "rabi_hz") => Ok(DatasetKind::RabiVsPower),
            ("par_power_w", y) if y.starts_with("split_") && y.ends_with("_hz") => {
                let mid: Vec<&str> = y["split_".len()..y.len() - 3].split('_').collect();
                match mid.as_slice() {
                    [a, b] => Ok(DatasetKind::Splitting {
                        upper: a.parse().map_err(|_| bad())?,
                        lower: b.parse().map_err(|_| bad())?,
                    }),
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub points: Vec<DataPoint>,
}

impl Dataset {
    pub fn new(kind: DatasetKind, points: Vec<DataPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("dataset has no points"));
        }
        if let Some(p) = points.iter().find(|p| !(p.sigma > 0.0) || !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid(format!(
                "invalid point at x = {}: uncertainties must be positive and values finite",
                p.x
            )));
        }
        if points.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(Error::invalid("x values must increase strictly"));
        }
        Ok(Dataset { kind, points })
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    pub fn to_csv(&self) -> String {
        let f = self.kind.y_unit();
        let mut s = self.kind.header();
        s.push('\n');
        for p in &self.points {
            s.push_str(&format!("{:.12e},{:.12e},{:.6e}\n", p.x, p.y * f, p.sigma * f));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Config {
            line: 1,
            message: "empty dataset".into(),
        })?;
        let kind = DatasetKind::from_header(header)?;
        let f = kind.y_unit();
        let mut points = Vec::new();
        for (k, line) in lines {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config {
                    line: k + 1,
                    message: format!("bad number: {e}"),
                })?;
            if vals.len() != 3 {
                return Err(Error::Config {
                    line: k + 1,
                    message: format!("expected 3 columns, found {}", vals.len()),
                });
            }
            points.push(DataPoint {
                x: vals[0],
                y: vals[1] / f,
                sigma: vals[2] / f,
            });
        }
        Dataset::new(kind, points).map_err(|e| Error::Config {
            line: 1,
            message: e.to_string(),
        })
    }
}
