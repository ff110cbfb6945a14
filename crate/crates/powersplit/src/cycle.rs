//! Drive cycles: 1 Hz speed traces, file ingestion with unit handling, and
//! deterministic built-in city / highway / aggressive profiles.
//!
//! The built-ins are synthetic micro-trip profiles compiled from fixed
//! segment tables; they match the published cycles in duration and broad
//! statistics (average/top speed, stop share) but not sample-for-sample.
//! Absolute fuel-economy numbers therefore carry the same caveat as the
//! surrogate component maps: comparisons between designs are meaningful,
//! re-simulations of specific published figures are approximate. Replace
//! them with measured traces via `--cycle-dir` for exact work.

use crate::plant::{KMH, MPH};
use thiserror::Error;

/// A drive cycle resampled to exactly 1 Hz. Sample `k` is the demanded
/// vehicle speed at `t = k` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    pub speeds_mps: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("{file}:{line}: could not parse {what}")]
    Parse {
        file: String,
        line: usize,
        what: String,
    },
    #[error("cycle {0} has fewer than 2 samples")]
    TooShort(String),
    #[error("cycle {name} time stamps must increase (line {line})")]
    NonMonotonicTime { name: String, line: usize },
    #[error("cycle {name} has a negative speed at t={t}s")]
    NegativeSpeed { name: String, t: f64 },
    #[error("unknown builtin cycle `{0}` (have fuds, hwfet, us06)")]
    UnknownBuiltin(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DriveCycle {
    pub fn new(name: &str, speeds_mps: Vec<f64>) -> Result<Self, CycleError> {
        if speeds_mps.len() < 2 {
            return Err(CycleError::TooShort(name.into()));
        }
        if let Some(k) = speeds_mps.iter().position(|v| *v < 0.0) {
            return Err(CycleError::NegativeSpeed {
                name: name.into(),
                t: k as f64,
            });
        }
        Ok(Self {
            name: name.into(),
            speeds_mps,
        })
    }

    pub fn len(&self) -> usize {
        self.speeds_mps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds_mps.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        (self.len() - 1) as f64
    }

    /// Trapezoidal distance over the trace, meters.
    pub fn distance_m(&self) -> f64 {
        self.speeds_mps
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds_mps.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_speed(&self) -> f64 {
        self.distance_m() / self.duration_s()
    }

    /// Acceleration demanded over [k, k+1), m/s^2 (zero for the last sample).
    pub fn accel(&self, k: usize) -> f64 {
        if k + 1 < self.len() {
            self.speeds_mps[k + 1] - self.speeds_mps[k]
        } else {
            0.0
        }
    }

    /// Parses a two-column time/speed file. The header names the unit:
    /// `time_s,speed_mps` (or `speed_mph`, `speed_kmh`). Arbitrary time
    /// stamps are linearly resampled to 1 Hz.
    pub fn from_dsv(text: &str, name: &str, source: &str) -> Result<Self, CycleError> {
        let mut unit: Option<f64> = None;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if unit.is_none() {
                let lower = line.to_ascii_lowercase();
                unit = Some(if lower.contains("mph") {
                    MPH
                } else if lower.contains("kmh") || lower.contains("km/h") {
                    KMH
                } else if lower.contains("mps") || lower.contains("m/s") {
                    1.0
                } else {
                    return Err(CycleError::Parse {
                        file: source.into(),
                        line: lineno + 1,
                        what: "unit header (expected speed_mps|speed_mph|speed_kmh)".into(),
                    });
                });
                continue;
            }
            let mut it = line.split(',');
            let mut field = |what: &str| -> Result<f64, CycleError> {
                it.next()
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| CycleError::Parse {
                        file: source.into(),
                        line: lineno + 1,
                        what: what.into(),
                    })
            };
            let t = field("time")?;
            let v = field("speed")?;
            if let Some(last) = points.last() {
                if t <= last.0 {
                    return Err(CycleError::NonMonotonicTime {
                        name: name.into(),
                        line: lineno + 1,
                    });
                }
            }
            points.push((t, v * unit.unwrap()));
        }
        if points.len() < 2 {
            return Err(CycleError::TooShort(name.into()));
        }
        let t0 = points[0].0;
        let t_end = points.last().unwrap().0;
        let n = ((t_end - t0).floor() as usize) + 1;
        let mut speeds = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let t = t0 + k as f64;
            while seg + 1 < points.len() && points[seg + 1].0 < t {
                seg += 1;
            }
            let (ta, va) = points[seg];
            let v = if seg + 1 < points.len() {
                let (tb, vb) = points[seg + 1];
                va + (vb - va) * ((t - ta) / (tb - ta)).clamp(0.0, 1.0)
            } else {
                va
            };
            speeds.push(v.max(0.0));
        }
        DriveCycle::new(name, speeds)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CycleError> {
        let text = std::fs::read_to_string(path).map_err(|e| CycleError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cycle".into());
        Self::from_dsv(&text, &name, &path.display().to_string())
    }

    pub fn to_dsv(&self) -> String {
        let mut out = String::from("time_s,speed_mps\n");
        for (k, v) in self.speeds_mps.iter().enumerate() {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }

    /// Built-in synthetic cycles: `fuds` (urban stop-and-go, 1372 samples),
    /// `hwfet` (steady highway, 766 samples), `us06` (aggressive, 601).
    pub fn builtin(name: &str) -> Result<Self, CycleError> {
        match name.to_ascii_lowercase().as_str() {
            "fuds" | "udds" | "city" => Ok(compile(
                "fuds",
                1372,
                &[
                    (18, 13, 40.0, 24, 10),
                    (12, 18, 56.0, 34, 14),
                    (8, 15, 48.0, 28, 12),
                    (20, 25, 80.0, 36, 18),
                    (10, 28, 91.0, 44, 20),
                    (14, 14, 45.0, 24, 10),
                    (22, 10, 32.0, 18, 8),
                    (9, 19, 60.0, 40, 14),
                    (16, 16, 50.0, 26, 12),
                    (11, 23, 72.0, 42, 16),
                    (13, 12, 38.0, 20, 9),
                    (19, 17, 55.0, 30, 13),
                    (8, 13, 42.0, 23, 10),
                    (15, 20, 64.0, 40, 15),
                    (10, 15, 47.0, 26, 11),
                    (12, 10, 30.0, 15, 8),
                    (17, 18, 58.0, 32, 14),
                    (9, 16, 52.0, 28, 12),
                ],
            )),
            "hwfet" | "highway" => Ok(compile(
                "hwfet",
                766,
                &[
                    (4, 26, 78.0, 62, 14),
                    (0, 29, 88.0, 80, 16),
                    (0, 25, 75.0, 52, 13),
                    (0, 31, 95.0, 88, 17),
                    (0, 27, 82.0, 64, 15),
                    (0, 29, 90.0, 76, 16),
                    (0, 23, 70.0, 32, 17),
                ],
            )),
            "us06" | "aggressive" => Ok(compile(
                "us06",
                601,
                &[
                    (6, 12, 60.0, 10, 8),
                    (4, 18, 104.0, 30, 12),
                    (2, 24, 128.0, 50, 14),
                    (4, 14, 88.0, 20, 10),
                    (3, 21, 120.0, 62, 15),
                    (5, 16, 97.0, 26, 11),
                    (4, 19, 110.0, 36, 16),
                ],
            )),
            other => Err(CycleError::UnknownBuiltin(other.into())),
        }
    }
}

/// Compiles micro-trip segments (idle s, accel s, peak km/h, cruise s,
/// decel s) into a 1 Hz trace of exactly `samples` points, padding with
/// trailing idle or truncating as needed. Ramps follow a quarter-sine so
/// the demanded acceleration tapers as speed builds, like a real launch.
fn compile(name: &str, samples: usize, trips: &[(u32, u32, f64, u32, u32)]) -> DriveCycle {
    use std::f64::consts::FRAC_PI_2;
    let mut speeds = Vec::with_capacity(samples);
    for &(idle, accel, peak_kmh, cruise, decel) in trips {
        let peak = peak_kmh * KMH;
        for _ in 0..idle {
            speeds.push(0.0);
        }
        for k in 1..=accel {
            speeds.push(peak * (FRAC_PI_2 * k as f64 / accel as f64).sin());
        }
        for _ in 0..cruise {
            speeds.push(peak);
        }
        for k in 1..=decel {
            speeds.push(peak * (1.0 - k as f64 / decel as f64));
        }
    }
    while speeds.len() < samples {
        speeds.push(0.0);
    }
    speeds.truncate(samples);
    // End at rest so terminal-SOC accounting is clean.
    if let Some(last) = speeds.last_mut() {
        *last = 0.0;
    }
    DriveCycle::new(name, speeds).expect("builtin cycle is well-formed")
}
