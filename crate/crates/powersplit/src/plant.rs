//! Vehicle and component models: road load, engine fuel map, motor/generator
//! loss maps, and the battery equivalent circuit.
//!
//! Component maps load from delimiter-separated grid files; when no files
//! are given, parameterized surrogates scaled to the benchmark component
//! ratings are synthesized (a Willans-line engine and a copper+iron loss
//! motor). Every default constant lives in [`defaults`].

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

pub const RPM: f64 = std::f64::consts::PI / 30.0; // rad/s per rpm
pub const KMH: f64 = 1.0 / 3.6; // m/s per km/h
pub const MPH: f64 = 0.44704; // m/s per mph

/// Built-in constants: component ratings, surrogate coefficients, search
/// grids and screening thresholds. Anything here can be overridden through
/// the run configuration file.
pub mod defaults {
    use super::RPM;

    pub const VEHICLE_MASS_KG: f64 = 2680.0;
    pub const TIRE_RADIUS_M: f64 = 0.4;
    pub const FINAL_DRIVE: f64 = 3.42;
    pub const ROLLING_COEFF: f64 = 0.009;
    pub const DRAG_AREA_M2: f64 = 1.2; // Cd * A
    pub const AIR_DENSITY: f64 = 1.225;
    pub const GRAVITY: f64 = 9.81;

    pub const FUEL_LHV_J_PER_G: f64 = 43_000.0;
    pub const FUEL_DENSITY_G_PER_L: f64 = 745.0;
    pub const LITERS_PER_GALLON: f64 = 3.785_411_784;
    pub const METERS_PER_MILE: f64 = 1_609.344;

    pub const ENGINE_IDLE_RPM: f64 = 800.0;
    pub const ENGINE_MAX_RPM: f64 = 5_100.0;
    pub const ENGINE_PEAK_POWER_W: f64 = 248_000.0;
    pub const ENGINE_PEAK_TORQUE_NM: f64 = 498.0;
    pub const ENGINE_PEAK_TORQUE_RPM: f64 = 4_100.0;
    /// Willans line: fuel power = WILLANS_LOSS_W_PER_RADS * speed
    /// + brake power / WILLANS_MARGINAL_EFF.
    pub const WILLANS_MARGINAL_EFF: f64 = 0.40;
    pub const WILLANS_LOSS_W_PER_RADS: f64 = 138.3;
    pub const ENGINE_INERTIA: f64 = 0.22;

    pub const MG_MAX_TORQUE_NM: f64 = 300.0;
    pub const MG_MAX_POWER_W: f64 = 60_000.0;
    pub const MG_MAX_SPEED_RPM: f64 = 9_000.0;
    /// Copper + iron loss model: loss = C0 + CU*T^2 + FE*w^2 (watts).
    pub const MG_LOSS_C0_W: f64 = 100.0;
    pub const MG_LOSS_CU: f64 = 0.12;
    pub const MG_LOSS_FE: f64 = 0.015;

    pub const BATTERY_MAX_POWER_W: f64 = 40_000.0;
    pub const BATTERY_VOLTAGE: f64 = 300.0;
    pub const BATTERY_CAPACITY_AS: f64 = 6.5 * 3600.0;
    pub const BATTERY_RESISTANCE_OHM: f64 = 0.3;
    pub const SOC_MIN: f64 = 0.4;
    pub const SOC_MAX: f64 = 0.8;
    pub const SOC_NOMINAL: f64 = 0.6;

    /// Operating-point search grids.
    pub const ENGINE_SPEED_STEP_RPM: f64 = 100.0;
    pub const ENGINE_TORQUE_STEP_NM: f64 = 10.0;
    pub const MG_TORQUE_STEP_NM: f64 = 10.0;
    /// Speed-torque cell sizes at the output node.
    pub const STC_SPEED_BIN_KMH: f64 = 2.0;
    pub const STC_TORQUE_BIN_NM: f64 = 100.0;

    /// Launch screening thresholds (seconds, 0-100 km/h).
    pub const LAUNCH_ACCEPT_S: f64 = 7.0;
    pub const LAUNCH_BENCHMARK_S: f64 = 6.69;
    pub const LAUNCH_TOP_SPEED_KMH: f64 = 180.0;

    /// City/highway composite weighting.
    pub const CITY_WEIGHT: f64 = 0.55;
    pub const HIGHWAY_WEIGHT: f64 = 0.45;

    pub fn engine_idle_rads() -> f64 {
        ENGINE_IDLE_RPM * RPM
    }

    pub fn engine_max_rads() -> f64 {
        ENGINE_MAX_RPM * RPM
    }

    pub fn mg_max_rads() -> f64 {
        MG_MAX_SPEED_RPM * RPM
    }
}

/// Chassis-level parameters and unit conversions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VehicleParams {
    pub mass_kg: f64,
    pub tire_radius_m: f64,
    pub final_drive: f64,
    pub rolling_coeff: f64,
    pub drag_area_m2: f64,
    pub air_density: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass_kg: defaults::VEHICLE_MASS_KG,
            tire_radius_m: defaults::TIRE_RADIUS_M,
            final_drive: defaults::FINAL_DRIVE,
            rolling_coeff: defaults::ROLLING_COEFF,
            drag_area_m2: defaults::DRAG_AREA_M2,
            air_density: defaults::AIR_DENSITY,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, v) in [
            ("mass_kg", self.mass_kg),
            ("tire_radius_m", self.tire_radius_m),
            ("final_drive", self.final_drive),
        ] {
            if v <= 0.0 {
                return Err(PlantError::BadParameter {
                    name: name.into(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Output-node speed (upstream of the final drive) at vehicle speed `v`.
    pub fn output_speed(&self, v: f64) -> f64 {
        self.final_drive * v / self.tire_radius_m
    }

    pub fn vehicle_speed(&self, omega_out: f64) -> f64 {
        omega_out * self.tire_radius_m / self.final_drive
    }

    /// Rolling + aerodynamic resistance force at the wheels, newtons.
    pub fn road_load_force(&self, v: f64) -> f64 {
        debug_assert!(v >= 0.0);
        self.mass_kg * defaults::GRAVITY * self.rolling_coeff
            + 0.5 * self.air_density * self.drag_area_m2 * v * v
    }

    /// Road-load torque reflected to the output node.
    pub fn road_load(&self, v: f64) -> f64 {
        self.road_load_force(v) * self.tire_radius_m / self.final_drive
    }

    /// Output-node torque equivalent of a longitudinal force at the wheels.
    pub fn force_to_output_torque(&self, force: f64) -> f64 {
        force * self.tire_radius_m / self.final_drive
    }

    pub fn output_torque_to_force(&self, torque: f64) -> f64 {
        torque * self.final_drive / self.tire_radius_m
    }
}

/// A dense grid with bilinear interpolation; queries outside the grid clamp
/// to the boundary and bump a warning counter.
#[derive(Debug)]
pub struct Grid2d {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// z[i][j] at (y[i], x[j]).
    pub z: Vec<Vec<f64>>,
    clamp_count: AtomicU64,
}

impl Clone for Grid2d {
    fn clone(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.clone(),
            z: self.z.clone(),
            clamp_count: AtomicU64::new(self.clamp_count.load(Ordering::Relaxed)),
        }
    }
}

impl Grid2d {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<Vec<f64>>) -> Result<Self, PlantError> {
        if x.len() < 2 || y.len() < 2 {
            return Err(PlantError::GridTooSmall);
        }
        if !x.windows(2).all(|w| w[0] < w[1]) || !y.windows(2).all(|w| w[0] < w[1]) {
            return Err(PlantError::GridNotMonotonic);
        }
        if z.len() != y.len() || z.iter().any(|row| row.len() != x.len()) {
            return Err(PlantError::GridShape);
        }
        Ok(Self {
            x,
            y,
            z,
            clamp_count: AtomicU64::new(0),
        })
    }

    pub fn clamp_warnings(&self) -> u64 {
        self.clamp_count.load(Ordering::Relaxed)
    }

    fn locate(axis: &[f64], v: f64) -> (usize, f64, bool) {
        if v <= axis[0] {
            return (0, 0.0, v < axis[0]);
        }
        let last = axis.len() - 1;
        if v >= axis[last] {
            return (last - 1, 1.0, v > axis[last]);
        }
        let mut lo = 0;
        let mut hi = last;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if axis[mid] <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, (v - axis[lo]) / (axis[lo + 1] - axis[lo]), false)
    }

    pub fn at(&self, x: f64, y: f64) -> f64 {
        let (i, ty, cy) = Self::locate(&self.y, y);
        let (j, tx, cx) = Self::locate(&self.x, x);
        if cx || cy {
            self.clamp_count.fetch_add(1, Ordering::Relaxed);
        }
        let z00 = self.z[i][j];
        let z01 = self.z[i][j + 1];
        let z10 = self.z[i + 1][j];
        let z11 = self.z[i + 1][j + 1];
        z00 * (1.0 - tx) * (1.0 - ty)
            + z01 * tx * (1.0 - ty)
            + z10 * (1.0 - tx) * ty
            + z11 * tx * ty
    }

    pub fn max_value(&self) -> f64 {
        self.z
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes the grid in the map-file layout: a `torque\speed` header row
    /// of x values, then one row per y value.
    pub fn to_dsv(&self, header: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {header}");
        let cols: Vec<String> = self.x.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "torque\\speed,{}", cols.join(","));
        for (i, yv) in self.y.iter().enumerate() {
            let row: Vec<String> = self.z[i].iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{yv},{}", row.join(","));
        }
        out
    }

    /// Parses the map-file layout. `source` names the file in diagnostics.
    pub fn from_dsv(text: &str, source: &str) -> Result<Self, PlantError> {
        let mut x: Option<Vec<f64>> = None;
        let mut y = Vec::new();
        let mut z = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',');
            let head = fields.next().unwrap_or("").trim();
            if x.is_none() {
                let parsed: Result<Vec<f64>, _> = fields.map(|f| f.trim().parse::<f64>()).collect();
                x = Some(parsed.map_err(|_| PlantError::Parse {
                    file: source.into(),
                    line: lineno + 1,
                    what: "speed header".into(),
                })?);
                continue;
            }
            let yv: f64 = head.parse().map_err(|_| PlantError::Parse {
                file: source.into(),
                line: lineno + 1,
                what: "torque label".into(),
            })?;
            let row: Result<Vec<f64>, _> = fields.map(|f| f.trim().parse::<f64>()).collect();
            let row = row.map_err(|_| PlantError::Parse {
                file: source.into(),
                line: lineno + 1,
                what: "map row".into(),
            })?;
            y.push(yv);
            z.push(row);
        }
        let x = x.ok_or(PlantError::GridTooSmall)?;
        Self::new(x, y, z)
    }
}

/// Engine: wide-open-throttle curve, fuel-rate map and its peak efficiency.
#[derive(Debug, Clone)]
pub struct EngineModel {
    pub idle: f64,
    pub max_speed: f64,
    /// (speed rad/s, torque N*m) anchors; linearly interpolated.
    pub wot: Vec<(f64, f64)>,
    /// Fuel power (W) over (speed rad/s, torque N*m).
    pub fuel_map: Grid2d,
    /// Highest brake efficiency anywhere on the map.
    pub peak_eff: f64,
    pub inertia: f64,
}

impl EngineModel {
    pub fn max_torque(&self, speed: f64) -> f64 {
        if speed < self.idle || speed > self.max_speed {
            return 0.0;
        }
        let mut prev = self.wot[0];
        for &(w, t) in &self.wot {
            if w >= speed {
                if w == prev.0 {
                    return t;
                }
                let f = (speed - prev.0) / (w - prev.0);
                return prev.1 + f * (t - prev.1);
            }
            prev = (w, t);
        }
        prev.1
    }

    /// Fuel energy rate in watts.
    pub fn fuel_power(&self, speed: f64, torque: f64) -> f64 {
        self.fuel_map.at(speed, torque).max(0.0)
    }

    pub fn efficiency(&self, speed: f64, torque: f64) -> f64 {
        let brake = speed * torque;
        if brake <= 0.0 {
            return 0.0;
        }
        let fuel = self.fuel_power(speed, torque);
        if fuel <= 0.0 {
            0.0
        } else {
            brake / fuel
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(0.0 < self.peak_eff && self.peak_eff < 1.0) {
            return Err(PlantError::BadParameter {
                name: "engine peak efficiency".into(),
                value: self.peak_eff,
            });
        }
        let peak_t = self
            .wot
            .iter()
            .map(|&(_, t)| t)
            .fold(f64::NEG_INFINITY, f64::max);
        let peak_p = self
            .wot
            .iter()
            .map(|&(w, t)| w * t)
            .fold(f64::NEG_INFINITY, f64::max);
        if (peak_t - defaults::ENGINE_PEAK_TORQUE_NM).abs() / defaults::ENGINE_PEAK_TORQUE_NM > 0.01
        {
            return Err(PlantError::BadParameter {
                name: "engine peak torque".into(),
                value: peak_t,
            });
        }
        if (peak_p - defaults::ENGINE_PEAK_POWER_W).abs() / defaults::ENGINE_PEAK_POWER_W > 0.01 {
            return Err(PlantError::BadParameter {
                name: "engine peak power".into(),
                value: peak_p,
            });
        }
        Ok(())
    }
}

/// Motor/generator: symmetric speed/torque limits, a loss map, and the
/// efficiencies derived from it. Four-quadrant by construction: losses
/// depend on |speed| and |torque| only.
#[derive(Debug, Clone)]
pub struct MotorModel {
    pub max_speed: f64,
    pub max_torque: f64,
    pub max_power: f64,
    /// Electrical loss (W) over (|speed| rad/s, |torque| N*m).
    pub loss_map: Grid2d,
    /// Highest conversion efficiency anywhere on the admissible map.
    pub peak_eff: f64,
}

impl MotorModel {
    /// Torque magnitude available at a signed shaft speed.
    pub fn torque_limit(&self, speed: f64) -> f64 {
        let w = speed.abs();
        if w > self.max_speed {
            return 0.0;
        }
        if w < 1e-9 {
            self.max_torque
        } else {
            self.max_torque.min(self.max_power / w)
        }
    }

    pub fn loss(&self, speed: f64, torque: f64) -> f64 {
        self.loss_map.at(speed.abs(), torque.abs()).max(0.0)
    }

    /// Electrical terminal power: mechanical power plus losses. Positive
    /// draws from the bus, negative feeds it.
    pub fn electrical_power(&self, speed: f64, torque: f64) -> f64 {
        speed * torque + self.loss(speed, torque)
    }

    /// Conversion efficiency at the operating point: output over input for
    /// whichever direction power flows; zero at zero mechanical power.
    pub fn efficiency(&self, speed: f64, torque: f64) -> f64 {
        let mech = speed * torque;
        let loss = self.loss(speed, torque);
        if mech.abs() < 1e-9 {
            return 0.0;
        }
        if mech > 0.0 {
            mech / (mech + loss)
        } else {
            ((-mech - loss) / -mech).max(0.0)
        }
    }

    pub fn within_limits(&self, speed: f64, torque: f64) -> bool {
        speed.abs() <= self.max_speed + 1e-9 && torque.abs() <= self.torque_limit(speed) + 1e-9
    }
}

/// Battery: internal-resistance equivalent circuit with a SOC window.
/// Terminal power is positive on discharge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryModel {
    pub max_power: f64,
    pub voltage: f64,
    pub capacity_as: f64,
    pub resistance: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            max_power: defaults::BATTERY_MAX_POWER_W,
            voltage: defaults::BATTERY_VOLTAGE,
            capacity_as: defaults::BATTERY_CAPACITY_AS,
            resistance: defaults::BATTERY_RESISTANCE_OHM,
            soc_min: defaults::SOC_MIN,
            soc_max: defaults::SOC_MAX,
        }
    }
}

impl BatteryModel {
    /// Circuit current for a terminal power (positive = discharge).
    pub fn current(&self, p_terminal: f64) -> Option<f64> {
        let disc = self.voltage * self.voltage - 4.0 * self.resistance * p_terminal;
        if disc < 0.0 {
            return None;
        }
        Some((self.voltage - disc.sqrt()) / (2.0 * self.resistance))
    }

    /// SOC rate in 1/s; `None` when the power demand exceeds the circuit or
    /// the configured power limit.
    pub fn soc_rate(&self, p_terminal: f64, _soc: f64) -> Option<f64> {
        if p_terminal.abs() > self.max_power + 1e-6 {
            return None;
        }
        let i = self.current(p_terminal)?;
        Some(-i / self.capacity_as)
    }

    /// Chemical power drawn from (positive) or stored into (negative) the
    /// cell stack.
    pub fn chemical_power(&self, p_terminal: f64) -> Option<f64> {
        Some(self.voltage * self.current(p_terminal)?)
    }

    /// One-way conversion efficiency at a terminal power.
    pub fn efficiency(&self, p_terminal: f64) -> f64 {
        let Some(i) = self.current(p_terminal) else {
            return 0.0;
        };
        let chem = self.voltage * i;
        if p_terminal > 0.0 {
            if chem <= 0.0 {
                0.0
            } else {
                p_terminal / chem
            }
        } else if p_terminal < 0.0 {
            chem / p_terminal // both negative: stored over supplied
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(PlantError::BadParameter {
                name: "soc window".into(),
                value: self.soc_min,
            });
        }
        if self.voltage <= 0.0 || self.capacity_as <= 0.0 || self.resistance <= 0.0 {
            return Err(PlantError::BadParameter {
                name: "battery circuit".into(),
                value: self.voltage,
            });
        }
        Ok(())
    }
}

/// The full plant: chassis, engine, both MGs and the battery.
#[derive(Debug, Clone)]
pub struct Plant {
    pub vehicle: VehicleParams,
    pub engine: EngineModel,
    pub mg1: MotorModel,
    pub mg2: MotorModel,
    pub battery: BatteryModel,
}

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("{file}:{line}: could not parse {what}")]
    Parse {
        file: String,
        line: usize,
        what: String,
    },
    #[error("parameter {name} out of range (got {value})")]
    BadParameter { name: String, value: f64 },
    #[error("map grid needs at least 2x2 points")]
    GridTooSmall,
    #[error("map grid axes must be strictly increasing")]
    GridNotMonotonic,
    #[error("map grid rows do not match the header")]
    GridShape,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Default wide-open-throttle anchors: rated torque at its rated speed and
/// rated power at top speed.
fn default_wot() -> Vec<(f64, f64)> {
    let top = defaults::ENGINE_MAX_RPM * RPM;
    vec![
        (defaults::ENGINE_IDLE_RPM * RPM, 330.0),
        (1_500.0 * RPM, 400.0),
        (2_500.0 * RPM, 455.0),
        (3_250.0 * RPM, 480.0),
        (
            defaults::ENGINE_PEAK_TORQUE_RPM * RPM,
            defaults::ENGINE_PEAK_TORQUE_NM,
        ),
        (4_600.0 * RPM, 485.0),
        (top, defaults::ENGINE_PEAK_POWER_W / top),
    ]
}

fn synth_engine() -> EngineModel {
    let speeds: Vec<f64> = (0..=43)
        .map(|i| (defaults::ENGINE_IDLE_RPM + 100.0 * i as f64) * RPM)
        .collect();
    let torques: Vec<f64> = (0..=50).map(|i| 10.0 * i as f64).collect();
    let z = torques
        .iter()
        .map(|&t| {
            speeds
                .iter()
                .map(|&w| {
                    defaults::WILLANS_LOSS_W_PER_RADS * w + t * w / defaults::WILLANS_MARGINAL_EFF
                })
                .collect()
        })
        .collect();
    let fuel_map = Grid2d::new(speeds, torques, z).expect("static grid");
    let mut engine = EngineModel {
        idle: defaults::ENGINE_IDLE_RPM * RPM,
        max_speed: defaults::ENGINE_MAX_RPM * RPM,
        wot: default_wot(),
        fuel_map,
        peak_eff: 0.0,
        inertia: defaults::ENGINE_INERTIA,
    };
    engine.peak_eff = scan_engine_peak(&engine);
    engine
}

/// Peak brake efficiency over the map grid nodes.
fn scan_engine_peak(engine: &EngineModel) -> f64 {
    let mut best: f64 = 0.0;
    for &t in &engine.fuel_map.y {
        for &w in &engine.fuel_map.x {
            best = best.max(engine.efficiency(w, t));
        }
    }
    best
}

fn synth_motor() -> MotorModel {
    let speeds: Vec<f64> = (0..=90).map(|i| 100.0 * i as f64 * RPM).collect();
    let torques: Vec<f64> = (0..=30).map(|i| 10.0 * i as f64).collect();
    let z = torques
        .iter()
        .map(|&t| {
            speeds
                .iter()
                .map(|&w| {
                    defaults::MG_LOSS_C0_W
                        + defaults::MG_LOSS_CU * t * t
                        + defaults::MG_LOSS_FE * w * w
                })
                .collect()
        })
        .collect();
    let loss_map = Grid2d::new(speeds, torques, z).expect("static grid");
    let mut mg = MotorModel {
        max_speed: defaults::MG_MAX_SPEED_RPM * RPM,
        max_torque: defaults::MG_MAX_TORQUE_NM,
        max_power: defaults::MG_MAX_POWER_W,
        loss_map,
        peak_eff: 0.0,
    };
    mg.peak_eff = scan_motor_peak(&mg);
    mg
}

/// Peak motoring efficiency over admissible grid nodes.
fn scan_motor_peak(mg: &MotorModel) -> f64 {
    let mut best: f64 = 0.0;
    for &t in &mg.loss_map.y {
        for &w in &mg.loss_map.x {
            if t * w > mg.max_power || t > mg.max_torque || w > mg.max_speed {
                continue;
            }
            best = best.max(mg.efficiency(w, t));
        }
    }
    best
}

impl Plant {
    /// The default plant built from the parameterized surrogates.
    pub fn surrogate() -> Self {
        let mg = synth_motor();
        Self {
            vehicle: VehicleParams::default(),
            engine: synth_engine(),
            mg1: mg.clone(),
            mg2: mg,
            battery: BatteryModel::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        self.vehicle.validate()?;
        self.engine.validate()?;
        self.battery.validate()?;
        Ok(())
    }

    /// Loads component maps from a directory, falling back to surrogates
    /// for any file that is absent. Recognized names: `engine_fuel_map.csv`,
    /// `engine_wot.csv`, `mg_loss_map.csv`.
    pub fn load_maps(dir: &Path) -> Result<Self, PlantError> {
        let mut plant = Plant::surrogate();
        let fuel = dir.join("engine_fuel_map.csv");
        if fuel.is_file() {
            let text = std::fs::read_to_string(&fuel).map_err(|e| PlantError::Io {
                path: fuel.display().to_string(),
                source: e,
            })?;
            plant.engine.fuel_map = Grid2d::from_dsv(&text, &fuel.display().to_string())?;
            plant.engine.peak_eff = scan_engine_peak(&plant.engine);
        }
        let wot = dir.join("engine_wot.csv");
        if wot.is_file() {
            let text = std::fs::read_to_string(&wot).map_err(|e| PlantError::Io {
                path: wot.display().to_string(),
                source: e,
            })?;
            plant.engine.wot = parse_wot(&text, &wot.display().to_string())?;
        }
        let mg = dir.join("mg_loss_map.csv");
        if mg.is_file() {
            let text = std::fs::read_to_string(&mg).map_err(|e| PlantError::Io {
                path: mg.display().to_string(),
                source: e,
            })?;
            let map = Grid2d::from_dsv(&text, &mg.display().to_string())?;
            plant.mg1.loss_map = map.clone();
            plant.mg2.loss_map = map;
            plant.mg1.peak_eff = scan_motor_peak(&plant.mg1);
            plant.mg2.peak_eff = plant.mg1.peak_eff;
        }
        plant.validate()?;
        Ok(plant)
    }
}

fn parse_wot(text: &str, source: &str) -> Result<Vec<(f64, f64)>, PlantError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, PlantError> {
            s.and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| PlantError::Parse {
                    file: source.into(),
                    line: lineno + 1,
                    what: "speed,torque pair".into(),
                })
        };
        let w = parse(it.next())?;
        let t = parse(it.next())?;
        out.push((w, t));
    }
    if out.len() < 2 {
        return Err(PlantError::GridTooSmall);
    }
    Ok(out)
}
