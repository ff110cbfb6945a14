//! Run configuration and design files: TOML ingestion of gear-train layout,
//! device placement, inertia overrides, plant parameters, grid settings and
//! screening thresholds.

use crate::cycle::DriveCycle;
use crate::designs::Design;
use crate::dp::{DpConfig, SocRounding};
use crate::launch::LaunchConfig;
use crate::pears::PearsConfig;
use crate::planetary::{Configuration, Connection, GearTrain, Inertias, Node, PgSet, Placement};
use crate::plant::{BatteryModel, Plant, VehicleParams, RPM};
use crate::rational::{parse_frac, Frac};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: &Path, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Raw run-configuration file. Every section is optional; defaults fill in
/// the benchmark vehicle.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub train: Option<TrainSection>,
    pub placement: Option<PlacementSection>,
    pub inertias: Option<InertiaSection>,
    pub vehicle: Option<VehicleParams>,
    pub battery: Option<BatteryModel>,
    pub search: Option<SearchSection>,
    pub scheduler: Option<SchedulerSection>,
    pub launch: Option<LaunchSection>,
    pub paths: Option<PathsSection>,
    pub reference: Option<ReferenceCounts>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub n_pg: usize,
    /// Single ratio for all sets, or one per set.
    pub ring_sun_ratio: Option<String>,
    pub ring_sun_ratios: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSection {
    pub engine: String,
    pub mg1: String,
    pub mg2: String,
    pub output: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaSection {
    pub engine: Option<String>,
    pub mg1: Option<String>,
    pub mg2: Option<String>,
    pub node_parasitic: Option<String>,
    pub vehicle_at_output: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub speed_bin_kmh: Option<f64>,
    pub torque_bin_nm: Option<f64>,
    pub engine_speed_step_rpm: Option<f64>,
    pub engine_torque_step_nm: Option<f64>,
    pub mg_torque_step_nm: Option<f64>,
    pub free_speed_step_rpm: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSection {
    pub soc_step: Option<f64>,
    pub soc_initial: Option<f64>,
    pub soc_desired: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub shift_weights: Option<[f64; 3]>,
    pub snap_soc: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchSection {
    pub accept_s: Option<f64>,
    pub benchmark_s: Option<f64>,
    pub battery_cap: Option<bool>,
    pub reflected_inertia: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub map_dir: Option<PathBuf>,
    pub cycle_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Design used as the funnel comparison bar (default: the built-in
    /// four-clutch benchmark).
    pub benchmark_design: Option<PathBuf>,
}

/// Published funnel counts reported side by side with this run's.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCounts {
    pub unique_designs: u64,
    pub launch_acceptable: u64,
    pub better_economy: u64,
    pub better_both: u64,
}

impl Default for ReferenceCounts {
    fn default() -> Self {
        Self {
            unique_designs: 28_731,
            launch_acceptable: 261,
            better_economy: 29,
            better_both: 14,
        }
    }
}

/// A design file: connection lists over the run configuration's placement.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub name: String,
    pub permanent: Vec<Connection>,
    pub clutches: Vec<Connection>,
}

/// Everything a run needs, resolved from file plus defaults.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub base: Configuration,
    pub inertias: Inertias,
    pub plant: Plant,
    pub pears: PearsConfig,
    pub dp: DpConfig,
    pub launch: LaunchConfig,
    pub cache_dir: PathBuf,
    pub cycle_dir: Option<PathBuf>,
    pub reference: ReferenceCounts,
    /// The comparison benchmark (file from `paths.benchmark_design`, or
    /// the built-in four-clutch design).
    pub benchmark: DesignFile,
    /// Digest of the resolved configuration, for manifest drift checks.
    pub digest: u128,
}

impl RunContext {
    /// Defaults only: the benchmark vehicle with the shipped placement.
    pub fn default_context() -> Self {
        Self::from_file_struct(RunConfigFile::default(), Path::new("<defaults>"), "")
            .expect("defaults are valid")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let file: RunConfigFile = toml::from_str(&text).map_err(|e| invalid(path, e))?;
        Self::from_file_struct(file, path, &text)
    }

    fn from_file_struct(
        file: RunConfigFile,
        path: &Path,
        raw_text: &str,
    ) -> Result<Self, ConfigError> {
        let train = match &file.train {
            None => {
                GearTrain::uniform(3, Frac::from_integer(2.into())).map_err(|e| invalid(path, e))?
            }
            Some(section) => {
                let ratios: Vec<Frac> = if let Some(list) = &section.ring_sun_ratios {
                    if list.len() != section.n_pg {
                        return Err(invalid(path, "ring_sun_ratios length != n_pg"));
                    }
                    list.iter()
                        .map(|s| parse_frac(s))
                        .collect::<Result<_, _>>()
                        .map_err(|e| invalid(path, e))?
                } else {
                    let one = section.ring_sun_ratio.as_deref().unwrap_or("2");
                    let r = parse_frac(one).map_err(|e| invalid(path, e))?;
                    vec![r; section.n_pg]
                };
                let pgs = ratios
                    .into_iter()
                    .enumerate()
                    .map(|(k, r)| PgSet::new(k, Frac::from_integer(1.into()), r))
                    .collect::<Result<_, _>>()
                    .map_err(|e| invalid(path, e))?;
                GearTrain { pgs }
            }
        };
        let placement = match &file.placement {
            None => default_placement(),
            Some(p) => Placement {
                engine: Node::parse(&p.engine).map_err(|e| invalid(path, e))?,
                mg1: Node::parse(&p.mg1).map_err(|e| invalid(path, e))?,
                mg2: Node::parse(&p.mg2).map_err(|e| invalid(path, e))?,
                output: Node::parse(&p.output).map_err(|e| invalid(path, e))?,
            },
        };
        let base = Configuration {
            train,
            placement,
            permanent: vec![],
        };
        base.validate().map_err(|e| invalid(path, e))?;

        let mut plant = match file.paths.as_ref().and_then(|p| p.map_dir.as_ref()) {
            Some(dir) => Plant::load_maps(dir).map_err(|e| invalid(path, e))?,
            None => Plant::surrogate(),
        };
        if let Some(vehicle) = &file.vehicle {
            plant.vehicle = vehicle.clone();
        }
        if let Some(battery) = &file.battery {
            plant.battery = battery.clone();
        }
        plant.validate().map_err(|e| invalid(path, e))?;

        let inertias = resolve_inertias(
            file.inertias.as_ref().unwrap_or(&InertiaSection::default()),
            &plant.vehicle,
            base.train.n_nodes(),
        )
        .map_err(|e| invalid(path, e))?;
        inertias
            .validate(base.train.n_nodes())
            .map_err(|e| invalid(path, e))?;

        let mut pears = PearsConfig::default();
        if let Some(s) = &file.search {
            if let Some(v) = s.speed_bin_kmh {
                pears.speed_bin_mps = v * crate::plant::KMH;
            }
            if let Some(v) = s.torque_bin_nm {
                pears.torque_bin_nm = v;
            }
            if let Some(v) = s.engine_speed_step_rpm {
                pears.engine_speed_step = v * RPM;
            }
            if let Some(v) = s.engine_torque_step_nm {
                pears.engine_torque_step = v;
            }
            if let Some(v) = s.mg_torque_step_nm {
                pears.mg_torque_step = v;
            }
            if let Some(v) = s.free_speed_step_rpm {
                pears.free_speed_step = v * RPM;
            }
        }
        let mut dp = DpConfig {
            soc_min: plant.battery.soc_min,
            soc_max: plant.battery.soc_max,
            ..DpConfig::default()
        };
        if let Some(s) = &file.scheduler {
            if let Some(v) = s.soc_step {
                dp.soc_step = v;
            }
            if let Some(v) = s.soc_initial {
                dp.soc_initial = v;
            }
            if let Some(v) = s.soc_desired {
                dp.soc_desired = v;
            }
            if let Some(v) = s.alpha {
                dp.alpha = v;
            }
            if let Some(v) = s.beta {
                dp.beta = v;
            }
            if let Some(v) = s.shift_weights {
                dp.shift_weights = v;
            }
            if s.snap_soc == Some(true) {
                dp.rounding = SocRounding::Snap;
            }
        }
        dp.validate().map_err(|e| invalid(path, e))?;
        let mut launch = LaunchConfig::default();
        if let Some(s) = &file.launch {
            if let Some(v) = s.accept_s {
                launch.accept_s = v;
            }
            if let Some(v) = s.benchmark_s {
                launch.benchmark_s = v;
            }
            if let Some(v) = s.battery_cap {
                launch.battery_cap = v;
            }
            if let Some(v) = s.reflected_inertia {
                launch.reflected_inertia = v;
            }
        }
        let cache_dir = file
            .paths
            .as_ref()
            .and_then(|p| p.cache_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".powersplit-cache"));
        let cycle_dir = file.paths.as_ref().and_then(|p| p.cycle_dir.clone());
        let benchmark = match file
            .paths
            .as_ref()
            .and_then(|p| p.benchmark_design.as_ref())
        {
            Some(rel) => {
                let resolved = if rel.is_absolute() {
                    rel.clone()
                } else {
                    path.parent().unwrap_or(Path::new(".")).join(rel)
                };
                let text = std::fs::read_to_string(&resolved).map_err(|e| ConfigError::Io {
                    path: resolved.display().to_string(),
                    source: e,
                })?;
                toml::from_str(&text).map_err(|e| invalid(&resolved, e))?
            }
            None => builtin_benchmark(),
        };
        let digest = crate::combi::fnv128(raw_text.as_bytes());
        Ok(Self {
            base,
            inertias,
            plant,
            pears,
            dp,
            launch,
            cache_dir,
            cycle_dir,
            reference: file.reference.unwrap_or_default(),
            benchmark,
            digest,
        })
    }

    /// Hydrates the benchmark design against this context.
    pub fn benchmark_design(&self) -> Result<(String, Design), ConfigError> {
        let mut config = self.base.clone();
        config.permanent = self.benchmark.permanent.clone();
        let design = Design::from_parts(config, self.benchmark.clutches.clone(), &self.inertias)
            .map_err(|e| invalid(Path::new("<benchmark>"), e))?;
        Ok((self.benchmark.name.clone(), design))
    }

    /// Loads a drive cycle: a file under `cycle_dir` when configured and
    /// present, the built-in profile otherwise.
    pub fn cycle(&self, name: &str) -> Result<DriveCycle, ConfigError> {
        if let Some(dir) = &self.cycle_dir {
            let path = dir.join(format!("{name}.csv"));
            if path.is_file() {
                return DriveCycle::from_file(&path).map_err(|e| invalid(&path, e));
            }
        }
        DriveCycle::builtin(name).map_err(|e| invalid(Path::new(name), e))
    }

    /// Loads and hydrates a design file against this context.
    pub fn design(&self, path: &Path) -> Result<(String, Design), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let file: DesignFile = toml::from_str(&text).map_err(|e| invalid(path, e))?;
        let mut config = self.base.clone();
        config.permanent = file.permanent.clone();
        let design = Design::from_parts(config, file.clutches.clone(), &self.inertias)
            .map_err(|e| invalid(path, e))?;
        Ok((file.name, design))
    }
}

/// The shipped four-clutch benchmark transmission.
pub fn builtin_benchmark() -> DesignFile {
    toml::from_str(include_str!("../../assets/designs/benchmark_4cl.toml"))
        .expect("bundled benchmark parses")
}

/// The shipped device arrangement: engine and MG1 on the first set, MG2 on
/// the second, output on the third carrier.
pub fn default_placement() -> Placement {
    Placement {
        engine: Node(2), // PG1.ring
        mg1: Node(0),    // PG1.sun
        mg2: Node(3),    // PG2.sun
        output: Node(7), // PG3.carrier
    }
}

fn resolve_inertias(
    section: &InertiaSection,
    vehicle: &VehicleParams,
    n_nodes: usize,
) -> Result<Inertias, String> {
    let parse_or = |field: &Option<String>, default: Frac| -> Result<Frac, String> {
        match field {
            Some(s) => parse_frac(s),
            None => Ok(default),
        }
    };
    let engine = parse_or(&section.engine, parse_frac("0.22")?)?;
    let mg1 = parse_or(&section.mg1, parse_frac("0.05")?)?;
    let mg2 = parse_or(&section.mg2, parse_frac("0.05")?)?;
    let node = parse_or(&section.node_parasitic, parse_frac("0.001")?)?;
    let vehicle_at_output = match &section.vehicle_at_output {
        Some(s) => parse_frac(s)?,
        None => reflected_vehicle_inertia(vehicle)
            .ok_or_else(|| "vehicle parameters not representable".to_string())?,
    };
    Ok(Inertias {
        engine,
        mg1,
        mg2,
        vehicle_at_output,
        node: vec![node; n_nodes],
    })
}

/// Exact rational m * r^2 / fd^2 from the chassis parameters. Floats are
/// rationalized through their shortest decimal form, so 0.4 becomes 2/5.
pub fn reflected_vehicle_inertia(vehicle: &VehicleParams) -> Option<Frac> {
    let m = decimal_rational(vehicle.mass_kg)?;
    let r = decimal_rational(vehicle.tire_radius_m)?;
    let fd = decimal_rational(vehicle.final_drive)?;
    Some(m * &r * &r / (&fd * &fd))
}

fn decimal_rational(v: f64) -> Option<Frac> {
    if !v.is_finite() {
        return None;
    }
    parse_frac(&format!("{v}")).ok()
}
