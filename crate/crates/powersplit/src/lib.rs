//! Exhaustive search and optimization of multi-planetary-gear power-split
//! hybrid powertrains.
//!
//! The crate models any planetary-gear transmission with rigid connections,
//! derives every clutch mode's exact dynamics, screens full design spaces by
//! launch performance, and ranks survivors by fuel economy using a
//! power-weighted-efficiency table with a dynamic-programming mode scheduler.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```bash
//! cargo run --example counts            # size of the clutch/mode/design space
//! cargo run --example gear_dynamics     # exact characteristic matrix of a mode
//! cargo run --example mode_census       # enumerate, dedup and classify modes
//! cargo run --example benchmark_compare # two transmissions over three cycles
//! cargo run --example launch_screen     # tractive envelopes and 0-100 km/h
//! cargo run --example fuel_economy      # efficiency table + mode scheduling
//! cargo run --example partition_search  # a slice of the full design sweep
//! cargo run --example tune_weights      # scheduler weight calibration
//! ```
//!
//! The same functionality is scriptable through the thin `powersplit` binary
//! (`counts`, `analyze`, `search`, `calibrate`, `export-report`).

pub mod combi;
pub mod cycle;
pub mod designs;
pub mod dp;
pub mod dynamics;
pub mod launch;
pub mod linalg;
pub mod modes;
pub mod pears;
pub mod pipeline;
pub mod planetary;
pub mod plant;
pub mod rational;

pub use dynamics::{
    assemble_full_dynamics, reduce_with_connections, speed_map, CharacteristicMatrix,
    DynamicsError, KinematicRelation, SpeedBasis, SystemModel,
};
pub use planetary::{
    Configuration, Connection, GearTrain, Inertias, Node, NodeRole, PgSet, Placement, TopologyError,
};
pub use rational::{frac, frac_int, frac_str, parse_frac, Frac};
