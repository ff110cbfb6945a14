//! Orchestration: run configuration, the staged search with resumable
//! checkpoints, and single-design analysis/calibration/export commands.

pub mod analyze;
pub mod config;
pub mod search;

pub use analyze::{analyze_design, calibrate_weights, DesignReport};
pub use config::{ConfigError, DesignFile, ReferenceCounts, RunContext};
pub use search::{FunnelCounts, RunManifest, SearchError, SurvivorRecord};

use crate::combi::binomial;
use crate::designs;
use crate::modes;
use crate::planetary::Node;
use std::fmt::Write as _;

/// The combinatorial sizing report: candidate clutches, modes,
/// configurations and designs for the restricted and unrestricted spaces.
pub fn counts_report(n_pg: usize) -> String {
    let n_nodes = 3 * n_pg;
    let output = Node(n_nodes - 2); // a carrier; any non-output choice works
    let catalog = modes::build_clutch_catalog(n_pg, output);
    let n_clutch = catalog.len();
    let n_mode = modes::count_mode_candidates(&catalog, 3..=5);
    let n_conf = designs::configuration_count();
    let unrestricted = designs::count_design_space(n_conf as u64, n_clutch as u64);
    let mut s = String::new();
    let _ = writeln!(s, "planetary sets:            {n_pg}");
    let _ = writeln!(s, "candidate clutches:        {n_clutch}");
    let _ = writeln!(s, "candidate modes (3-5):     {n_mode}");
    if n_pg == 3 {
        let _ = writeln!(s, "device configurations:     {n_conf}");
        let _ = writeln!(s, "unrestricted designs:      {unrestricted}");
        let restricted: u128 = 81 * (n_clutch as u128 - 2) * binomial(n_clutch as u64 - 3, 3);
        let _ = writeln!(s, "restricted design stream:  {restricted}");
    }
    s
}
