//! Single-design analysis: drive-cycle fuel economy, launch time, mode
//! usage, shift traces and export tables, plus the two-design comparison
//! and the scheduler weight calibration procedure.

use super::config::RunContext;
use crate::cycle::DriveCycle;
use crate::designs::Design;
use crate::dp::{self, DpConfig, DpSolution};
use crate::launch::{self, EnvelopeCache};
use crate::pears::{self, ModeKinematics, PearsTable};
use crate::rational::frac_str;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("design has no usable modes: {0}")]
    NoModes(String),
    #[error("cycle {cycle}: {message}")]
    Cycle { cycle: String, message: String },
}

/// Results of one design on one cycle.
#[derive(Debug, Clone)]
pub struct CycleReport {
    pub cycle: String,
    pub mpg: f64,
    pub fuel_g: f64,
    pub solution: DpSolution,
}

/// The full single-design report.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub name: String,
    pub accel_s: f64,
    pub cycles: Vec<CycleReport>,
    pub weighted_mpg: Option<f64>,
}

/// Builds the efficiency table for one design/cycle pair.
pub fn table_for(ctx: &RunContext, kins: &[ModeKinematics], cycle: &DriveCycle) -> PearsTable {
    let grid = pears::build_stc_grid(cycle, &ctx.plant, &ctx.pears);
    pears::build_table(kins, grid, &ctx.plant, &ctx.pears)
}

/// Versioned on-disk table cache, keyed by design signature, cycle content
/// and grid settings. Corrupt or stale entries are rebuilt silently.
pub fn table_for_cached(
    ctx: &RunContext,
    design: &Design,
    kins: &[ModeKinematics],
    cycle: &DriveCycle,
) -> PearsTable {
    const VERSION: u32 = 1;
    let key_text = format!(
        "v{VERSION};{};{};{:#x};{:#x};{:#x}",
        design.signature().to_hex(),
        cycle.name,
        crate::combi::fnv128(cycle.to_dsv().as_bytes()),
        ctx.pears.digest(),
        ctx.digest,
    );
    let key = crate::combi::fnv128(key_text.as_bytes());
    let dir = ctx.cache_dir.join("tables");
    let path = dir.join(format!("{key:032x}.json"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(table) = serde_json::from_str::<PearsTable>(&text) {
            if table.grid.sample_cell.len() == cycle.len() {
                return table;
            }
        }
    }
    let table = table_for(ctx, kins, cycle);
    if std::fs::create_dir_all(&dir).is_ok() {
        if let Ok(text) = serde_json::to_string(&table) {
            let _ = std::fs::write(&path, text);
        }
    }
    table
}

/// Analyzes one design over the named cycles. The composite rating is
/// computed when both `fuds` and `hwfet` are present.
pub fn analyze_design(
    ctx: &RunContext,
    name: &str,
    design: &Design,
    cycles: &[DriveCycle],
) -> Result<DesignReport, AnalyzeError> {
    let kins =
        ModeKinematics::from_design(design).map_err(|e| AnalyzeError::NoModes(e.to_string()))?;
    let cache = EnvelopeCache::new();
    let envelope = launch::design_envelope(design, &kins, &ctx.plant, &ctx.launch, &cache);
    let accel_s = launch::accel_time(&envelope, &ctx.plant, &ctx.launch);
    let mut reports = Vec::new();
    for cycle in cycles {
        let table = table_for_cached(ctx, design, &kins, cycle);
        let solution =
            dp::solve(&table, cycle, &ctx.dp, None).map_err(|e| AnalyzeError::Cycle {
                cycle: cycle.name.clone(),
                message: e.to_string(),
            })?;
        reports.push(CycleReport {
            cycle: cycle.name.clone(),
            mpg: dp::fuel_economy_mpg(solution.total_fuel_g, cycle.distance_m()),
            fuel_g: solution.total_fuel_g,
            solution,
        });
    }
    let city = reports.iter().find(|r| r.cycle == "fuds").map(|r| r.mpg);
    let highway = reports.iter().find(|r| r.cycle == "hwfet").map(|r| r.mpg);
    let weighted_mpg = match (city, highway) {
        (Some(c), Some(h)) => Some(dp::weighted_fuel_economy(c, h)),
        _ => None,
    };
    Ok(DesignReport {
        name: name.to_string(),
        accel_s,
        cycles: reports,
        weighted_mpg,
    })
}

/// Renders a report as a structured-text summary.
pub fn render_report(report: &DesignReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "design: {}", report.name);
    let _ = writeln!(s, "0-100 km/h: {:.2} s", report.accel_s);
    for c in &report.cycles {
        let _ = writeln!(
            s,
            "{:>6}: {:6.2} mpg  fuel {:7.1} g  soc_f {:.4}  shifts {:3}  engine-off {:4.1}%",
            c.cycle,
            c.mpg,
            c.fuel_g,
            c.solution.soc_final,
            c.solution.shift_count,
            c.solution.ev_share * 100.0
        );
    }
    if let Some(w) = report.weighted_mpg {
        let _ = writeln!(
            s,
            "weighted (city {:.0}/highway {:.0}): {:.2} mpg",
            crate::plant::defaults::CITY_WEIGHT * 100.0,
            crate::plant::defaults::HIGHWAY_WEIGHT * 100.0,
            w
        );
    }
    s
}

/// Side-by-side comparison of two designs, per cycle, with improvement
/// percentages of the first over the second.
pub fn render_comparison(a: &DesignReport, b: &DesignReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>12} {:>12} {:>12}",
        "cycle", a.name, b.name, "improvement"
    );
    for ca in &a.cycles {
        if let Some(cb) = b.cycles.iter().find(|c| c.cycle == ca.cycle) {
            let _ = writeln!(
                s,
                "{:<8} {:>9.2} mpg {:>9.2} mpg {:>+11.2}%",
                ca.cycle,
                ca.mpg,
                cb.mpg,
                (ca.mpg / cb.mpg - 1.0) * 100.0
            );
        }
    }
    let _ = writeln!(
        s,
        "{:<8} {:>10.2} s {:>10.2} s {:>+11.2}%",
        "0-100",
        a.accel_s,
        b.accel_s,
        (1.0 - a.accel_s / b.accel_s) * 100.0
    );
    if let (Some(wa), Some(wb)) = (a.weighted_mpg, b.weighted_mpg) {
        let _ = writeln!(
            s,
            "{:<8} {:>9.2} mpg {:>9.2} mpg {:>+11.2}%",
            "weighted",
            wa,
            wb,
            (wa / wb - 1.0) * 100.0
        );
    }
    s
}

/// Mode report rows: engaged clutches, exact matrix, dof, class and set
/// memberships.
pub fn mode_report(design: &Design) -> String {
    let sets = crate::modes::mode_sets(&design.modes);
    let mut s = String::from("mode\tengaged\tdof\ttype\tbackward_set\tecvt_set\ta_star\n");
    for (i, mode) in design.modes.iter().enumerate() {
        let engaged: Vec<String> = mode.engaged.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            i,
            engaged.join(","),
            mode.a_star.dof(),
            mode.mode_type.code(),
            sets.backward.contains(&i),
            sets.ecvt.contains(&i),
            mode.a_star.canonical_string()
        );
    }
    s
}

/// Gear-ratio summary of a design's fixed-gear modes, as exact fractions.
pub fn gear_ratios(design: &Design) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (i, mode) in design.modes.iter().enumerate() {
        if mode.a_star.dof() == 1 {
            if let Ok(rel) = crate::dynamics::speed_map(&mode.a_star) {
                if let Some(r) = rel.engine_ratio() {
                    out.push((i, frac_str(r)));
                }
            }
        }
    }
    out
}

/// Per-stage schedule export: the data behind the trajectory figures.
pub fn solution_trace(cycle: &DriveCycle, report: &CycleReport) -> String {
    let mut s = String::from("t_s\tspeed_mps\tmode\tengine_on\tsoc\tfuel_g_per_s\n");
    for (k, stage) in report.solution.stages.iter().enumerate() {
        let _ = writeln!(
            s,
            "{}\t{:.3}\t{}\t{}\t{:.5}\t{:.4}",
            k,
            cycle.speeds_mps[k],
            stage.mode,
            stage.engine_on as u8,
            stage.soc,
            stage.fuel_g_per_s
        );
    }
    s
}

/// Mode-usage table: share of time per mode plus the engine-off share.
pub fn usage_table(report: &CycleReport) -> String {
    let mut s = String::from("mode\tshare\n");
    for (i, share) in report.solution.mode_usage.iter().enumerate() {
        let _ = writeln!(s, "{i}\t{:.4}", share);
    }
    let _ = writeln!(s, "engine_off\t{:.4}", report.solution.ev_share);
    s
}

/// Calibration result: the scheduler weights found and their achieved
/// metrics.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub alpha: f64,
    pub beta: f64,
    pub shift_count: usize,
    pub shift_interval_s: f64,
    pub soc_error: f64,
}

/// Tunes beta upward until the terminal SOC lands within `soc_tol` of its
/// target, then alpha upward until shifts are sparser than
/// `min_shift_interval_s`, re-checking beta at each step. Deterministic
/// ladder search; returns the first satisfying pair or the best effort.
pub fn calibrate_weights(
    ctx: &RunContext,
    design: &Design,
    cycle: &DriveCycle,
    soc_tol: f64,
    min_shift_interval_s: f64,
) -> Result<Calibration, AnalyzeError> {
    let kins =
        ModeKinematics::from_design(design).map_err(|e| AnalyzeError::NoModes(e.to_string()))?;
    let table = table_for(ctx, &kins, cycle);
    let betas = [ctx.dp.beta, 1e6, 5e6, 2e7, 1e8];
    let alphas = [ctx.dp.alpha, 1e-3, 5e-3, 2e-2, 1e-1];
    let solve_with = |alpha: f64, beta: f64| -> Result<DpSolution, AnalyzeError> {
        let cfg = DpConfig {
            alpha,
            beta,
            ..ctx.dp.clone()
        };
        dp::solve(&table, cycle, &cfg, None).map_err(|e| AnalyzeError::Cycle {
            cycle: cycle.name.clone(),
            message: e.to_string(),
        })
    };
    let mut best: Option<Calibration> = None;
    for &alpha in &alphas {
        for &beta in &betas {
            let sol = solve_with(alpha, beta)?;
            let soc_error = (sol.soc_final - ctx.dp.soc_desired).abs();
            let shift_interval_s = if sol.shift_count == 0 {
                f64::INFINITY
            } else {
                cycle.duration_s() / sol.shift_count as f64
            };
            let candidate = Calibration {
                alpha,
                beta,
                shift_count: sol.shift_count,
                shift_interval_s,
                soc_error,
            };
            let ok = soc_error <= soc_tol && shift_interval_s >= min_shift_interval_s;
            if ok {
                return Ok(candidate);
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    (soc_error <= soc_tol) as u8 > (b.soc_error <= soc_tol) as u8
                        || shift_interval_s > b.shift_interval_s
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    Ok(best.expect("at least one calibration candidate"))
}
