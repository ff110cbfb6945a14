//! Fuel economy of one design on the city cycle, end to end: speed-torque
//! cells, the per-cell efficiency table, the mode schedule, and the usage
//! statistics behind it.
//!
//! ```bash
//! cargo run --release --example fuel_economy
//! ```

use powersplit::dp::{self};
use powersplit::pears::{self, ModeKinematics};
use powersplit::pipeline::RunContext;
use powersplit::plant::KMH;
use std::path::Path;
use std::time::Instant;

fn main() {
    let ctx = RunContext::default_context();
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/designs");
    let (name, design) = ctx.design(&assets.join("benchmark_4cl.toml")).unwrap();
    let kins = ModeKinematics::from_design(&design).unwrap();
    let cycle = ctx.cycle("fuds").unwrap();
    println!(
        "{name} on {}: {} samples, {:.2} km, mean {:.1} km/h",
        cycle.name,
        cycle.len(),
        cycle.distance_m() / 1000.0,
        cycle.mean_speed() / KMH
    );

    let t0 = Instant::now();
    let grid = pears::build_stc_grid(&cycle, &ctx.plant, &ctx.pears);
    println!(
        "{} occupied speed-torque cells (built in {:.1?})",
        grid.cells.len(),
        t0.elapsed()
    );
    let t0 = Instant::now();
    let table = pears::build_table(&kins, grid, &ctx.plant, &ctx.pears);
    println!("efficiency table in {:.1?}", t0.elapsed());

    // A peek at the best operating points of the busiest cell.
    let busiest = (0..table.grid.cells.len())
        .max_by_key(|&i| table.grid.cells[i].weight)
        .unwrap();
    let cell = &table.grid.cells[busiest];
    println!(
        "busiest cell: {:.1} km/h, {:.0} N*m, {} samples",
        cell.speed_mps / KMH,
        cell.torque_nm,
        cell.weight
    );
    if let Some((mode, delta)) = table.best_ev[busiest] {
        println!("  best engine-off: mode {mode}, efficiency {delta:.3}");
    }
    if let Some((mode, delta)) = table.best_hybrid[busiest] {
        let p = table.entry(busiest, mode).hybrid.unwrap();
        println!(
            "  best engine-on: mode {mode}, efficiency {delta:.3} at {:.0} rpm / {:.0} N*m",
            p.omega_e * 30.0 / std::f64::consts::PI,
            p.t_e
        );
    }

    let t0 = Instant::now();
    let solution = dp::solve(&table, &cycle, &ctx.dp, None).unwrap();
    println!("schedule solved in {:.1?}", t0.elapsed());
    println!(
        "fuel {:.1} g ({:.2} L), {:.2} mpg, terminal SOC {:.4}, {} mode shifts",
        solution.total_fuel_g,
        solution.fuel_liters(),
        dp::fuel_economy_mpg(solution.total_fuel_g, cycle.distance_m()),
        solution.soc_final,
        solution.shift_count
    );
    println!("engine-off share: {:.1}%", solution.ev_share * 100.0);
    for (mode, share) in solution.mode_usage.iter().enumerate() {
        if *share > 0.0 {
            println!(
                "  mode {mode} ({}): {:.1}%",
                design.modes[mode].mode_type,
                share * 100.0
            );
        }
    }
}
