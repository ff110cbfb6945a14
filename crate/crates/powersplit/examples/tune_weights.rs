//! Scheduler weight calibration: how the terminal-SOC weight pulls the
//! final state of charge back to the target, how the shift weight thins
//! mode changes, and the ladder search that picks the shipped defaults.
//!
//! ```bash
//! cargo run --release --example tune_weights
//! ```

use powersplit::dp::{self, DpConfig};
use powersplit::pears::ModeKinematics;
use powersplit::pipeline::{analyze, RunContext};
use std::path::Path;

fn main() {
    let ctx = RunContext::default_context();
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/designs");
    let (name, design) = ctx.design(&assets.join("benchmark_4cl.toml")).unwrap();
    let kins = ModeKinematics::from_design(&design).unwrap();
    let cycle = ctx.cycle("hwfet").unwrap();
    let table = analyze::table_for(&ctx, &kins, &cycle);

    println!("{name} on {}: sweeping the terminal-SOC weight", cycle.name);
    for beta in [0.0, 1e4, 1e5, 1e6, 1e7] {
        let cfg = DpConfig {
            beta,
            ..ctx.dp.clone()
        };
        let sol = dp::solve(&table, &cycle, &cfg, None).unwrap();
        println!(
            "  beta {beta:>8.0e}: soc_f {:.4} (|err| {:.4}), fuel {:.1} g",
            sol.soc_final,
            (sol.soc_final - cfg.soc_desired).abs(),
            sol.total_fuel_g
        );
    }

    println!("sweeping the shift weight");
    for alpha in [0.0, 1e-4, 5e-4, 5e-3, 5e-2] {
        let cfg = DpConfig {
            alpha,
            ..ctx.dp.clone()
        };
        let sol = dp::solve(&table, &cycle, &cfg, None).unwrap();
        let interval = if sol.shift_count == 0 {
            f64::INFINITY
        } else {
            cycle.duration_s() / sol.shift_count as f64
        };
        println!(
            "  alpha {alpha:>7.0e}: {:>3} shifts (every {interval:>5.1} s), fuel {:.1} g",
            sol.shift_count, sol.total_fuel_g
        );
    }

    let calibration = analyze::calibrate_weights(&ctx, &design, &cycle, 0.01, 30.0).unwrap();
    println!(
        "ladder search picks alpha {:.0e}, beta {:.0e}: {} shifts, |soc err| {:.4}",
        calibration.alpha, calibration.beta, calibration.shift_count, calibration.soc_error
    );
}
