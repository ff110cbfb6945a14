//! The shipped four-clutch benchmark against its two-clutch ECVT subset:
//! per-cycle fuel economy, composite rating and launch time, printed as a
//! side-by-side comparison.
//!
//! ```bash
//! cargo run --release --example benchmark_compare
//! ```

use powersplit::pipeline::{analyze, RunContext};
use std::path::Path;

fn main() {
    let ctx = RunContext::default_context();
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/designs");
    let cycles: Vec<_> = ["fuds", "hwfet", "us06"]
        .iter()
        .map(|name| ctx.cycle(name).unwrap())
        .collect();
    let mut reports = Vec::new();
    for file in ["benchmark_4cl.toml", "ecvt2.toml"] {
        let (name, design) = ctx.design(&assets.join(file)).unwrap();
        println!(
            "{name}: {} modes, gear ratios {:?}",
            design.modes.len(),
            analyze::gear_ratios(&design)
                .iter()
                .map(|(_, r)| r.clone())
                .collect::<Vec<_>>()
        );
        let report = analyze::analyze_design(&ctx, &name, &design, &cycles).unwrap();
        print!("{}", analyze::render_report(&report));
        println!();
        reports.push(report);
    }
    print!("{}", analyze::render_comparison(&reports[0], &reports[1]));
}
