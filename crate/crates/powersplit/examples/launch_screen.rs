//! Tractive envelopes and 0-100 km/h times: evaluates the benchmark design
//! mode by mode, prints the combined envelope at a few speeds, then screens
//! a slice of the design stream against the launch thresholds.
//!
//! ```bash
//! cargo run --release --example launch_screen
//! ```

use powersplit::designs::DesignSpace;
use powersplit::launch::{self, EnvelopeCache, LaunchClass};
use powersplit::modes::DynamicsCache;
use powersplit::pears::ModeKinematics;
use powersplit::pipeline::{search, RunContext};
use std::path::Path;
use std::time::Instant;

fn main() {
    let ctx = RunContext::default_context();
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/designs");
    let (name, design) = ctx.design(&assets.join("benchmark_4cl.toml")).unwrap();
    let kins = ModeKinematics::from_design(&design).unwrap();
    let cache = EnvelopeCache::new();
    let envelope = launch::design_envelope(&design, &kins, &ctx.plant, &ctx.launch, &cache);
    println!("{name} tractive envelope (output-node torque):");
    for kmh in [0, 30, 60, 100, 140, 180] {
        let i = kmh as usize; // 1 km/h grid
        match envelope.torque_nm[i] {
            Some(t) => println!(
                "  {kmh:>3} km/h: {t:7.0} N*m via mode {}",
                envelope.mode_id[i].unwrap()
            ),
            None => println!("  {kmh:>3} km/h: no mode usable"),
        }
    }
    let t = launch::accel_time(&envelope, &ctx.plant, &ctx.launch);
    println!("0-100 km/h: {t:.2} s\n");

    // Screen a slice of the stream.
    let space = DesignSpace::new(ctx.base.clone(), ctx.inertias.clone()).unwrap();
    let dyn_cache = DynamicsCache::new();
    let t0 = Instant::now();
    let mut survivors = Vec::new();
    let start = 3_000_000u128;
    let per = space.triples_per_skeleton();
    powersplit::designs::evaluate_stream_range(
        &space,
        &dyn_cache,
        start..start + 50_000,
        |idx, outcome| {
            if outcome.keeps() {
                let skeleton = space.skeleton((idx / per) as usize);
                let triple = powersplit::combi::unrank_combination(
                    skeleton.remaining.len() as u64,
                    3,
                    idx % per,
                );
                survivors.push(search::SurvivorRecord {
                    index: idx,
                    signature: outcome.signature,
                    permanent: skeleton.permanent,
                    clutches: [
                        skeleton.remaining[triple[0]],
                        skeleton.remaining[triple[1]],
                        skeleton.remaining[triple[2]],
                    ],
                    mode_types: vec![],
                });
            }
        },
    );
    println!(
        "stream slice {}..{}: {} screened in ({:.1?})",
        start,
        start + 50_000,
        survivors.len(),
        t0.elapsed()
    );
    let t0 = Instant::now();
    let records = search::run_launch_screen(&ctx, &survivors).unwrap();
    let rate = records.len() as f64 / t0.elapsed().as_secs_f64();
    let better = records
        .iter()
        .filter(|r| r.class == LaunchClass::Better)
        .count();
    let worse = records
        .iter()
        .filter(|r| r.class == LaunchClass::Worse)
        .count();
    println!(
        "launch screen: {} designs at {rate:.0} designs/s -> {better} better, {worse} worse, {} rejected",
        records.len(),
        records.len() - better - worse
    );
    if let Some(fastest) = records.first() {
        println!(
            "fastest: index {} at {:.2} s ({} / {})",
            fastest.survivor.index,
            fastest.accel_s,
            fastest
                .survivor
                .permanent
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
            fastest
                .survivor
                .clutches
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
    }
    let hist_speeds: Vec<f64> = records
        .iter()
        .filter(|r| r.accel_s.is_finite())
        .map(|r| r.accel_s)
        .collect();
    if !hist_speeds.is_empty() {
        let lo = hist_speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = hist_speeds.iter().cloned().fold(0.0, f64::max);
        println!("accel times span {lo:.2}..{hi:.2} s over the slice");
    }
}
